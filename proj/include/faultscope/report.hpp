#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "faultscope/metrics.hpp"

namespace faultscope {

struct ReferenceMetrics {
  double map = 0.0;
  double pre = 0.0;
  double rec = 0.0;
  double f1 = 0.0;
};

using ReferenceKey = std::pair<std::string, std::string>;  // (dataset, model)

/// Published bearing-fault detection results keyed by (dataset, model).
struct ReferenceTable {
  std::map<ReferenceKey, ReferenceMetrics> rows;
  std::string provenance;

  const ReferenceMetrics& at(const ReferenceKey& key) const;
  std::vector<std::string> datasets() const;
  std::vector<std::string> models() const;
};

/// CWRU / PU / IMS x YOLOv9 / YOLOv10 / YOLOv11 / MCNN-LSTM, as fractions.
const ReferenceTable& load_reference_table();

struct MetricDelta {
  std::string metric;
  double user = 0.0;
  double reference = 0.0;
  double delta = 0.0;  // user - reference
};

struct Comparison {
  ReferenceKey key;
  std::vector<MetricDelta> deltas;  // mAP, PRE, REC, F1
};

/// Informational deltas; throws InvalidArgument listing valid keys when the
/// key is unknown.
Comparison compare(const EvalReport& report, const ReferenceKey& key,
                   const ReferenceTable& table = load_reference_table());

std::string format_comparison(const Comparison& c);
nlohmann::ordered_json comparison_to_json(const Comparison& c);

} // namespace faultscope
