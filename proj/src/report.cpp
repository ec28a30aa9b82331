#include "faultscope/report.hpp"

#include <algorithm>
#include <cstdio>

#include "faultscope/error.hpp"

namespace faultscope {

const ReferenceMetrics& ReferenceTable::at(const ReferenceKey& key) const {
  auto it = rows.find(key);
  if (it != rows.end()) return it->second;
  std::string valid;
  for (const auto& [k, v] : rows) valid += "\n  (" + k.first + ", " + k.second + ")";
  throw InvalidArgument("unknown reference key (" + key.first + ", " + key.second +
                        "); valid keys:" + valid);
}

std::vector<std::string> ReferenceTable::datasets() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : rows)
    if (std::find(out.begin(), out.end(), k.first) == out.end()) out.push_back(k.first);
  return out;
}

std::vector<std::string> ReferenceTable::models() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : rows)
    if (std::find(out.begin(), out.end(), k.second) == out.end()) out.push_back(k.second);
  return out;
}

const ReferenceTable& load_reference_table() {
  static const ReferenceTable table = [] {
    ReferenceTable t;
    t.provenance =
        "CWT-spectrogram YOLO bearing fault detection, mAP@0.5 / precision / recall / F1 "
        "on the CWRU, PU and IMS benchmarks";
    t.rows = {
        {{"CWRU", "YOLOv9"}, {0.994, 0.986, 0.985, 0.986}},
        {{"CWRU", "YOLOv10"}, {0.994, 0.992, 0.981, 0.986}},
        {{"CWRU", "YOLOv11"}, {0.990, 0.939, 0.985, 0.962}},
        {{"CWRU", "MCNN-LSTM"}, {0.960, 0.961, 0.961, 0.961}},
        {{"PU", "YOLOv9"}, {0.916, 0.808, 0.848, 0.827}},
        {{"PU", "YOLOv10"}, {0.972, 0.890, 0.927, 0.908}},
        {{"PU", "YOLOv11"}, {0.978, 0.949, 0.938, 0.943}},
        {{"PU", "MCNN-LSTM"}, {0.777, 0.777, 0.774, 0.776}},
        {{"IMS", "YOLOv9"}, {0.995, 0.999, 1.000, 1.000}},
        {{"IMS", "YOLOv10"}, {0.995, 0.999, 1.000, 0.999}},
        {{"IMS", "YOLOv11"}, {0.995, 1.000, 1.000, 1.000}},
        {{"IMS", "MCNN-LSTM"}, {0.968, 0.968, 0.968, 0.968}},
    };
    return t;
  }();
  return table;
}

Comparison compare(const EvalReport& report, const ReferenceKey& key, const ReferenceTable& table) {
  const ReferenceMetrics& ref = table.at(key);
  Comparison c;
  c.key = key;
  c.deltas = {{"mAP@0.5", report.map50, ref.map, report.map50 - ref.map},
              {"PRE", report.precision, ref.pre, report.precision - ref.pre},
              {"REC", report.recall, ref.rec, report.recall - ref.rec},
              {"F1", report.f1, ref.f1, report.f1 - ref.f1}};
  return c;
}

std::string format_comparison(const Comparison& c) {
  std::string out = "reference: " + c.key.first + " / " + c.key.second + "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %10s\n", "metric", "yours", "reference", "delta");
  out += buf;
  for (const auto& d : c.deltas) {
    std::snprintf(buf, sizeof buf, "%-8s %10.4f %10.4f %+10.4f\n", d.metric.c_str(), d.user,
                  d.reference, d.delta);
    out += buf;
  }
  return out;
}

nlohmann::ordered_json comparison_to_json(const Comparison& c) {
  nlohmann::ordered_json j;
  j["dataset"] = c.key.first;
  j["model"] = c.key.second;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& d : c.deltas)
    rows.push_back({{"metric", d.metric}, {"user", d.user}, {"reference", d.reference},
                    {"delta", d.delta}});
  j["metrics"] = std::move(rows);
  return j;
}

} // namespace faultscope
