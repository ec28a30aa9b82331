#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faultscope/annotation.hpp"
#include "json.hpp"

namespace faultscope {

inline constexpr double kDefaultIouThreshold = 0.5;
inline constexpr double kDefaultConfidenceThreshold = 0.25;

/// Intersection over union of two normalized boxes; 0 when disjoint.
double iou(const Box& a, const Box& b) noexcept;

struct DetectionMatch {
  std::size_t detection = 0;             // index into the input detections
  std::optional<std::size_t> truth;      // claimed ground-truth index
  double iou = 0.0;                      // IoU with the claimed truth (0 if none)
};

struct MatchResult {
  std::vector<DetectionMatch> matches;   // in processing (confidence) order
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Greedy matching for one image and one class. Detections are visited by
/// descending confidence (ties keep input order); each claims the unclaimed
/// truth with the highest IoU >= iou_threshold (ties to the lower index),
/// otherwise it is a false positive.
MatchResult match_detections(std::span<const Annotation> truths,
                             std::span<const Detection> detections,
                             double iou_threshold = kDefaultIouThreshold);

/// Ground truth and predictions for one image, all classes mixed.
struct ImageEval {
  std::string name;
  std::vector<Annotation> truths;
  std::vector<Detection> detections;
};

/// All-point interpolated AP for one class over many images. Nullopt when the
/// class has no ground truth.
std::optional<double> average_precision(std::span<const ImageEval> images, FaultClass cls,
                                        double iou_threshold = kDefaultIouThreshold);

struct ClassStats {
  std::optional<double> ap;  // absent when the class has no ground truth
  std::size_t num_truths = 0;
  std::size_t num_detections = 0;  // all confidences
  std::size_t tp = 0, fp = 0, fn = 0;  // at the confidence threshold
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  double iou_threshold = kDefaultIouThreshold;
  double confidence_threshold = kDefaultConfidenceThreshold;
  std::size_t num_images = 0;
  std::array<ClassStats, kNumClasses> per_class{};
  double map50 = 0.0;
  // pooled counts over classes
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  // unweighted mean over classes with ground truth
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

/// 0 when both inputs are 0.
double f1_score(double precision, double recall) noexcept;

/// AP/mAP use every detection; precision, recall and F1 only those with
/// confidence >= confidence_threshold.
EvalReport evaluate(std::span<const ImageEval> images,
                    double iou_threshold = kDefaultIouThreshold,
                    double confidence_threshold = kDefaultConfidenceThreshold);

/// Key order is fixed so serialized reports are byte-stable.
nlohmann::ordered_json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// Human-readable summary table.
std::string format_report(const EvalReport& r);

} // namespace faultscope
