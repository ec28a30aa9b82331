#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faultscope/cwt.hpp"
#include "faultscope/fault_class.hpp"

namespace faultscope {

/// Axis-aligned box in coordinates normalized to the image (0..1).
struct Box {
  double x_center = 0.5;
  double y_center = 0.5;
  double width = 0.0;
  double height = 0.0;

  double left() const noexcept { return x_center - width / 2; }
  double right() const noexcept { return x_center + width / 2; }
  double top() const noexcept { return y_center - height / 2; }
  double bottom() const noexcept { return y_center + height / 2; }
  double area() const noexcept { return width * height; }

  static Box from_edges(double left, double top, double right, double bottom) noexcept {
    return {(left + right) / 2, (top + bottom) / 2, right - left, bottom - top};
  }
};

struct Annotation {
  FaultClass label = FaultClass::Normal;
  Box box;
};

struct Detection {
  Annotation annotation;
  double confidence = 0.0;
};

/// Slack allowed on the box-inside-image check; covers 6-decimal rounding.
inline constexpr double kBoxTolerance = 1e-6;

/// Empty when valid, else a description of the violated invariant.
std::string box_violation(const Box& box);

void write_labels(std::span<const Annotation> annotations, const std::filesystem::path& path);
void write_predictions(std::span<const Detection> detections,
                       const std::filesystem::path& path);

/// `class x y w h` per line; blank lines are ignored. Throws ParseError with
/// the offending line number.
std::vector<Annotation> parse_labels(const std::filesystem::path& path);
std::vector<Annotation> parse_labels_text(const std::string& text);

/// `class x y w h confidence` per line.
std::vector<Detection> parse_predictions(const std::filesystem::path& path);
std::vector<Detection> parse_predictions_text(const std::string& text);

std::string format_label_line(const Annotation& a);
std::string format_prediction_line(const Detection& d);

/// Margin added on every side of a synthesized box, as a fraction of the image.
inline constexpr double kAnnotationMargin = 0.02;

/// Bounding box of the log-normalized pixels above the energy quantile,
/// padded by kAnnotationMargin and clipped to the image. Throws DataError
/// "no energy concentration" for a constant scalogram.
Annotation synthesize_annotation(const Matrix& coefficients, FaultClass label,
                                 double energy_quantile = 0.90);
inline Annotation synthesize_annotation(const Scalogram& s, FaultClass label,
                                        double energy_quantile = 0.90) {
  return synthesize_annotation(s.coefficients, label, energy_quantile);
}

} // namespace faultscope
