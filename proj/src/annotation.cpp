#include "faultscope/annotation.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "faultscope/error.hpp"
#include "faultscope/render.hpp"

namespace faultscope {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> fields;
  for (std::string f; ss >> f;) fields.push_back(f);
  return fields;
}

double to_real(const std::string& field, const char* what, std::size_t line) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v))
    throw ParseError("non-numeric " + std::string(what) + " '" + field + "'", line);
  return v;
}

FaultClass to_class(const std::string& field, std::size_t line) {
  char* end = nullptr;
  errno = 0;
  const long id = std::strtol(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
    throw ParseError("non-numeric class id '" + field + "'", line);
  auto c = class_from_id(id);
  if (!c) throw ParseError("unknown class id " + std::to_string(id), line);
  return *c;
}

/// Calls `row(fields, line_no)` for every non-blank line.
template <typename F>
void for_each_record(const std::string& text, F&& row) {
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    ++line_no;
    auto fields = split_fields(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (!fields.empty()) row(fields, line_no);
  }
}

Annotation to_annotation(const std::vector<std::string>& f, std::size_t line) {
  Annotation a;
  a.label = to_class(f[0], line);
  a.box = {to_real(f[1], "x_center", line), to_real(f[2], "y_center", line),
           to_real(f[3], "width", line), to_real(f[4], "height", line)};
  if (auto why = box_violation(a.box); !why.empty()) throw ParseError(why, line);
  return a;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

} // namespace

std::string box_violation(const Box& b) {
  if (!(b.width > 0.0 && b.width <= 1.0 + kBoxTolerance))
    return "box width " + fixed6(b.width) + " outside (0, 1]";
  if (!(b.height > 0.0 && b.height <= 1.0 + kBoxTolerance))
    return "box height " + fixed6(b.height) + " outside (0, 1]";
  if (b.left() < -kBoxTolerance || b.right() > 1.0 + kBoxTolerance)
    return "box x-extent [" + fixed6(b.left()) + ", " + fixed6(b.right()) +
           "] outside the image";
  if (b.top() < -kBoxTolerance || b.bottom() > 1.0 + kBoxTolerance)
    return "box y-extent [" + fixed6(b.top()) + ", " + fixed6(b.bottom()) +
           "] outside the image";
  return {};
}

std::string format_label_line(const Annotation& a) {
  return std::to_string(class_id(a.label)) + ' ' + fixed6(a.box.x_center) + ' ' +
         fixed6(a.box.y_center) + ' ' + fixed6(a.box.width) + ' ' + fixed6(a.box.height);
}

std::string format_prediction_line(const Detection& d) {
  return format_label_line(d.annotation) + ' ' + fixed6(d.confidence);
}

void write_labels(std::span<const Annotation> annotations, const std::filesystem::path& path) {
  std::string text;
  for (const auto& a : annotations) {
    if (auto why = box_violation(a.box); !why.empty())
      throw InvalidArgument("refusing to write invalid annotation: " + why);
    text += format_label_line(a);
    text += '\n';
  }
  write_text(path, text);
}

void write_predictions(std::span<const Detection> detections,
                       const std::filesystem::path& path) {
  std::string text;
  for (const auto& d : detections) {
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      throw InvalidArgument("detection confidence outside [0, 1]");
    text += format_prediction_line(d);
    text += '\n';
  }
  write_text(path, text);
}

std::vector<Annotation> parse_labels_text(const std::string& text) {
  std::vector<Annotation> out;
  for_each_record(text, [&](const std::vector<std::string>& f, std::size_t line) {
    if (f.size() != 5)
      throw ParseError("expected 5 fields, found " + std::to_string(f.size()), line);
    out.push_back(to_annotation(f, line));
  });
  return out;
}

std::vector<Detection> parse_predictions_text(const std::string& text) {
  std::vector<Detection> out;
  for_each_record(text, [&](const std::vector<std::string>& f, std::size_t line) {
    if (f.size() != 6)
      throw ParseError("expected 6 fields, found " + std::to_string(f.size()), line);
    Detection d{to_annotation(f, line), to_real(f[5], "confidence", line)};
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      throw ParseError("confidence " + f[5] + " outside [0, 1]", line);
    out.push_back(d);
  });
  return out;
}

std::vector<Annotation> parse_labels(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return parse_labels_text(text);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

std::vector<Detection> parse_predictions(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return parse_predictions_text(text);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

Annotation synthesize_annotation(const Matrix& coefficients, FaultClass label,
                                 double energy_quantile) {
  if (!(energy_quantile > 0.0 && energy_quantile < 1.0))
    throw InvalidArgument("energy quantile must lie in (0, 1)");
  if (coefficients.empty()) throw DataError("no energy concentration (empty scalogram)");
  const Matrix norm = log_normalize(coefficients);
  const auto& v = norm.data();
  if (*std::max_element(v.begin(), v.end()) <= 0.0)
    throw DataError("no energy concentration");

  std::vector<double> sorted = v;
  const auto k = static_cast<std::size_t>(
      std::floor(energy_quantile * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = sorted[k];
  // When the quantile sits on the maximum, fall back to pixels equal to it.
  const bool inclusive = threshold >= 1.0;

  std::size_t r0 = norm.rows(), r1 = 0, c0 = norm.cols(), c1 = 0;
  for (std::size_t r = 0; r < norm.rows(); ++r)
    for (std::size_t c = 0; c < norm.cols(); ++c) {
      const double p = norm(r, c);
      if (p > threshold || (inclusive && p >= threshold)) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }

  const double h = static_cast<double>(norm.rows()), w = static_cast<double>(norm.cols());
  const double left = std::max(0.0, static_cast<double>(c0) / w - kAnnotationMargin);
  const double right = std::min(1.0, static_cast<double>(c1 + 1) / w + kAnnotationMargin);
  const double top = std::max(0.0, static_cast<double>(r0) / h - kAnnotationMargin);
  const double bottom = std::min(1.0, static_cast<double>(r1 + 1) / h + kAnnotationMargin);
  return Annotation{label, Box::from_edges(left, top, right, bottom)};
}

} // namespace faultscope
