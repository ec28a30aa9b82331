#include "faultscope/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "faultscope/error.hpp"

namespace faultscope {

double iou(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

namespace {

std::vector<std::size_t> confidence_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

template <typename T, typename Pred>
std::vector<T> filter(std::span<const T> items, Pred pred) {
  std::vector<T> out;
  for (const auto& x : items)
    if (pred(x)) out.push_back(x);
  return out;
}

double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

MatchResult match_detections(std::span<const Annotation> truths,
                             std::span<const Detection> detections, double iou_threshold) {
  MatchResult result;
  std::vector<bool> claimed(truths.size(), false);
  for (std::size_t d : confidence_order(detections)) {
    DetectionMatch m{d, std::nullopt, 0.0};
    double best = -1.0;
    for (std::size_t g = 0; g < truths.size(); ++g) {
      if (claimed[g]) continue;
      const double o = iou(truths[g].box, detections[d].annotation.box);
      if (o >= iou_threshold && o > best) {
        best = o;
        m.truth = g;
      }
    }
    if (m.truth) {
      claimed[*m.truth] = true;
      m.iou = best;
      ++result.tp;
    } else {
      ++result.fp;
    }
    result.matches.push_back(m);
  }
  result.fn = truths.size() - result.tp;
  return result;
}

namespace {

struct ClassView {
  std::vector<Annotation> truths;
  std::vector<Detection> detections;
};

ClassView class_view(const ImageEval& img, FaultClass cls, double min_confidence) {
  ClassView v;
  v.truths = filter<Annotation>(img.truths, [&](const Annotation& a) { return a.label == cls; });
  v.detections = filter<Detection>(img.detections, [&](const Detection& d) {
    return d.annotation.label == cls && d.confidence >= min_confidence;
  });
  return v;
}

} // namespace

std::optional<double> average_precision(std::span<const ImageEval> images, FaultClass cls,
                                        double iou_threshold) {
  struct Ranked {
    double confidence;
    bool hit;
  };
  std::vector<Ranked> ranked;
  std::size_t total_truths = 0;
  for (const auto& img : images) {
    const auto v = class_view(img, cls, 0.0);
    total_truths += v.truths.size();
    const auto m = match_detections(v.truths, v.detections, iou_threshold);
    for (const auto& dm : m.matches)
      ranked.push_back({v.detections[dm.detection].confidence, dm.truth.has_value()});
  }
  if (total_truths == 0) return std::nullopt;

  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });

  std::vector<double> recall(ranked.size()), precision(ranked.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].hit) ++tp;
    recall[i] = ratio(tp, total_truths);
    precision[i] = ratio(tp, i + 1);
  }
  // precision envelope: max precision at any rank with recall >= this one
  for (std::size_t i = ranked.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double f1_score(double precision, double recall) noexcept {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

EvalReport evaluate(std::span<const ImageEval> images, double iou_threshold,
                    double confidence_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw InvalidArgument("IoU threshold must lie in (0, 1]");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw InvalidArgument("confidence threshold must lie in [0, 1]");

  EvalReport r;
  r.iou_threshold = iou_threshold;
  r.confidence_threshold = confidence_threshold;
  r.num_images = images.size();

  std::size_t present = 0;
  double ap_sum = 0.0, p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (FaultClass cls : kAllClasses) {
    ClassStats& s = r.per_class[static_cast<std::size_t>(class_id(cls))];
    for (const auto& img : images) {
      for (const auto& a : img.truths) s.num_truths += a.label == cls;
      for (const auto& d : img.detections) s.num_detections += d.annotation.label == cls;
      const auto v = class_view(img, cls, confidence_threshold);
      const auto m = match_detections(v.truths, v.detections, iou_threshold);
      s.tp += m.tp;
      s.fp += m.fp;
      s.fn += m.fn;
    }
    s.precision = ratio(s.tp, s.tp + s.fp);
    s.recall = ratio(s.tp, s.tp + s.fn);
    s.f1 = f1_score(s.precision, s.recall);
    s.ap = average_precision(images, cls, iou_threshold);
    r.tp += s.tp;
    r.fp += s.fp;
    r.fn += s.fn;
    if (s.ap) {
      ++present;
      ap_sum += *s.ap;
      p_sum += s.precision;
      r_sum += s.recall;
      f_sum += s.f1;
    }
  }
  if (present > 0) {
    const auto n = static_cast<double>(present);
    r.map50 = ap_sum / n;
    r.macro_precision = p_sum / n;
    r.macro_recall = r_sum / n;
    r.macro_f1 = f_sum / n;
  }
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (FaultClass cls : kAllClasses) {
    const ClassStats& s = r.per_class[static_cast<std::size_t>(class_id(cls))];
    nlohmann::ordered_json c;
    c["ap"] = s.ap ? nlohmann::ordered_json(*s.ap) : nlohmann::ordered_json(nullptr);
    c["num_truths"] = s.num_truths;
    c["num_detections"] = s.num_detections;
    c["tp"] = s.tp;
    c["fp"] = s.fp;
    c["fn"] = s.fn;
    c["precision"] = s.precision;
    c["recall"] = s.recall;
    c["f1"] = s.f1;
    per_class[std::string(class_name(cls))] = std::move(c);
  }
  nlohmann::ordered_json j;
  j["iou_threshold"] = r.iou_threshold;
  j["confidence_threshold"] = r.confidence_threshold;
  j["num_images"] = r.num_images;
  j["map50"] = r.map50;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["counts"] = {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}};
  j["macro"] = {{"precision", r.macro_precision},
                {"recall", r.macro_recall},
                {"f1", r.macro_f1}};
  j["per_class"] = std::move(per_class);
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.iou_threshold = j.at("iou_threshold").get<double>();
    r.confidence_threshold = j.at("confidence_threshold").get<double>();
    r.num_images = j.at("num_images").get<std::size_t>();
    r.map50 = j.at("map50").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.tp = j.at("counts").at("tp").get<std::size_t>();
    r.fp = j.at("counts").at("fp").get<std::size_t>();
    r.fn = j.at("counts").at("fn").get<std::size_t>();
    r.macro_precision = j.at("macro").at("precision").get<double>();
    r.macro_recall = j.at("macro").at("recall").get<double>();
    r.macro_f1 = j.at("macro").at("f1").get<double>();
    for (FaultClass cls : kAllClasses) {
      const auto& c = j.at("per_class").at(std::string(class_name(cls)));
      ClassStats& s = r.per_class[static_cast<std::size_t>(class_id(cls))];
      if (!c.at("ap").is_null()) s.ap = c.at("ap").get<double>();
      s.num_truths = c.at("num_truths").get<std::size_t>();
      s.num_detections = c.at("num_detections").get<std::size_t>();
      s.tp = c.at("tp").get<std::size_t>();
      s.fp = c.at("fp").get<std::size_t>();
      s.fn = c.at("fn").get<std::size_t>();
      s.precision = c.at("precision").get<double>();
      s.recall = c.at("recall").get<double>();
      s.f1 = c.at("f1").get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string format_report(const EvalReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "images: %zu  IoU threshold: %.2f  confidence threshold: %.2f\n",
                r.num_images, r.iou_threshold, r.confidence_threshold);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %8s %6s %6s %6s %6s %8s %8s %8s\n", "class", "AP@0.5",
                "GT", "TP", "FP", "FN", "PRE", "REC", "F1");
  out += buf;
  for (FaultClass cls : kAllClasses) {
    const ClassStats& s = r.per_class[static_cast<std::size_t>(class_id(cls))];
    char ap[16];
    if (s.ap) std::snprintf(ap, sizeof ap, "%.4f", *s.ap);
    else std::snprintf(ap, sizeof ap, "absent");
    std::snprintf(buf, sizeof buf, "%-10s %8s %6zu %6zu %6zu %6zu %8.4f %8.4f %8.4f\n",
                  std::string(class_name(cls)).c_str(), ap, s.num_truths, s.tp, s.fp, s.fn,
                  s.precision, s.recall, s.f1);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mAP@0.5 %.4f  PRE %.4f  REC %.4f  F1 %.4f  (micro)\n", r.map50,
                r.precision, r.recall, r.f1);
  out += buf;
  std::snprintf(buf, sizeof buf, "                PRE %.4f  REC %.4f  F1 %.4f  (macro)\n",
                r.macro_precision, r.macro_recall, r.macro_f1);
  out += buf;
  return out;
}

} // namespace faultscope
