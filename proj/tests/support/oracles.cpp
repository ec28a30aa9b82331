#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace oracle {

using faultscope::Box;

faultscope::Matrix naive_cwt(const std::vector<double>& x, const std::vector<double>& scales) {
  const std::size_t n = x.size();
  faultscope::Matrix out(scales.size(), n);
  for (std::size_t r = 0; r < scales.size(); ++r) {
    const long double a = scales[r];
    for (std::size_t b = 0; b < n; ++b) {
      long double acc = 0.0L;
      for (std::size_t t = 0; t < n; ++t) {
        const long double u = (static_cast<long double>(t) - static_cast<long double>(b)) / a;
        if (std::fabs(static_cast<long double>(t) - static_cast<long double>(b)) > 6.0L * a) continue;
        acc += x[t] * std::exp(-u * u / 2.0L) * std::cos(5.0L * u);
      }
      out(r, b) = static_cast<double>(acc / std::sqrt(a));
    }
  }
  return out;
}

std::size_t count_bursts(const std::vector<double>& x, double threshold, std::size_t gap) {
  std::size_t bursts = 0;
  bool seen = false;
  std::size_t last = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::fabs(x[i]) < threshold) continue;
    if (!seen || i - last > gap) ++bursts;
    seen = true;
    last = i;
  }
  return bursts;
}

std::array<std::size_t, 3> brute_force_apportion(std::size_t n, const std::array<double, 3>& r) {
  std::array<std::size_t, 3> best{};
  double best_err = std::numeric_limits<double>::infinity();
  // iterate train descending, then val descending, so ties keep earlier splits larger
  for (std::size_t a = n + 1; a-- > 0;)
    for (std::size_t b = n - a + 1; b-- > 0;) {
      const std::size_t c = n - a - b;
      const double qa = r[0] * n, qb = r[1] * n, qc = r[2] * n;
      const double err = (a - qa) * (a - qa) + (b - qb) * (b - qb) + (c - qc) * (c - qc);
      if (err < best_err - 1e-12) {
        best_err = err;
        best = {a, b, c};
      }
    }
  return best;
}

double box_iou(const Box& a, const Box& b) {
  const double ax0 = a.x_center - a.width / 2, ax1 = a.x_center + a.width / 2;
  const double ay0 = a.y_center - a.height / 2, ay1 = a.y_center + a.height / 2;
  const double bx0 = b.x_center - b.width / 2, bx1 = b.x_center + b.width / 2;
  const double by0 = b.y_center - b.height / 2, by1 = b.y_center + b.height / 2;
  const double w = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double h = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = w * h;
  const double uni = a.width * a.height + b.width * b.height - inter;
  return uni > 0 ? inter / uni : 0.0;
}

GreedyOutcome greedy_match(const std::vector<Box>& gts, const std::vector<Box>& dets,
                           const std::vector<double>& conf, double thr) {
  std::vector<std::vector<double>> m(dets.size(), std::vector<double>(gts.size()));
  for (std::size_t d = 0; d < dets.size(); ++d)
    for (std::size_t g = 0; g < gts.size(); ++g) m[d][g] = box_iou(dets[d], gts[g]);

  // selection-sort style ordering: repeatedly take the highest remaining
  // confidence, earliest index first
  std::vector<bool> used(dets.size(), false);
  GreedyOutcome out;
  out.claimed_by.assign(gts.size(), -1);
  for (std::size_t step = 0; step < dets.size(); ++step) {
    int pick = -1;
    for (std::size_t d = 0; d < dets.size(); ++d)
      if (!used[d] && (pick < 0 || conf[d] > conf[static_cast<std::size_t>(pick)])) pick = static_cast<int>(d);
    used[static_cast<std::size_t>(pick)] = true;
    int best_g = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (out.claimed_by[g] >= 0) continue;
      const double v = m[static_cast<std::size_t>(pick)][g];
      if (v < thr) continue;
      if (best_g < 0 || v > m[static_cast<std::size_t>(pick)][static_cast<std::size_t>(best_g)]) best_g = static_cast<int>(g);
    }
    if (best_g >= 0) {
      out.claimed_by[static_cast<std::size_t>(best_g)] = pick;
      ++out.tp;
    } else {
      ++out.fp;
    }
  }
  out.fn = gts.size() - out.tp;
  return out;
}

namespace {

struct PerClass {
  std::vector<std::vector<Box>> gts, dets;
  std::vector<std::vector<double>> conf;
};

PerClass slice(const std::vector<faultscope::ImageEval>& images, int cls, double min_conf) {
  PerClass p;
  for (const auto& img : images) {
    std::vector<Box> g, d;
    std::vector<double> c;
    for (const auto& a : img.truths)
      if (static_cast<int>(a.label) == cls) g.push_back(a.box);
    for (const auto& det : img.detections)
      if (static_cast<int>(det.annotation.label) == cls && det.confidence >= min_conf) {
        d.push_back(det.annotation.box);
        c.push_back(det.confidence);
      }
    p.gts.push_back(g);
    p.dets.push_back(d);
    p.conf.push_back(c);
  }
  return p;
}

std::array<std::size_t, 3> counts_at(const PerClass& p, double thr, double min_conf) {
  std::array<std::size_t, 3> tfp{0, 0, 0};
  for (std::size_t i = 0; i < p.gts.size(); ++i) {
    std::vector<Box> d;
    std::vector<double> c;
    for (std::size_t k = 0; k < p.dets[i].size(); ++k)
      if (p.conf[i][k] >= min_conf) {
        d.push_back(p.dets[i][k]);
        c.push_back(p.conf[i][k]);
      }
    const auto o = greedy_match(p.gts[i], d, c, thr);
    tfp[0] += o.tp;
    tfp[1] += o.fp;
    tfp[2] += o.fn;
  }
  return tfp;
}

} // namespace

MetricOracle brute_force_metrics(const std::vector<faultscope::ImageEval>& images, double thr,
                                 double conf_thr) {
  MetricOracle out;
  double ap_sum = 0.0;
  std::size_t present = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int cls = 0; cls < 4; ++cls) {
    const PerClass all = slice(images, cls, 0.0);
    std::size_t n_gt = 0;
    for (const auto& g : all.gts) n_gt += g.size();

    const auto at_thr = counts_at(all, thr, conf_thr);
    tp += at_thr[0];
    fp += at_thr[1];
    fn += at_thr[2];

    if (n_gt == 0) continue;
    std::set<double, std::greater<>> levels;
    for (const auto& c : all.conf) levels.insert(c.begin(), c.end());
    // (recall, precision) at every threshold level
    std::vector<std::pair<double, double>> pts;
    for (double level : levels) {
      const auto c = counts_at(all, thr, level);
      const double prec = static_cast<double>(c[0]) / static_cast<double>(c[0] + c[1]);
      const double rec = static_cast<double>(c[0]) / static_cast<double>(n_gt);
      pts.emplace_back(rec, prec);
    }
    // area under the envelope p(r) = max precision over points with recall >= r
    std::set<double> recalls;
    for (const auto& pt : pts) recalls.insert(pt.first);
    double ap = 0.0, prev = 0.0;
    for (double r : recalls) {
      double best = 0.0;
      for (const auto& pt : pts)
        if (pt.first >= r) best = std::max(best, pt.second);
      ap += (r - prev) * best;
      prev = r;
    }
    out.ap[static_cast<std::size_t>(cls)] = ap;
    ap_sum += ap;
    ++present;
  }
  out.map = present ? ap_sum / static_cast<double>(present) : 0.0;
  out.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.f1 = out.precision + out.recall > 0
               ? 2 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

Box random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> size(0.05, 0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = size(rng), h = size(rng);
  const double x = w / 2 + unit(rng) * (1 - w);
  const double y = h / 2 + unit(rng) * (1 - h);
  return {x, y, w, h};
}

std::vector<faultscope::ImageEval> random_scenes(std::mt19937_64& rng, std::size_t images,
                                                 std::size_t max_gt, std::size_t max_det) {
  std::uniform_int_distribution<int> cls(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.08, 0.08);
  std::vector<faultscope::ImageEval> out(images);
  for (auto& img : out) {
    const auto ng = std::uniform_int_distribution<std::size_t>(0, max_gt)(rng);
    const auto nd = std::uniform_int_distribution<std::size_t>(0, max_det)(rng);
    for (std::size_t i = 0; i < ng; ++i)
      img.truths.push_back({static_cast<faultscope::FaultClass>(cls(rng)), random_box(rng)});
    for (std::size_t i = 0; i < nd; ++i) {
      faultscope::Detection d;
      // half the detections are perturbed copies of a truth, the rest random
      if (!img.truths.empty() && unit(rng) < 0.5) {
        const auto& t = img.truths[std::uniform_int_distribution<std::size_t>(0, img.truths.size() - 1)(rng)];
        Box b = t.box;
        b.x_center = std::clamp(b.x_center + jitter(rng) * b.width, b.width / 2, 1 - b.width / 2);
        b.y_center = std::clamp(b.y_center + jitter(rng) * b.height, b.height / 2, 1 - b.height / 2);
        d.annotation = {unit(rng) < 0.85 ? t.label : static_cast<faultscope::FaultClass>(cls(rng)), b};
      } else {
        d.annotation = {static_cast<faultscope::FaultClass>(cls(rng)), random_box(rng)};
      }
      d.confidence = unit(rng);
      img.detections.push_back(d);
    }
  }
  return out;
}

} // namespace oracle
