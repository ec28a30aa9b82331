#include "doctest.h"

#include <algorithm>
#include <random>

#include "faultscope/metrics.hpp"
#include "oracles.hpp"

using namespace faultscope;

namespace {

Annotation ann(FaultClass c, double x, double y, double w, double h) { return {c, {x, y, w, h}}; }
Detection det(FaultClass c, double x, double y, double w, double h, double conf) {
  return {ann(c, x, y, w, h), conf};
}

void check_invariants(const EvalReport& r) {
  double sum = 0.0;
  int present = 0;
  for (const auto& c : r.per_class) {
    CHECK(c.tp + c.fn == c.num_truths);
    if (c.ap) {
      sum += *c.ap;
      ++present;
      CHECK(*c.ap >= 0.0);
      CHECK(*c.ap <= 1.0);
    }
  }
  CHECK(r.map50 == doctest::Approx(present ? sum / present : 0.0).epsilon(1e-15));
  CHECK(r.f1 == doctest::Approx(f1_score(r.precision, r.recall)).epsilon(1e-15));
  if (r.precision + r.recall > 0.0)
    CHECK(r.f1 == doctest::Approx(2 * r.precision * r.recall / (r.precision + r.recall)));
  for (double v : {r.precision, r.recall, r.f1, r.map50}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

} // namespace

TEST_CASE("iou") {
  const Box a{0.25, 0.25, 0.5, 0.5}, b{0.5, 0.5, 0.5, 0.5}, far{0.9, 0.9, 0.1, 0.1};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, far) == 0.0);
  CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Box x = oracle::random_box(rng), y = oracle::random_box(rng);
    const double v = iou(x, y);
    CHECK(v == iou(y, x));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(oracle::box_iou(x, y)).epsilon(1e-12).scale(1e-300));
  }
  // touching edges do not overlap
  CHECK(iou({0.25, 0.5, 0.5, 1.0}, {0.75, 0.5, 0.5, 1.0}) == 0.0);
}

TEST_CASE("greedy matching") {
  SUBCASE("detections equal to truths") {
    const std::vector<Annotation> gts{ann(FaultClass::Ball, 0.2, 0.2, 0.2, 0.2),
                                      ann(FaultClass::Ball, 0.7, 0.7, 0.3, 0.3)};
    std::vector<Detection> dets;
    for (const auto& g : gts) dets.push_back({g, 1.0});
    const auto m = match_detections(gts, dets);
    CHECK(m.tp == 2);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
  }
  SUBCASE("no truths") {
    const std::vector<Detection> dets{det(FaultClass::Ball, 0.5, 0.5, 0.2, 0.2, 0.3)};
    const auto m = match_detections({}, dets);
    CHECK(m.tp == 0);
    CHECK(m.fp == 1);
    CHECK(m.fn == 0);
  }
  SUBCASE("top detection claims the better overlap") {
    const std::vector<Annotation> gts{ann(FaultClass::Normal, 0.40, 0.5, 0.4, 0.4),
                                      ann(FaultClass::Normal, 0.55, 0.5, 0.4, 0.4)};
    const std::vector<Detection> dets{det(FaultClass::Normal, 0.40, 0.5, 0.4, 0.4, 0.5),
                                      det(FaultClass::Normal, 0.52, 0.5, 0.4, 0.4, 0.9),
                                      det(FaultClass::Normal, 0.10, 0.1, 0.1, 0.1, 0.7)};
    const auto m = match_detections(gts, dets);
    REQUIRE(m.matches.size() == 3);
    CHECK(m.matches[0].detection == 1);
    CHECK(m.matches[0].truth == 1u);
    CHECK(m.matches[1].detection == 2);
    CHECK_FALSE(m.matches[1].truth.has_value());
    CHECK(m.matches[2].detection == 0);
    CHECK(m.matches[2].truth == 0u);
    CHECK(m.tp == 2);
    CHECK(m.fp == 1);
    CHECK(m.fn == 0);
  }
  SUBCASE("agrees with an independent greedy matcher on random scenes") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> count(0, 5);
    std::uniform_real_distribution<double> unit;
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<Annotation> gts;
      std::vector<Detection> dets;
      std::vector<Box> gb, db;
      std::vector<double> conf;
      for (int i = count(rng); i > 0; --i) {
        gts.push_back({FaultClass::Ball, oracle::random_box(rng)});
        gb.push_back(gts.back().box);
      }
      for (int i = count(rng); i > 0; --i) {
        Box b = !gb.empty() && unit(rng) < 0.6 ? gb[rng() % gb.size()] : oracle::random_box(rng);
        b.x_center = std::clamp(b.x_center + 0.05 * (unit(rng) - 0.5), b.width / 2, 1 - b.width / 2);
        // coarse confidences create ties on purpose
        const double c = std::round(unit(rng) * 4.0) / 4.0;
        dets.push_back({{FaultClass::Ball, b}, c});
        db.push_back(b);
        conf.push_back(c);
      }
      const auto got = match_detections(gts, dets);
      const auto want = oracle::greedy_match(gb, db, conf, 0.5);
      CHECK(got.tp == want.tp);
      CHECK(got.fp == want.fp);
      CHECK(got.fn == want.fn);
      for (const auto& mm : got.matches)
        if (mm.truth) CHECK(want.claimed_by[*mm.truth] == static_cast<int>(mm.detection));
      std::vector<bool> used(gts.size(), false);
      for (const auto& mm : got.matches)
        if (mm.truth) {
          CHECK_FALSE(used[*mm.truth]);
          used[*mm.truth] = true;
        }
    }
  }
}

TEST_CASE("average precision") {
  SUBCASE("miss then hit integrates to one half") {
    std::vector<ImageEval> imgs(1);
    imgs[0].truths = {ann(FaultClass::Ball, 0.3, 0.3, 0.2, 0.2)};
    imgs[0].detections = {det(FaultClass::Ball, 0.8, 0.8, 0.2, 0.2, 0.9),
                          det(FaultClass::Ball, 0.3, 0.3, 0.2, 0.2, 0.8)};
    CHECK(average_precision(imgs, FaultClass::Ball) == 0.5);
  }
  SUBCASE("perfect, empty and absent") {
    std::vector<ImageEval> imgs(3);
    for (std::size_t i = 0; i < imgs.size(); ++i) {
      imgs[i].truths = {ann(FaultClass::OuterRace, 0.2 + 0.2 * i, 0.5, 0.1, 0.3)};
      imgs[i].detections = {{imgs[i].truths[0], 0.5 + 0.1 * i}};
    }
    CHECK(average_precision(imgs, FaultClass::OuterRace) == 1.0);
    CHECK_FALSE(average_precision(imgs, FaultClass::Normal).has_value());
    for (auto& im : imgs) im.detections.clear();
    CHECK(average_precision(imgs, FaultClass::OuterRace) == 0.0);
  }
}

TEST_CASE("evaluation") {
  SUBCASE("perfect predictions") {
    std::vector<ImageEval> imgs(4);
    for (std::size_t i = 0; i < 4; ++i) {
      imgs[i].name = "img" + std::to_string(i);
      imgs[i].truths = {ann(kAllClasses[i], 0.5, 0.5, 0.3, 0.2)};
      for (const auto& t : imgs[i].truths) imgs[i].detections.push_back({t, 1.0});
    }
    const EvalReport r = evaluate(imgs);
    CHECK(r.map50 == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.num_images == 4);
    check_invariants(r);
  }
  SUBCASE("no predictions at all") {
    std::vector<ImageEval> imgs(2);
    imgs[0].truths = {ann(FaultClass::Ball, 0.5, 0.5, 0.3, 0.2)};
    const EvalReport r = evaluate(imgs);
    CHECK(r.map50 == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    CHECK(r.fn == 1);
    CHECK_FALSE(r.per_class[0].ap.has_value());
    check_invariants(r);
  }
  SUBCASE("empty split") {
    const EvalReport r = evaluate(std::vector<ImageEval>{});
    CHECK(r.map50 == 0.0);
    check_invariants(r);
  }
  SUBCASE("low-confidence detections count for AP only") {
    std::vector<ImageEval> imgs(1);
    imgs[0].truths = {ann(FaultClass::Ball, 0.5, 0.5, 0.3, 0.2)};
    imgs[0].detections = {{imgs[0].truths[0], 0.1}};
    const EvalReport r = evaluate(imgs);
    CHECK(r.map50 == 1.0);
    CHECK(r.tp == 0);
    CHECK(r.fn == 1);
    CHECK(r.recall == 0.0);
  }
}

TEST_CASE("evaluation agrees with the brute-force oracle") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const auto imgs = oracle::random_scenes(rng, 1 + rng() % 6, 6, 10);
    const EvalReport r = evaluate(imgs);
    const auto o = oracle::brute_force_metrics(imgs, 0.5, 0.25);
    CAPTURE(trial);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      CHECK(r.per_class[c].ap.has_value() == o.ap[c].has_value());
      if (r.per_class[c].ap && o.ap[c]) CHECK(std::abs(*r.per_class[c].ap - *o.ap[c]) <= 1e-9);
    }
    CHECK(std::abs(r.map50 - o.map) <= 1e-9);
    CHECK(std::abs(r.precision - o.precision) <= 1e-9);
    CHECK(std::abs(r.recall - o.recall) <= 1e-9);
    CHECK(std::abs(r.f1 - o.f1) <= 1e-9);
    check_invariants(r);
  }
}

TEST_CASE("monotonicity and permutation") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto imgs = oracle::random_scenes(rng, 3, 5, 8);
    const EvalReport base = evaluate(imgs);

    // a confident detection far from everything is a false positive
    auto fp = imgs;
    fp[0].detections.push_back(det(FaultClass::Ball, 0.995, 0.995, 0.01, 0.01, 0.99));
    for (const auto& t : fp[0].truths) CHECK(iou(t.box, fp[0].detections.back().annotation.box) < 0.5);
    CHECK(evaluate(fp).precision <= base.precision);

    // a fresh truth found by a detection that outranks everything else
    for (FaultClass c : kAllClasses) {
      const auto before = average_precision(imgs, c);
      if (!before) continue;
      auto extra = imgs;
      ImageEval added;
      added.truths = {ann(c, 0.5, 0.5, 0.4, 0.4)};
      added.detections = {{added.truths[0], 1.0}};
      extra.push_back(added);
      CHECK(*average_precision(extra, c) >= *before);
    }

    // reordering detections with distinct confidences is exact
    auto shuffled = imgs;
    for (auto& im : shuffled) std::shuffle(im.detections.begin(), im.detections.end(), rng);
    const EvalReport s = evaluate(shuffled);
    CHECK(report_to_json(s).dump() == report_to_json(base).dump());
  }
}

TEST_CASE("report json round trip") {
  std::mt19937_64 rng(3);
  const auto imgs = oracle::random_scenes(rng, 5, 4, 6);
  const EvalReport r = evaluate(imgs, 0.5, 0.3);
  const auto j = report_to_json(r);
  const EvalReport back = report_from_json(nlohmann::json::parse(j.dump()));
  CHECK(report_to_json(back).dump() == j.dump());
  CHECK(back.confidence_threshold == 0.3);
  CHECK(format_report(r).find("mAP@0.5") != std::string::npos);
}
