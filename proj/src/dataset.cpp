#include "faultscope/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "faultscope/error.hpp"
#include "faultscope/segmentation.hpp"

namespace faultscope {

namespace fs = std::filesystem;

std::string_view split_name(Split s) noexcept {
  switch (s) {
  case Split::Train: return "train";
  case Split::Val: return "val";
  case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view name) noexcept {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

namespace {

constexpr std::array<Split, 3> kSplits{Split::Train, Split::Val, Split::Test};

std::array<double, 3> ratio_array(const SplitRatios& r) { return {r.train, r.val, r.test}; }

void check_ratios(const SplitRatios& r) {
  if (r.train < 0.0 || r.val < 0.0 || r.test < 0.0 ||
      std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw InvalidArgument("split ratios must be nonnegative and sum to 1");
}

/// Integer part of a quota, snapping values within 1e-9 of an integer.
double snapped_floor(double q) {
  const double r = std::round(q);
  return std::abs(q - r) < 1e-9 ? r : std::floor(q);
}

} // namespace

SplitCounts apportion(std::size_t n, const SplitRatios& ratios) {
  check_ratios(ratios);
  const auto r = ratio_array(ratios);
  SplitCounts counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double quota = r[s] * static_cast<double>(n);
    const double fl = snapped_floor(quota);
    counts[s] = static_cast<std::size_t>(fl);
    rem[s] = quota - fl;
    assigned += counts[s];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

std::vector<Split> assign_splits(std::span<const SplitItem> items, const SplitRatios& ratios,
                                 std::uint64_t seed) {
  if (items.empty()) throw InvalidArgument("cannot split an empty dataset");
  const SplitCounts totals = apportion(items.size(), ratios);
  const auto r = ratio_array(ratios);

  // group 0..3 = fault classes, 4 = unlabeled
  std::array<std::vector<std::size_t>, kNumClasses + 1> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto g = items[i].stratum ? static_cast<std::size_t>(class_id(*items[i].stratum))
                                    : static_cast<std::size_t>(kNumClasses);
    groups[g].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& g : groups) std::shuffle(g.begin(), g.end(), rng);

  // Controlled rounding: per-group quotas whose row sums are the group sizes
  // and whose column sums are the apportioned totals.
  std::vector<std::array<std::size_t, 3>> quota(groups.size(), {0, 0, 0});
  struct Cell {
    std::size_t group, split;
    double remainder;
  };
  std::vector<Cell> cells;
  std::array<std::size_t, 3> col_used{};
  std::vector<std::size_t> row_left(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double q = r[s] * static_cast<double>(groups[g].size());
      quota[g][s] = static_cast<std::size_t>(snapped_floor(q));
      used += quota[g][s];
      col_used[s] += quota[g][s];
      cells.push_back({g, s, q - static_cast<double>(quota[g][s])});
    }
    row_left[g] = groups[g].size() - used;
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return a.remainder > b.remainder; });
  auto col_left = [&](std::size_t s) { return totals[s] - col_used[s]; };
  auto give = [&](std::size_t g, std::size_t s) {
    ++quota[g][s];
    --row_left[g];
    ++col_used[s];
  };
  for (const Cell& c : cells)
    if (row_left[c.group] > 0 && col_left(c.split) > 0) give(c.group, c.split);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t s = 0; s < 3 && row_left[g] > 0; ++s)
      while (row_left[g] > 0 && col_left(s) > 0) give(g, s);

  std::vector<Split> out(items.size(), Split::Train);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < quota[g][s]; ++k) out[groups[g][pos++]] = kSplits[s];
  }
  return out;
}

namespace {

void sort_canonical(std::vector<ManifestEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    if (a.split != b.split) return a.split < b.split;
    return a.image < b.image;
  });
}

SplitCounts count_entries(const std::vector<ManifestEntry>& entries) {
  SplitCounts c{};
  for (const auto& e : entries) ++c[static_cast<std::size_t>(e.split)];
  return c;
}

std::vector<std::string> all_class_names() {
  std::vector<std::string> names;
  for (FaultClass c : kAllClasses) names.emplace_back(class_name(c));
  return names;
}

} // namespace

DatasetManifest split_dataset(std::span<const SplitItem> items, const SplitRatios& ratios,
                              std::uint64_t seed) {
  const auto splits = assign_splits(items, ratios, seed);
  DatasetManifest m;
  m.seed = seed;
  m.class_names = all_class_names();
  for (std::size_t i = 0; i < items.size(); ++i)
    m.entries.push_back({items[i].image, items[i].label, splits[i], {}});
  sort_canonical(m.entries);
  m.counts = count_entries(m.entries);
  return m;
}

nlohmann::ordered_json manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["seed"] = m.seed;
  j["class_names"] = m.class_names;
  j["counts"] = {{"train", m.counts[0]}, {"val", m.counts[1]}, {"test", m.counts[2]}};
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json je;
    je["image"] = e.image;
    je["label"] = e.label;
    je["split"] = std::string(split_name(e.split));
    je["augmentations"] = e.augmentations;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto& c = j.at("counts");
    m.counts = {c.at("train").get<std::size_t>(), c.at("val").get<std::size_t>(),
                c.at("test").get<std::size_t>()};
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.image = je.at("image").get<std::string>();
      e.label = je.at("label").get<std::string>();
      const auto sname = je.at("split").get<std::string>();
      auto s = parse_split(sname);
      if (!s) throw DataError("manifest: unknown split '" + sname + "'");
      e.split = *s;
      e.augmentations = je.at("augmentations").get<std::vector<std::string>>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("manifest '" + path.string() + "': " + e.what());
  }
}

AugmentedSample flip_horizontal(const SpectrogramImage& image,
                                std::span<const Annotation> annotations) {
  AugmentedSample out{image, {annotations.begin(), annotations.end()}};
  for (std::size_t i = 0; i < out.image.pixels.rows(); ++i) {
    auto row = out.image.pixels.row(i);
    std::reverse(row.begin(), row.end());
  }
  for (auto& a : out.annotations) a.box.x_center = 1.0 - a.box.x_center;
  return out;
}

AugmentedSample rotate_small(const SpectrogramImage& image,
                             std::span<const Annotation> annotations, double angle_deg,
                             double min_area_fraction) {
  if (!(std::abs(angle_deg) <= 5.0)) throw InvalidArgument("rotation angle must lie in [-5, 5] degrees");
  AugmentedSample out{image, {annotations.begin(), annotations.end()}};
  if (angle_deg == 0.0) return out;

  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const Matrix& src = image.pixels;
  const std::size_t h = src.rows(), w = src.cols();
  const double cx = static_cast<double>(w) / 2.0, cy = static_cast<double>(h) / 2.0;

  auto at = [&](long r, long c) -> double {
    if (r < 0 || c < 0 || r >= static_cast<long>(h) || c >= static_cast<long>(w)) return 0.0;
    return src(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double dx = static_cast<double>(j) + 0.5 - cx;
      const double dy = static_cast<double>(i) + 0.5 - cy;
      // inverse of the forward map (x, y) -> (x cos + y sin, -x sin + y cos)
      const double u = dx * cs - dy * sn + cx - 0.5;
      const double v = dx * sn + dy * cs + cy - 0.5;
      const double fu = std::floor(u), fv = std::floor(v);
      const auto c0 = static_cast<long>(fu), r0 = static_cast<long>(fv);
      const double a = u - fu, b = v - fv;
      const double val = (1 - b) * ((1 - a) * at(r0, c0) + a * at(r0, c0 + 1)) +
                         b * ((1 - a) * at(r0 + 1, c0) + a * at(r0 + 1, c0 + 1));
      out.image.pixels(i, j) = std::clamp(val, 0.0, 1.0);
    }

  std::vector<Annotation> kept;
  const double wd = static_cast<double>(w), hd = static_cast<double>(h);
  for (const auto& ann : annotations) {
    const Box& bx = ann.box;
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (double px : {bx.left(), bx.right()})
      for (double py : {bx.top(), bx.bottom()}) {
        const double dx = px * wd - cx, dy = py * hd - cy;
        const double x = (dx * cs + dy * sn + cx) / wd;
        const double y = (-dx * sn + dy * cs + cy) / hd;
        lo_x = std::min(lo_x, x);
        hi_x = std::max(hi_x, x);
        lo_y = std::min(lo_y, y);
        hi_y = std::max(hi_y, y);
      }
    lo_x = std::max(lo_x, 0.0);
    lo_y = std::max(lo_y, 0.0);
    hi_x = std::min(hi_x, 1.0);
    hi_y = std::min(hi_y, 1.0);
    if (hi_x <= lo_x || hi_y <= lo_y) continue;
    const Box nb = Box::from_edges(lo_x, lo_y, hi_x, hi_y);
    if (nb.area() < min_area_fraction * bx.area()) continue;
    kept.push_back({ann.label, nb});
  }
  out.annotations = std::move(kept);
  return out;
}

SpectrogramImage contrast_jitter(const SpectrogramImage& image, double factor) {
  if (!(factor >= 0.8 && factor <= 1.2)) throw InvalidArgument("contrast factor must lie in [0.8, 1.2]");
  SpectrogramImage out = image;
  auto& px = out.pixels.data();
  if (factor == 1.0 || px.empty()) return out;
  const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  if (*lo == *hi) return out;
  const double mean = std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
  for (double& p : px) p = std::clamp(mean + factor * (p - mean), 0.0, 1.0);
  return out;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string padded(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

struct WorkItem {
  std::size_t signal = 0;
  std::size_t start = 0;
  std::string key;
};

} // namespace

DatasetManifest build_dataset(std::span<const LabeledSignal> signals, const PipelineConfig& config,
                              const fs::path& out_dir) {
  validate(config);
  if (signals.empty()) throw InvalidArgument("build_dataset needs at least one signal");

  std::vector<WorkItem> work;
  std::vector<SplitItem> split_items;
  std::vector<ScaleGrid> grids;
  for (std::size_t s = 0; s < signals.size(); ++s) {
    const auto& ls = signals[s];
    if (!ls.signal.label) throw DataError("signal '" + ls.id + "' has no class label");
    try {
      validate(ls.signal);
      grids.push_back(config.scale_grid(ls.signal.sample_rate_hz));
      const std::size_t hop = hop_length(config.window_len, config.overlap);
      const std::size_t len = ls.signal.samples.size();
      if (len < config.window_len)
        throw DataError("signal of " + std::to_string(len) +
                        " samples is shorter than the window length " +
                        std::to_string(config.window_len));
      const std::size_t count = (len - config.window_len) / hop + 1;
      for (std::size_t k = 0; k < count; ++k) {
        std::string key = ls.id + "_seg" + padded(k, 4);
        split_items.push_back({key, key, ls.signal.label});
        work.push_back({s, k * hop, std::move(key)});
      }
    } catch (const Error& e) {
      throw DataError("signal '" + ls.id + "': " + e.what());
    }
  }

  const auto splits = assign_splits(split_items, config.ratios, config.seed);
  for (Split s : kSplits) {
    fs::create_directories(out_dir / "images" / split_name(s));
    fs::create_directories(out_dir / "labels" / split_name(s));
  }

  std::vector<std::vector<ManifestEntry>> produced(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  const auto n_work = static_cast<std::int64_t>(work.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t wi = 0; wi < n_work; ++wi) {
    const auto i = static_cast<std::size_t>(wi);
    const WorkItem& item = work[i];
    const LabeledSignal& ls = signals[item.signal];
    try {
      const auto first = ls.signal.samples.begin() + static_cast<std::ptrdiff_t>(item.start);
      const std::vector<double> window(first, first + static_cast<std::ptrdiff_t>(config.window_len));
      const Scalogram scalogram = cwt_fft(window, grids[item.signal]);
      SpectrogramImage image = make_spectrogram(scalogram, config.image_height, config.image_width,
                                                config.colormap, config.log_epsilon);
      image.provenance = item.key;
      const Annotation ann = synthesize_annotation(scalogram, *ls.signal.label, config.energy_quantile);

      const Split split = splits[i];
      auto emit = [&](const std::string& name, const SpectrogramImage& img,
                      std::span<const Annotation> anns, std::vector<std::string> tags) {
        const std::string sdir(split_name(split));
        ManifestEntry e{"images/" + sdir + "/" + name + ".png",
                        "labels/" + sdir + "/" + name + ".txt", split, std::move(tags)};
        render_png(img, out_dir / e.image);
        write_labels(anns, out_dir / e.label);
        produced[i].push_back(std::move(e));
      };
      const std::vector<Annotation> anns{ann};
      emit(item.key, image, anns, {});

      if (split == Split::Train) {
        const auto& ac = config.augment;
        for (std::size_t copy = 1; copy <= ac.copies; ++copy) {
          std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                            static_cast<std::uint32_t>(config.seed >> 32),
                            static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(copy)};
          std::mt19937_64 rng(seq);
          std::uniform_real_distribution<double> coin(0.0, 1.0);
          std::uniform_real_distribution<double> angle_dist(-ac.max_rotation_deg, ac.max_rotation_deg);
          std::uniform_real_distribution<double> factor_dist(ac.contrast_min, ac.contrast_max);
          const bool flip = ac.flip && coin(rng) < 0.5;
          const double angle = ac.max_rotation_deg > 0.0 ? angle_dist(rng) : 0.0;
          const double factor = ac.contrast_max > ac.contrast_min ? factor_dist(rng) : ac.contrast_min;

          AugmentedSample aug{image, anns};
          std::vector<std::string> tags;
          if (flip) {
            aug = flip_horizontal(aug.image, aug.annotations);
            tags.push_back("hflip");
          }
          aug = rotate_small(aug.image, aug.annotations, angle, ac.min_box_area_fraction);
          tags.push_back(fmt("rotate:%+.3f", angle));
          aug.image = contrast_jitter(aug.image, factor);
          tags.push_back(fmt("contrast:%.3f", factor));
          emit(item.key + "_aug" + padded(copy, 2), aug.image, aug.annotations, std::move(tags));
        }
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  for (std::size_t i = 0; i < work.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = "signal '" + signals[work[i].signal].id + "' segment starting at sample " +
                              std::to_string(work[i].start);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Internal, where + ": " + e.what());
    }
  }

  DatasetManifest m;
  m.seed = config.seed;
  m.class_names = all_class_names();
  for (auto& v : produced)
    for (auto& e : v) m.entries.push_back(std::move(e));
  sort_canonical(m.entries);
  m.counts = count_entries(m.entries);

  {
    std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
    if (!out) throw DataError("cannot write manifest in '" + out_dir.string() + "'");
    out << manifest_to_json(m).dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "classes.txt", std::ios::trunc);
    if (!out) throw DataError("cannot write classes.txt in '" + out_dir.string() + "'");
    for (const auto& n : m.class_names) out << n << '\n';
  }
  return m;
}

std::vector<LabeledSignal> load_signal_set(const fs::path& dir) {
  const fs::path index = dir / "signals.json";
  std::ifstream in(index);
  if (!in) throw DataError("cannot open signal index '" + index.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("signal index '" + index.string() + "': " + e.what());
  }
  std::vector<LabeledSignal> out;
  try {
    for (const auto& rec : j.at("signals")) {
      LabeledSignal ls;
      ls.id = rec.at("id").get<std::string>();
      const auto file = rec.at("file").get<std::string>();
      const auto fmt_name = rec.value("format", std::string("wav"));
      const auto format = parse_signal_format(fmt_name);
      if (!format) throw DataError("signal '" + ls.id + "': unknown format '" + fmt_name + "'");
      const double rate = rec.value("sample_rate_hz", 0.0);
      ls.signal = load_signal(dir / file, *format, rate);
      const auto cname = rec.at("class").get<std::string>();
      ls.signal.label = class_from_name(cname);
      if (!ls.signal.label) throw DataError("signal '" + ls.id + "': unknown class '" + cname + "'");
      out.push_back(std::move(ls));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("signal index '" + index.string() + "': " + e.what());
  }
  if (out.empty()) throw DataError("signal index '" + index.string() + "' lists no signals");
  return out;
}

std::vector<ImageEval> load_eval_split(const fs::path& dataset_dir, const DatasetManifest& manifest,
                                       Split split, const fs::path& predictions_dir) {
  std::vector<ImageEval> out;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    ImageEval img;
    img.name = e.image;
    img.truths = parse_labels(dataset_dir / e.label);
    const fs::path pred = predictions_dir / (fs::path(e.image).stem().string() + ".txt");
    if (!fs::exists(pred))
      throw DataError("missing prediction file for image '" + e.image + "' (expected '" +
                      pred.string() + "')");
    img.detections = parse_predictions(pred);
    out.push_back(std::move(img));
  }
  return out;
}

} // namespace faultscope
