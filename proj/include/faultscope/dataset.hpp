#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "faultscope/annotation.hpp"
#include "faultscope/config.hpp"
#include "faultscope/metrics.hpp"
#include "faultscope/render.hpp"
#include "faultscope/signal_io.hpp"

namespace faultscope {

enum class Split { Train = 0, Val = 1, Test = 2 };

std::string_view split_name(Split s) noexcept;
std::optional<Split> parse_split(std::string_view name) noexcept;

using SplitCounts = std::array<std::size_t, 3>;

/// Largest-remainder apportionment of n items; equal remainders favour
/// train, then val, then test.
SplitCounts apportion(std::size_t n, const SplitRatios& ratios);

struct ManifestEntry {
  std::string image;  // relative to the dataset root
  std::string label;
  Split split = Split::Train;
  std::vector<std::string> augmentations;  // empty for original samples
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;
  SplitCounts counts{};
};

nlohmann::ordered_json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// An item to split: file paths plus an optional class used for stratification.
struct SplitItem {
  std::string image;
  std::string label;
  std::optional<FaultClass> stratum;
};

/// Seeded shuffle, then per-split counts from apportion(). Items with a
/// stratum are spread so that each class is split close to the ratios while
/// the totals stay exactly apportioned. Entries come back in canonical order
/// (split, then image path).
DatasetManifest split_dataset(std::span<const SplitItem> items, const SplitRatios& ratios,
                              std::uint64_t seed);

/// Split index per item, in input order.
std::vector<Split> assign_splits(std::span<const SplitItem> items, const SplitRatios& ratios,
                                 std::uint64_t seed);

struct AugmentedSample {
  SpectrogramImage image;
  std::vector<Annotation> annotations;
};

/// Mirror about the vertical axis; x_center -> 1 - x_center.
AugmentedSample flip_horizontal(const SpectrogramImage& image,
                                std::span<const Annotation> annotations);

/// Rotation about the image centre (positive = counter-clockwise on screen),
/// bilinear sampling with zero fill. Boxes become the clipped hull of their
/// rotated corners and are dropped below min_area_fraction of their old area.
AugmentedSample rotate_small(const SpectrogramImage& image,
                             std::span<const Annotation> annotations, double angle_deg,
                             double min_area_fraction = 0.1);

/// p' = clamp(mean + factor (p - mean), 0, 1), factor in [0.8, 1.2].
SpectrogramImage contrast_jitter(const SpectrogramImage& image, double factor);

struct LabeledSignal {
  std::string id;  // file-name safe
  Signal signal;   // signal.label must be set
};

/// Segment, transform, render and annotate every signal, split the segments,
/// augment the training split, and write images/, labels/, manifest.json and
/// classes.txt under out_dir. Output is independent of the OpenMP thread count.
DatasetManifest build_dataset(std::span<const LabeledSignal> signals,
                              const PipelineConfig& config,
                              const std::filesystem::path& out_dir);

/// Reads the labeled signal set written by `faultscope synth` (signals.json).
std::vector<LabeledSignal> load_signal_set(const std::filesystem::path& dir);

/// Ground truth for one split plus predictions from `predictions_dir/<stem>.txt`.
/// A missing prediction file is an error naming the image.
std::vector<ImageEval> load_eval_split(const std::filesystem::path& dataset_dir,
                                       const DatasetManifest& manifest, Split split,
                                       const std::filesystem::path& predictions_dir);

} // namespace faultscope
