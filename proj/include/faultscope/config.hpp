#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "faultscope/cwt.hpp"
#include "faultscope/render.hpp"
#include "faultscope/segmentation.hpp"

namespace faultscope {

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct AugmentConfig {
  std::size_t copies = 1;  // extra augmented copies per training image
  bool flip = true;        // flip with probability 1/2
  double max_rotation_deg = 5.0;
  double contrast_min = 0.8;
  double contrast_max = 1.2;
  double min_box_area_fraction = 0.1;
};

/// Every tunable of the signal -> dataset pipeline.
struct PipelineConfig {
  std::size_t window_len = kDefaultWindow;
  double overlap = kDefaultOverlap;
  std::size_t num_scales = 64;
  std::optional<double> f_min_hz;  // default fs / 500
  std::optional<double> f_max_hz;  // default fs / 4
  std::size_t image_height = kDefaultImageSize;
  std::size_t image_width = kDefaultImageSize;
  Colormap colormap = Colormap::Grayscale;
  double log_epsilon = kDefaultLogEpsilon;
  double energy_quantile = 0.90;
  SplitRatios ratios;
  AugmentConfig augment;
  std::uint64_t seed = 0;

  /// Scale grid for a given sample rate, filling in the frequency defaults.
  ScaleGrid scale_grid(double sample_rate_hz) const;
};

/// Throws InvalidArgument naming the first field that breaks a stage precondition.
void validate(const PipelineConfig& config);

nlohmann::ordered_json config_to_json(const PipelineConfig& config);

/// Fields absent from `j` keep the values already in `base`.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

} // namespace faultscope
