#include "faultscope/config.hpp"

#include <cmath>
#include <fstream>

#include "faultscope/error.hpp"

namespace faultscope {

ScaleGrid PipelineConfig::scale_grid(double sample_rate_hz) const {
  return make_scale_grid(f_min_hz.value_or(sample_rate_hz / 500.0),
                         f_max_hz.value_or(sample_rate_hz / 4.0), num_scales, sample_rate_hz);
}

void validate(const PipelineConfig& c) {
  auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
  if (c.window_len == 0) fail("window_len must be positive");
  hop_length(c.window_len, c.overlap);
  if (c.num_scales < 2) fail("num_scales must be at least 2");
  if (c.f_min_hz && !(*c.f_min_hz > 0.0)) fail("f_min_hz must be positive");
  if (c.f_min_hz && c.f_max_hz && !(*c.f_min_hz < *c.f_max_hz))
    fail("f_min_hz must be below f_max_hz");
  if (c.image_height == 0 || c.image_width == 0) fail("image size must be positive");
  if (!(c.log_epsilon > 0.0)) fail("log_epsilon must be positive");
  if (!(c.energy_quantile > 0.0 && c.energy_quantile < 1.0))
    fail("energy_quantile must lie in (0, 1)");
  const auto& r = c.ratios;
  if (r.train < 0.0 || r.val < 0.0 || r.test < 0.0) fail("split ratios must be nonnegative");
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) fail("split ratios must sum to 1");
  const auto& a = c.augment;
  if (!(a.max_rotation_deg >= 0.0 && a.max_rotation_deg <= 5.0))
    fail("augment.max_rotation_deg must lie in [0, 5]");
  if (!(a.contrast_min >= 0.8 && a.contrast_min <= a.contrast_max && a.contrast_max <= 1.2))
    fail("augment contrast range must satisfy 0.8 <= min <= max <= 1.2");
  if (!(a.min_box_area_fraction >= 0.0 && a.min_box_area_fraction <= 1.0))
    fail("augment.min_box_area_fraction must lie in [0, 1]");
}

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["window_len"] = c.window_len;
  j["overlap"] = c.overlap;
  j["num_scales"] = c.num_scales;
  j["f_min_hz"] = opt(c.f_min_hz);
  j["f_max_hz"] = opt(c.f_max_hz);
  j["image_height"] = c.image_height;
  j["image_width"] = c.image_width;
  j["colormap"] = std::string(colormap_name(c.colormap));
  j["log_epsilon"] = c.log_epsilon;
  j["energy_quantile"] = c.energy_quantile;
  j["ratios"] = {{"train", c.ratios.train}, {"val", c.ratios.val}, {"test", c.ratios.test}};
  j["augment"] = {{"copies", c.augment.copies},
                  {"flip", c.augment.flip},
                  {"max_rotation_deg", c.augment.max_rotation_deg},
                  {"contrast_min", c.augment.contrast_min},
                  {"contrast_max", c.augment.contrast_max},
                  {"min_box_area_fraction", c.augment.min_box_area_fraction}};
  j["seed"] = c.seed;
  return j;
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_optional(const nlohmann::json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) out.reset();
  else out = j.at(key).get<double>();
}

} // namespace

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
  try {
    read_field(j, "window_len", c.window_len);
    read_field(j, "overlap", c.overlap);
    read_field(j, "num_scales", c.num_scales);
    read_optional(j, "f_min_hz", c.f_min_hz);
    read_optional(j, "f_max_hz", c.f_max_hz);
    read_field(j, "image_height", c.image_height);
    read_field(j, "image_width", c.image_width);
    if (j.contains("colormap")) {
      auto name = j.at("colormap").get<std::string>();
      auto cm = parse_colormap(name);
      if (!cm) throw InvalidArgument("config: unknown colormap '" + name + "'");
      c.colormap = *cm;
    }
    read_field(j, "log_epsilon", c.log_epsilon);
    read_field(j, "energy_quantile", c.energy_quantile);
    if (j.contains("ratios")) {
      const auto& r = j.at("ratios");
      read_field(r, "train", c.ratios.train);
      read_field(r, "val", c.ratios.val);
      read_field(r, "test", c.ratios.test);
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      read_field(a, "copies", c.augment.copies);
      read_field(a, "flip", c.augment.flip);
      read_field(a, "max_rotation_deg", c.augment.max_rotation_deg);
      read_field(a, "contrast_min", c.augment.contrast_min);
      read_field(a, "contrast_max", c.augment.contrast_max);
      read_field(a, "min_box_area_fraction", c.augment.min_box_area_fraction);
    }
    read_field(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path.string() + "'");
  try {
    return config_from_json(nlohmann::json::parse(in), base);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("config file '" + path.string() + "': " + e.what());
  }
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write config '" + path.string() + "'");
  out << config_to_json(config).dump(2) << '\n';
}

} // namespace faultscope
