#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "faultscope/cwt.hpp"
#include "faultscope/matrix.hpp"

namespace faultscope {

inline constexpr std::size_t kDefaultImageSize = 640;
inline constexpr double kDefaultLogEpsilon = 1e-10;

enum class Colormap { Grayscale, Viridis };

std::optional<Colormap> parse_colormap(std::string_view name) noexcept;
std::string_view colormap_name(Colormap c) noexcept;

/// Pixel raster in [0, 1]; row 0 is the highest frequency.
struct SpectrogramImage {
  Matrix pixels;
  Colormap colormap = Colormap::Grayscale;
  std::string provenance;

  std::size_t height() const noexcept { return pixels.rows(); }
  std::size_t width() const noexcept { return pixels.cols(); }
};

/// log(|c| + epsilon), then min-max scaled to [0, 1]. All zeros when the
/// log values are constant.
Matrix log_normalize(const Matrix& coefficients, double epsilon = kDefaultLogEpsilon);
inline Matrix log_normalize(const Scalogram& s, double epsilon = kDefaultLogEpsilon) {
  return log_normalize(s.coefficients, epsilon);
}

/// Bilinear interpolation with corner-aligned sampling: output pixel (i, j)
/// reads input coordinate (i (H-1)/(h-1), j (W-1)/(w-1)).
Matrix resize_bilinear(const Matrix& input, std::size_t out_h = kDefaultImageSize,
                       std::size_t out_w = kDefaultImageSize);

/// log_normalize followed by resize.
SpectrogramImage make_spectrogram(const Scalogram& scalogram,
                                  std::size_t height = kDefaultImageSize,
                                  std::size_t width = kDefaultImageSize,
                                  Colormap colormap = Colormap::Grayscale,
                                  double epsilon = kDefaultLogEpsilon);

/// round(p * 255), p clamped to [0, 1].
std::uint8_t quantize(double p) noexcept;

/// 256-entry RGB table for the viridis-like colormap.
const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut();

/// 8-bit grayscale or RGB PNG.
void render_png(const SpectrogramImage& image, const std::filesystem::path& path);

} // namespace faultscope
