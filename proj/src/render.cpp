#include "faultscope/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "faultscope/error.hpp"

namespace faultscope {

std::optional<Colormap> parse_colormap(std::string_view name) noexcept {
  if (name == "grayscale" || name == "gray") return Colormap::Grayscale;
  if (name == "viridis") return Colormap::Viridis;
  return std::nullopt;
}

std::string_view colormap_name(Colormap c) noexcept {
  return c == Colormap::Grayscale ? "grayscale" : "viridis";
}

Matrix log_normalize(const Matrix& coefficients, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("log epsilon must be positive");
  Matrix out(coefficients.rows(), coefficients.cols());
  if (coefficients.empty()) return out;
  auto& m = out.data();
  const auto& c = coefficients.data();
  for (std::size_t i = 0; i < c.size(); ++i) m[i] = std::log(std::abs(c[i]) + epsilon);
  const auto [lo_it, hi_it] = std::minmax_element(m.begin(), m.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(m.begin(), m.end(), 0.0);
    return out;
  }
  const double span = hi - lo;
  for (double& v : m) v = std::clamp((v - lo) / span, 0.0, 1.0);
  return out;
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double frac;
};

std::vector<Tap> axis_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double step =
      out > 1 ? static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
  for (std::size_t i = 0; i < out; ++i) {
    const double x = static_cast<double>(i) * step;
    auto i0 = static_cast<std::size_t>(std::floor(x));
    double frac = x - static_cast<double>(i0);
    if (i0 >= in - 1) {
      i0 = in - 1;
      frac = 0.0;
    }
    taps[i] = {i0, std::min(i0 + 1, in - 1), frac};
  }
  return taps;
}

// a + f (b - a) is exact for f == 0 and for a == b; the clamp keeps rounding
// inside the segment.
double lerp(double a, double b, double f) noexcept {
  if (f == 0.0) return a;
  const double v = a + f * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

} // namespace

Matrix resize_bilinear(const Matrix& input, std::size_t out_h, std::size_t out_w) {
  if (input.rows() == 0 || input.cols() == 0)
    throw InvalidArgument("resize of an empty matrix");
  if (out_h == 0 || out_w == 0) throw InvalidArgument("resize target must be positive");
  const auto rows = axis_taps(input.rows(), out_h);
  const auto cols = axis_taps(input.cols(), out_w);
  Matrix out(out_h, out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    const Tap& ty = rows[i];
    auto r0 = input.row(ty.i0);
    auto r1 = input.row(ty.i1);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < out_w; ++j) {
      const Tap& tx = cols[j];
      const double top = lerp(r0[tx.i0], r0[tx.i1], tx.frac);
      const double bottom = lerp(r1[tx.i0], r1[tx.i1], tx.frac);
      dst[j] = lerp(top, bottom, ty.frac);
    }
  }
  return out;
}

SpectrogramImage make_spectrogram(const Scalogram& scalogram, std::size_t height,
                                  std::size_t width, Colormap colormap, double epsilon) {
  SpectrogramImage img;
  img.pixels = resize_bilinear(log_normalize(scalogram.coefficients, epsilon), height, width);
  img.colormap = colormap;
  return img;
}

std::uint8_t quantize(double p) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut() {
  static const auto lut = [] {
    // anchor colours sampled from viridis at 0, 1/8, ..., 1
    constexpr double anchors[9][3] = {
        {68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
        {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
    std::array<std::array<std::uint8_t, 3>, 256> table{};
    for (std::size_t i = 0; i < 256; ++i) {
      const double x = static_cast<double>(i) / 255.0 * 8.0;
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(x), 7);
      const double f = x - static_cast<double>(k);
      for (std::size_t c = 0; c < 3; ++c)
        table[i][c] = static_cast<std::uint8_t>(
            std::lround(anchors[k][c] + f * (anchors[k + 1][c] - anchors[k][c])));
    }
    return table;
  }();
  return lut;
}

void render_png(const SpectrogramImage& image, const std::filesystem::path& path) {
  const std::size_t h = image.height(), w = image.width();
  if (h == 0 || w == 0) throw InvalidArgument("cannot render an empty image");
  const bool rgb = image.colormap == Colormap::Viridis;
  const std::size_t channels = rgb ? 3 : 1;

  std::vector<std::uint8_t> raster(h * w * channels);
  const auto& lut = viridis_lut();
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const std::uint8_t q = quantize(image.pixels(i, j));
      std::uint8_t* px = &raster[(i * w + j) * channels];
      if (rgb) std::copy(lut[q].begin(), lut[q].end(), px);
      else px[0] = q;
    }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw DataError("cannot write PNG '" + path.string() + "'");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::Internal, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(h);
  for (std::size_t i = 0; i < h; ++i) rows[i] = &raster[i * w * channels];

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encoding failed for '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) throw DataError("write failed for '" + path.string() + "'");
}

} // namespace faultscope
