#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "faultscope/matrix.hpp"
#include "faultscope/segmentation.hpp"

namespace faultscope {

/// Carrier angular frequency of the real Morlet wavelet.
inline constexpr double kMorletOmega0 = 5.0;

/// The wavelet is evaluated on |t| <= kSupportHalfWidth (envelope < e^-18 beyond).
inline constexpr double kSupportHalfWidth = 6.0;

/// exp(-t^2 / 2) * cos(5 t)
double morlet(double t) noexcept;

/// f(a) = (omega0 / 2 pi) * fs / a
double pseudo_frequency(double scale, double sample_rate_hz) noexcept;
double scale_for_frequency(double frequency_hz, double sample_rate_hz) noexcept;

/// Scales in samples, strictly increasing; scales.front() maps to f_max_hz
/// and scales.back() to f_min_hz.
struct ScaleGrid {
  std::vector<double> scales;
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;
  double sample_rate_hz = 0.0;

  std::size_t num_scales() const noexcept { return scales.size(); }
  double frequency(std::size_t i) const noexcept {
    return pseudo_frequency(scales[i], sample_rate_hz);
  }
};

/// Log-spaced pseudo-frequencies from f_max_hz down to f_min_hz.
/// Requires 0 < f_min < f_max <= fs/2 and num_scales >= 2.
ScaleGrid make_scale_grid(double f_min_hz, double f_max_hz,
                          std::size_t num_scales, double sample_rate_hz);

/// num_scales log-spaced scales over [fs/500, fs/4].
ScaleGrid default_scale_grid(double sample_rate_hz, std::size_t num_scales = 64);

/// Rows follow the grid (row 0 = smallest scale = highest frequency),
/// columns are time shifts b = 0..window_len-1.
struct Scalogram {
  Matrix coefficients;
  ScaleGrid grid;
  double sample_rate_hz = 0.0;
};

/// Taps h[k] = morlet(k / a) / sqrt(a) for k = 0..K with K = floor(6 a)
/// clipped to max_lag. The kernel is even, so only k >= 0 is stored.
std::vector<double> wavelet_taps(double scale, std::size_t max_lag);

// All transforms compute
//   CWT(a, b) = a^-1/2 * sum_t x[t] * psi((t - b) / a)
// with x zero outside [0, N) and psi truncated to |t - b| <= 6 a.

/// Direct summation. O(N * K) per scale; the reference implementation.
Scalogram cwt_direct(std::span<const double> samples, const ScaleGrid& grid);
Scalogram cwt_direct(const Segment& segment, const ScaleGrid& grid);

/// Frequency-domain evaluation, one scale row per OpenMP work item. Output is
/// bitwise identical for any thread count.
Scalogram cwt_fft(std::span<const double> samples, const ScaleGrid& grid);
Scalogram cwt_fft(const Segment& segment, const ScaleGrid& grid);

/// Same arithmetic as cwt_fft on the calling thread only.
Scalogram cwt_fft_serial(std::span<const double> samples, const ScaleGrid& grid);

/// Pseudo-frequency of the row with the largest mean |coefficient|; ties go
/// to the lower row index.
double ridge_frequency(const Scalogram& scalogram);

/// Binary dump: u32 num_scales, u32 window_len (little-endian), then the
/// coefficients as row-major little-endian f64.
void write_scalogram(const Matrix& coefficients, const std::filesystem::path& path);
Matrix read_scalogram(const std::filesystem::path& path);

} // namespace faultscope
