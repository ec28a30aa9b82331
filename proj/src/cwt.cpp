#include "faultscope/cwt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include <bit>

#include <fftw3.h>

#include "faultscope/error.hpp"

namespace faultscope {

static_assert(std::endian::native == std::endian::little,
              "scalogram dumps assume a little-endian host");

namespace {

constexpr double kCarrierHz = kMorletOmega0 / (2.0 * std::numbers::pi);

void check_inputs(std::span<const double> samples, const ScaleGrid& grid) {
  if (samples.empty()) throw InvalidArgument("cwt of an empty segment");
  if (grid.scales.empty()) throw InvalidArgument("cwt with an empty scale grid");
  for (double s : grid.scales)
    if (!(s > 0.0) || !std::isfinite(s))
      throw InvalidArgument("scale grid contains a non-positive scale");
  for (double v : samples)
    if (!std::isfinite(v)) throw InvalidArgument("cwt input contains non-finite samples");
}

void check_rate(const Segment& segment, const ScaleGrid& grid) {
  const double a = segment.parent_rate_hz, b = grid.sample_rate_hz;
  if (std::abs(a - b) > 1e-9 * std::max(a, b))
    throw InvalidArgument("segment rate " + std::to_string(a) +
                          " Hz differs from grid rate " + std::to_string(b) + " Hz");
}

std::size_t max_lag_for(double scale, std::size_t n) {
  auto k = static_cast<std::size_t>(std::floor(kSupportHalfWidth * scale));
  return std::min(k, n - 1);
}

bool is_smooth_235(std::size_t v) {
  for (std::size_t p : {2u, 3u, 5u})
    while (v % p == 0) v /= p;
  return v == 1;
}

std::size_t fft_size_at_least(std::size_t n) {
  std::size_t m = std::max<std::size_t>(n, 2);
  while (!is_smooth_235(m)) ++m;
  return m;
}

/// r2c/c2r plan pair for one transform length. FFTW's planner is not
/// thread-safe but executing a plan on fresh arrays is, so plans are built
/// once under a lock and then shared.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

class PlanCache {
public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

  PlanPair get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const auto len = static_cast<int>(n);
    std::vector<double> real(n);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    // FFTW_UNALIGNED keeps the codelet choice independent of buffer address.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_1d(len, real.data(), cplx, flags);
    p.inverse = fftw_plan_dft_c2r_1d(len, cplx, real.data(), flags | FFTW_DESTROY_INPUT);
    if (p.forward == nullptr || p.inverse == nullptr)
      throw Error(ErrorKind::Internal, "FFTW planning failed for length " + std::to_string(n));
    plans_.emplace(n, p);
    return p;
  }

private:
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

/// Shared per-transform state: padded length and the input spectrum.
struct FftContext {
  std::size_t n = 0;
  std::size_t m = 0;
  PlanPair plans;
  std::vector<std::complex<double>> input_spectrum;
};

FftContext prepare_fft(std::span<const double> samples, const ScaleGrid& grid) {
  FftContext ctx;
  ctx.n = samples.size();
  std::size_t max_lag = 0;
  for (double s : grid.scales) max_lag = std::max(max_lag, max_lag_for(s, ctx.n));
  // Wrap-around of the circular product stays outside [0, n) when m >= n + K.
  ctx.m = fft_size_at_least(ctx.n + max_lag);
  ctx.plans = plan_cache().get(ctx.m);

  std::vector<double> padded(ctx.m, 0.0);
  std::copy(samples.begin(), samples.end(), padded.begin());
  ctx.input_spectrum.resize(ctx.m / 2 + 1);
  fftw_execute_dft_r2c(ctx.plans.forward, padded.data(),
                       reinterpret_cast<fftw_complex*>(ctx.input_spectrum.data()));
  return ctx;
}

/// Per-thread scratch buffers.
struct FftScratch {
  std::vector<double> real;
  std::vector<std::complex<double>> spectrum;
  explicit FftScratch(std::size_t m) : real(m), spectrum(m / 2 + 1) {}
};

void fft_row(const FftContext& ctx, double scale, std::span<double> out,
             FftScratch& scratch) {
  const auto taps = wavelet_taps(scale, ctx.n - 1);
  std::fill(scratch.real.begin(), scratch.real.end(), 0.0);
  scratch.real[0] = taps[0];
  for (std::size_t k = 1; k < taps.size(); ++k) {
    scratch.real[k] = taps[k];
    scratch.real[ctx.m - k] = taps[k];
  }
  auto* spec = reinterpret_cast<fftw_complex*>(scratch.spectrum.data());
  fftw_execute_dft_r2c(ctx.plans.forward, scratch.real.data(), spec);
  // The kernel is even, so correlation equals convolution.
  for (std::size_t i = 0; i < scratch.spectrum.size(); ++i)
    scratch.spectrum[i] *= ctx.input_spectrum[i];
  fftw_execute_dft_c2r(ctx.plans.inverse, spec, scratch.real.data());
  const double inv_m = 1.0 / static_cast<double>(ctx.m);
  for (std::size_t b = 0; b < ctx.n; ++b) out[b] = scratch.real[b] * inv_m;
}

Scalogram empty_scalogram(std::size_t n, const ScaleGrid& grid) {
  return Scalogram{Matrix(grid.num_scales(), n), grid, grid.sample_rate_hz};
}

} // namespace

double morlet(double t) noexcept {
  return std::exp(-0.5 * t * t) * std::cos(kMorletOmega0 * t);
}

double pseudo_frequency(double scale, double sample_rate_hz) noexcept {
  return kCarrierHz * sample_rate_hz / scale;
}

double scale_for_frequency(double frequency_hz, double sample_rate_hz) noexcept {
  return kCarrierHz * sample_rate_hz / frequency_hz;
}

ScaleGrid make_scale_grid(double f_min_hz, double f_max_hz, std::size_t num_scales,
                          double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (num_scales < 2) throw InvalidArgument("scale grid needs at least 2 scales");
  if (!(f_min_hz > 0.0 && f_min_hz < f_max_hz && f_max_hz <= sample_rate_hz / 2.0))
    throw InvalidArgument("scale grid requires 0 < f_min < f_max <= fs/2 (got f_min=" +
                          std::to_string(f_min_hz) + ", f_max=" + std::to_string(f_max_hz) +
                          ", fs=" + std::to_string(sample_rate_hz) + ")");
  ScaleGrid grid;
  grid.f_min_hz = f_min_hz;
  grid.f_max_hz = f_max_hz;
  grid.sample_rate_hz = sample_rate_hz;
  grid.scales.resize(num_scales);
  const double log_ratio = std::log(f_min_hz / f_max_hz);
  const double last = static_cast<double>(num_scales - 1);
  for (std::size_t i = 0; i < num_scales; ++i) {
    double f = i == 0               ? f_max_hz
               : i == num_scales - 1 ? f_min_hz
                                     : f_max_hz * std::exp(log_ratio * static_cast<double>(i) / last);
    grid.scales[i] = scale_for_frequency(f, sample_rate_hz);
  }
  return grid;
}

ScaleGrid default_scale_grid(double sample_rate_hz, std::size_t num_scales) {
  return make_scale_grid(sample_rate_hz / 500.0, sample_rate_hz / 4.0, num_scales,
                         sample_rate_hz);
}

std::vector<double> wavelet_taps(double scale, std::size_t max_lag) {
  const auto k_max = std::min(
      static_cast<std::size_t>(std::floor(kSupportHalfWidth * scale)), max_lag);
  const double norm = 1.0 / std::sqrt(scale);
  std::vector<double> taps(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k)
    taps[k] = norm * morlet(static_cast<double>(k) / scale);
  return taps;
}

Scalogram cwt_direct(std::span<const double> samples, const ScaleGrid& grid) {
  check_inputs(samples, grid);
  const std::size_t n = samples.size();
  Scalogram out = empty_scalogram(n, grid);
  for (std::size_t r = 0; r < grid.num_scales(); ++r) {
    const auto taps = wavelet_taps(grid.scales[r], n - 1);
    const std::size_t k_max = taps.size() - 1;
    auto row = out.coefficients.row(r);
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t lo = b > k_max ? b - k_max : 0;
      const std::size_t hi = std::min(n - 1, b + k_max);
      double acc = 0.0;
      for (std::size_t t = lo; t <= hi; ++t)
        acc += samples[t] * taps[t >= b ? t - b : b - t];
      row[b] = acc;
    }
  }
  return out;
}

Scalogram cwt_direct(const Segment& segment, const ScaleGrid& grid) {
  check_rate(segment, grid);
  return cwt_direct(segment.samples, grid);
}

Scalogram cwt_fft_serial(std::span<const double> samples, const ScaleGrid& grid) {
  check_inputs(samples, grid);
  Scalogram out = empty_scalogram(samples.size(), grid);
  const FftContext ctx = prepare_fft(samples, grid);
  FftScratch scratch(ctx.m);
  for (std::size_t r = 0; r < grid.num_scales(); ++r)
    fft_row(ctx, grid.scales[r], out.coefficients.row(r), scratch);
  return out;
}

Scalogram cwt_fft(std::span<const double> samples, const ScaleGrid& grid) {
  check_inputs(samples, grid);
  Scalogram out = empty_scalogram(samples.size(), grid);
  const FftContext ctx = prepare_fft(samples, grid);
  const auto rows = static_cast<std::int64_t>(grid.num_scales());
#pragma omp parallel
  {
    FftScratch scratch(ctx.m);
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t r = 0; r < rows; ++r) {
      const auto i = static_cast<std::size_t>(r);
      fft_row(ctx, grid.scales[i], out.coefficients.row(i), scratch);
    }
  }
  return out;
}

Scalogram cwt_fft(const Segment& segment, const ScaleGrid& grid) {
  check_rate(segment, grid);
  return cwt_fft(segment.samples, grid);
}

double ridge_frequency(const Scalogram& scalogram) {
  const Matrix& c = scalogram.coefficients;
  if (c.empty()) throw InvalidArgument("ridge of an empty scalogram");
  std::size_t best = 0;
  double best_energy = -1.0;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    double sum = 0.0;
    for (double v : c.row(r)) sum += std::abs(v);
    const double mean = sum / static_cast<double>(c.cols());
    if (mean > best_energy) {
      best_energy = mean;
      best = r;
    }
  }
  return pseudo_frequency(scalogram.grid.scales[best], scalogram.sample_rate_hz);
}

void write_scalogram(const Matrix& coefficients, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write scalogram '" + path.string() + "'");
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(coefficients.rows()),
                                   static_cast<std::uint32_t>(coefficients.cols())};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(coefficients.data().data()),
            static_cast<std::streamsize>(coefficients.size() * sizeof(double)));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Matrix read_scalogram(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scalogram '" + path.string() + "'");
  std::uint32_t header[2] = {0, 0};
  if (!in.read(reinterpret_cast<char*>(header), sizeof header))
    throw DataError("truncated scalogram header in '" + path.string() + "'");
  Matrix m(header[0], header[1]);
  if (!in.read(reinterpret_cast<char*>(m.data().data()),
               static_cast<std::streamsize>(m.size() * sizeof(double))))
    throw DataError("truncated scalogram body in '" + path.string() + "'");
  return m;
}

} // namespace faultscope
