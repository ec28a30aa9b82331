#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "faultscope/fault_class.hpp"

namespace faultscope {

/// A sampled single-channel vibration waveform.
struct Signal {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  std::optional<FaultClass> label;
};

/// Throws DataError if samples are empty or non-finite, or the rate is not positive.
void validate(const Signal& signal);

enum class SignalFormat { Csv, Wav, RawF32Le };

std::optional<SignalFormat> parse_signal_format(std::string_view name) noexcept;
std::string_view format_name(SignalFormat format) noexcept;

/// Reads a recording. For wav the embedded rate overrides `sample_rate_hz`;
/// multi-channel files are reduced to channel 0.
Signal load_signal(const std::filesystem::path& path, SignalFormat format,
                   double sample_rate_hz);

/// Samples are narrowed to float.
void write_raw_f32le(const Signal& signal, const std::filesystem::path& path);

/// Mono 32-bit float WAVE with the signal's rate in the header.
void write_wav_f32(const Signal& signal, const std::filesystem::path& path);

/// Parameters of the synthetic bearing-fault model: an impulse train at the
/// defect repetition rate where each impact rings down as a decaying sinusoid
/// at a structural resonance, over a shaft-rate tone and Gaussian noise.
struct FaultSpec {
  FaultClass fault_class = FaultClass::Normal;
  double shaft_hz = 29.95;
  double shaft_amplitude = 0.1;
  double fault_hz = 100.0;
  double resonance_hz = 2000.0;
  double decay_rate = 800.0;  // 1/s
  double impulse_amplitude = 1.0;
  double noise_std = 0.05;
};

/// Built-in parameters for one class at a 12 kHz-style sampling rate.
FaultSpec default_fault_spec(FaultClass c);

/// Deterministic in (spec, duration_s, sample_rate_hz, seed). Impulses sit at
/// sample round(k * fs / fault_hz) for k in [0, floor(duration_s * fault_hz)).
/// Normal specs carry no impulses regardless of impulse_amplitude.
Signal generate_fault_signal(const FaultSpec& spec, double duration_s,
                             double sample_rate_hz, std::uint64_t seed);

} // namespace faultscope
