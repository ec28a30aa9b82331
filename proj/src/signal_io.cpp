#include "faultscope/signal_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "faultscope/error.hpp"

namespace faultscope {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read failed for '" + path.string() + "'");
  return bytes;
}

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view field, double& out) {
  std::string tmp(field);
  if (tmp.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size();
}

std::vector<double> parse_csv(const std::vector<char>& bytes,
                              const std::filesystem::path& path) {
  std::vector<double> samples;
  std::string_view text(bytes.data(), bytes.size());
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    // multi-column rows: channel 0 only
    auto comma = line.find_first_of(",;");
    auto field = trim(line.substr(0, comma));
    double v = 0.0;
    if (!parse_double(field, v)) {
      if (samples.empty() && line_no == 1) continue;  // header
      throw DataError("malformed numeric field '" + std::string(field) +
                      "' at line " + std::to_string(line_no) + " of '" +
                      path.string() + "'");
    }
    samples.push_back(v);
  }
  return samples;
}

std::vector<double> parse_raw_f32le(const std::vector<char>& bytes,
                                    const std::filesystem::path& path) {
  if (bytes.size() % 4 != 0)
    throw DataError("malformed raw_f32le file '" + path.string() + "': " +
                    std::to_string(bytes.size()) +
                    " bytes is not a multiple of 4");
  std::vector<double> samples(bytes.size() / 4);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = read_le<float>(bytes.data() + 4 * i);
  return samples;
}

std::vector<double> parse_wav(const std::vector<char>& bytes,
                              const std::filesystem::path& path,
                              double& rate_out) {
  auto bad = [&](const std::string& why) {
    return DataError("malformed wav file '" + path.string() + "': " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw bad("missing RIFF/WAVE header");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    auto len = read_le<std::uint32_t>(id + 4);
    const char* body = id + 8;
    std::size_t avail = bytes.size() - pos - 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16 || len > avail) throw bad("truncated fmt chunk");
      format = read_le<std::uint16_t>(body);
      channels = read_le<std::uint16_t>(body + 2);
      rate = read_le<std::uint32_t>(body + 4);
      bits = read_le<std::uint16_t>(body + 14);
      if (format == 0xFFFE && len >= 26)  // WAVE_FORMAT_EXTENSIBLE
        format = read_le<std::uint16_t>(body + 24);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = body;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos += 8 + len + (len & 1u);
  }
  if (channels == 0 || rate == 0) throw bad("missing fmt chunk");
  if (data == nullptr) throw bad("missing data chunk");

  std::size_t width = 0;
  if (format == 1 && bits == 16) width = 2;
  else if (format == 3 && bits == 32) width = 4;
  else
    throw bad("unsupported encoding (format " + std::to_string(format) + ", " +
              std::to_string(bits) + " bits); expected PCM16 or float32");

  std::size_t frame = width * channels;
  std::vector<double> samples(data_len / frame);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const char* p = data + i * frame;
    samples[i] = width == 2 ? read_le<std::int16_t>(p) / 32768.0
                            : static_cast<double>(read_le<float>(p));
  }
  rate_out = rate;
  return samples;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

} // namespace

void validate(const Signal& signal) {
  if (signal.samples.empty()) throw DataError("empty signal");
  if (!(signal.sample_rate_hz > 0.0) || !std::isfinite(signal.sample_rate_hz))
    throw DataError("sample rate must be positive");
  for (std::size_t i = 0; i < signal.samples.size(); ++i)
    if (!std::isfinite(signal.samples[i]))
      throw DataError("non-finite sample at index " + std::to_string(i));
}

std::optional<SignalFormat> parse_signal_format(std::string_view name) noexcept {
  if (name == "csv") return SignalFormat::Csv;
  if (name == "wav") return SignalFormat::Wav;
  if (name == "raw_f32le") return SignalFormat::RawF32Le;
  return std::nullopt;
}

std::string_view format_name(SignalFormat format) noexcept {
  switch (format) {
  case SignalFormat::Csv: return "csv";
  case SignalFormat::Wav: return "wav";
  case SignalFormat::RawF32Le: return "raw_f32le";
  }
  return "?";
}

Signal load_signal(const std::filesystem::path& path, SignalFormat format,
                   double sample_rate_hz) {
  auto bytes = read_bytes(path);
  Signal s;
  s.sample_rate_hz = sample_rate_hz;
  switch (format) {
  case SignalFormat::Csv: s.samples = parse_csv(bytes, path); break;
  case SignalFormat::RawF32Le: s.samples = parse_raw_f32le(bytes, path); break;
  case SignalFormat::Wav: s.samples = parse_wav(bytes, path, s.sample_rate_hz); break;
  }
  try {
    validate(s);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " in '" + path.string() + "'");
  }
  return s;
}

void write_raw_f32le(const Signal& signal, const std::filesystem::path& path) {
  std::string out;
  out.reserve(signal.samples.size() * 4);
  for (double v : signal.samples) put_le(out, static_cast<float>(v));
  write_file(path, out);
}

void write_wav_f32(const Signal& signal, const std::filesystem::path& path) {
  auto rate = static_cast<std::uint32_t>(std::lround(signal.sample_rate_hz));
  auto data_len = static_cast<std::uint32_t>(signal.samples.size() * 4);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_le<std::uint32_t>(out, 36 + data_len);
  out += "WAVEfmt ";
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, 3);  // IEEE float
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * 4);
  put_le<std::uint16_t>(out, 4);
  put_le<std::uint16_t>(out, 32);
  out += "data";
  put_le<std::uint32_t>(out, data_len);
  for (double v : signal.samples) put_le(out, static_cast<float>(v));
  write_file(path, out);
}

FaultSpec default_fault_spec(FaultClass c) {
  FaultSpec spec;
  spec.fault_class = c;
  switch (c) {
  case FaultClass::Normal:
    spec.impulse_amplitude = 0.0;
    spec.shaft_amplitude = 0.3;
    break;
  case FaultClass::Ball:
    spec.fault_hz = 141.2;
    spec.resonance_hz = 2600.0;
    spec.decay_rate = 900.0;
    break;
  case FaultClass::InnerRace:
    spec.fault_hz = 162.2;
    spec.resonance_hz = 1800.0;
    spec.decay_rate = 700.0;
    break;
  case FaultClass::OuterRace:
    spec.fault_hz = 107.4;
    spec.resonance_hz = 900.0;
    spec.decay_rate = 500.0;
    break;
  }
  return spec;
}

Signal generate_fault_signal(const FaultSpec& spec, double duration_s,
                             double sample_rate_hz, std::uint64_t seed) {
  if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0))
    throw InvalidArgument("duration and sample rate must be positive");
  const double n_real = duration_s * sample_rate_hz;
  if (n_real + 1e-9 < 2048.0)
    throw InvalidArgument("duration * sample rate must cover at least 2048 samples");
  if (!(spec.shaft_hz > 0.0) || !(spec.fault_hz > 0.0) ||
      !(spec.resonance_hz > 0.0) || !(spec.decay_rate > 0.0))
    throw InvalidArgument("fault spec frequencies and decay rate must be positive");
  if (spec.impulse_amplitude < 0.0 || spec.noise_std < 0.0 ||
      spec.shaft_amplitude < 0.0)
    throw InvalidArgument("fault spec amplitudes must be nonnegative");
  if (spec.fault_hz >= sample_rate_hz / 2.0)
    throw InvalidArgument("fault_hz must be below the Nyquist frequency");

  const auto n = static_cast<std::size_t>(std::floor(n_real + 1e-9));
  Signal s;
  s.sample_rate_hz = sample_rate_hz;
  s.label = spec.fault_class;
  s.samples.assign(n, 0.0);

  const double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / sample_rate_hz;
    double v = spec.shaft_amplitude * std::sin(two_pi * spec.shaft_hz * t);
    if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
    s.samples[i] = v;
  }

  const double amplitude =
      spec.fault_class == FaultClass::Normal ? 0.0 : spec.impulse_amplitude;
  if (amplitude > 0.0) {
    const auto impulses =
        static_cast<std::size_t>(std::floor(duration_s * spec.fault_hz + 1e-9));
    // ring-down is cut once the envelope drops below e^-20
    const auto ring = static_cast<std::size_t>(
        std::ceil(20.0 / spec.decay_rate * sample_rate_hz));
    for (std::size_t k = 0; k < impulses; ++k) {
      auto start = static_cast<std::size_t>(
          std::llround(static_cast<double>(k) * sample_rate_hz / spec.fault_hz));
      for (std::size_t j = 0; j < ring && start + j < n; ++j) {
        double tau = static_cast<double>(j) / sample_rate_hz;
        s.samples[start + j] += amplitude * std::exp(-spec.decay_rate * tau) *
                                std::sin(two_pi * spec.resonance_hz * tau);
      }
    }
  }
  return s;
}

} // namespace faultscope
