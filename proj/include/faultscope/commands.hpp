#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "faultscope/signal_io.hpp"

namespace faultscope {

struct SynthOptions {
  std::size_t count = 4;  // signal i gets class i % 4
  std::uint64_t seed = 0;
  double duration_s = 1.0;
  double sample_rate_hz = 12000.0;
  /// Per-class model parameters; each signal perturbs fault and resonance
  /// frequencies by up to +-5%.
  std::array<FaultSpec, 4> specs{default_fault_spec(FaultClass::Normal),
                                 default_fault_spec(FaultClass::Ball),
                                 default_fault_spec(FaultClass::InnerRace),
                                 default_fault_spec(FaultClass::OuterRace)};
};

/// Writes sigNNNN_<Class>.wav files plus signals.json (the truth index read
/// by load_signal_set) into out_dir.
void synthesize_corpus(const SynthOptions& options, const std::filesystem::path& out_dir);

/// Per-class FaultSpec overrides from a JSON object keyed by class name.
void apply_spec_overrides(SynthOptions& options, const std::filesystem::path& spec_file);

/// The `faultscope` command line. Returns the process exit code:
/// 0 success, 1 usage error, 2 data error, 3 internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace faultscope
