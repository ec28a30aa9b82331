#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "faultscope/fault_class.hpp"
#include "faultscope/signal_io.hpp"

namespace faultscope {

inline constexpr std::size_t kDefaultWindow = 2048;
inline constexpr double kDefaultOverlap = 0.5;

struct Segment {
  std::vector<double> samples;
  std::size_t start_index = 0;
  double parent_rate_hz = 0.0;
  std::optional<FaultClass> inherited_label;
};

/// round(window_len * (1 - overlap_fraction)). Throws if it rounds to zero.
std::size_t hop_length(std::size_t window_len, double overlap_fraction);

/// Fixed-length windows starting at 0, hop, 2*hop, ...; a trailing remainder
/// shorter than window_len is dropped.
std::vector<Segment> segment_signal(const Signal& signal,
                                    std::size_t window_len = kDefaultWindow,
                                    double overlap_fraction = kDefaultOverlap);

} // namespace faultscope
