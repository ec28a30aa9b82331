#include "faultscope/segmentation.hpp"

#include <cmath>
#include <string>

#include "faultscope/error.hpp"

namespace faultscope {

std::size_t hop_length(std::size_t window_len, double overlap_fraction) {
  if (window_len == 0) throw InvalidArgument("window length must be positive");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw InvalidArgument("overlap fraction must lie in [0, 1)");
  auto hop = static_cast<std::size_t>(
      std::llround(static_cast<double>(window_len) * (1.0 - overlap_fraction)));
  if (hop == 0)
    throw InvalidArgument("overlap " + std::to_string(overlap_fraction) +
                          " leaves a zero hop for window " +
                          std::to_string(window_len));
  return hop;
}

std::vector<Segment> segment_signal(const Signal& signal, std::size_t window_len,
                                    double overlap_fraction) {
  const std::size_t hop = hop_length(window_len, overlap_fraction);
  const std::size_t len = signal.samples.size();
  if (len < window_len)
    throw DataError("signal of " + std::to_string(len) +
                    " samples is shorter than the window length " +
                    std::to_string(window_len));

  const std::size_t count = (len - window_len) / hop + 1;
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * hop;
    auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(start);
    out.push_back(Segment{
        std::vector<double>(first, first + static_cast<std::ptrdiff_t>(window_len)),
        start, signal.sample_rate_hz, signal.label});
  }
  return out;
}

} // namespace faultscope
