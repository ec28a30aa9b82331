#include "faultscope/fault_class.hpp"

namespace faultscope {

namespace {
constexpr std::array<std::string_view, kNumClasses> kNames{
    "Normal", "Ball", "InnerRace", "OuterRace"};
}

std::string_view class_name(FaultClass c) noexcept {
  return kNames[static_cast<std::size_t>(class_id(c))];
}

std::optional<FaultClass> class_from_id(long id) noexcept {
  if (id < 0 || id >= kNumClasses) return std::nullopt;
  return static_cast<FaultClass>(id);
}

std::optional<FaultClass> class_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<FaultClass>(i);
  return std::nullopt;
}

} // namespace faultscope
