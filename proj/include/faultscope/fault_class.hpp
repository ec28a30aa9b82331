#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace faultscope {

enum class FaultClass : int { Normal = 0, Ball = 1, InnerRace = 2, OuterRace = 3 };

inline constexpr int kNumClasses = 4;

inline constexpr std::array<FaultClass, kNumClasses> kAllClasses{
    FaultClass::Normal, FaultClass::Ball, FaultClass::InnerRace,
    FaultClass::OuterRace};

constexpr int class_id(FaultClass c) noexcept { return static_cast<int>(c); }

std::string_view class_name(FaultClass c) noexcept;

/// Nullopt when id is outside 0..3.
std::optional<FaultClass> class_from_id(long id) noexcept;

/// Accepts the canonical names ("Normal", "Ball", "InnerRace", "OuterRace").
std::optional<FaultClass> class_from_name(std::string_view name) noexcept;

} // namespace faultscope
