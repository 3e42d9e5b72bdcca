#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace photorig {

/// Body part label ids as stored in label maps. Background pixels hold kBackground.
enum class Part : int {
    head = 0,
    torso = 1,
    left_upper_arm = 2,
    left_lower_arm = 3,
    left_hand = 4,
    right_upper_arm = 5,
    right_lower_arm = 6,
    right_hand = 7,
    left_leg = 8,
    right_leg = 9,
};

inline constexpr int kPartCount = 10;
inline constexpr int kBackground = -1;

inline constexpr std::array<std::string_view, kPartCount> kPartNames{
    "head", "torso", "left_upper_arm", "left_lower_arm", "left_hand",
    "right_upper_arm", "right_lower_arm", "right_hand", "left_leg", "right_leg"};

constexpr int id(Part p) noexcept { return static_cast<int>(p); }

inline std::string_view part_name(int label) {
    return label >= 0 && label < kPartCount ? kPartNames[std::size_t(label)] : std::string_view("unknown");
}

inline std::optional<int> part_from_name(std::string_view name) {
    for (int i = 0; i < kPartCount; ++i)
        if (kPartNames[std::size_t(i)] == name)
            return i;
    return std::nullopt;
}

/// Head, torso and legs: the region completed behind occluding arms.
constexpr bool in_region_b(int label) noexcept {
    return label == id(Part::head) || label == id(Part::torso) || label == id(Part::left_leg) ||
           label == id(Part::right_leg);
}

constexpr bool is_left_arm(int label) noexcept { return label >= id(Part::left_upper_arm) && label <= id(Part::left_hand); }
constexpr bool is_right_arm(int label) noexcept { return label >= id(Part::right_upper_arm) && label <= id(Part::right_hand); }
constexpr bool is_arm(int label) noexcept { return is_left_arm(label) || is_right_arm(label); }

} // namespace photorig
