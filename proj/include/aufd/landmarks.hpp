#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "aufd/errors.hpp"

namespace aufd {

// Fixed 20-point landmark schema. Indices are stable; every AU definition
// and clip file references these names.
enum class Lm : int {
    brow_l_inner = 0,
    brow_l_outer,
    brow_r_inner,
    brow_r_outer,
    eye_l_center,
    eye_l_inner,
    eye_l_outer,
    eye_r_center,
    eye_r_inner,
    eye_r_outer,
    nose_bridge,
    nose_tip,
    mouth_l,
    mouth_r,
    mouth_top,
    mouth_bottom,
    cheek_l,
    cheek_r,
    dimple_l,
    dimple_r,
};

inline constexpr int kNumLandmarks = 20;

inline constexpr std::array<const char*, kNumLandmarks> kLandmarkNames = {
    "brow_l_inner", "brow_l_outer", "brow_r_inner", "brow_r_outer", "eye_l_center",
    "eye_l_inner",  "eye_l_outer",  "eye_r_center", "eye_r_inner",  "eye_r_outer",
    "nose_bridge",  "nose_tip",     "mouth_l",      "mouth_r",      "mouth_top",
    "mouth_bottom", "cheek_l",      "cheek_r",      "dimple_l",     "dimple_r",
};

struct Point {
    float x = 0.0f;
    float y = 0.0f;
};

using FrameLandmarks = std::array<Point, kNumLandmarks>;

inline const Point& landmark(const FrameLandmarks& lms, Lm which) {
    return lms[static_cast<std::size_t>(which)];
}

inline Point& landmark(FrameLandmarks& lms, Lm which) {
    return lms[static_cast<std::size_t>(which)];
}

inline int landmark_index(const std::string& name) {
    for (int i = 0; i < kNumLandmarks; ++i)
        if (name == kLandmarkNames[static_cast<std::size_t>(i)]) return i;
    throw DataError("unknown landmark name '" + name + "'");
}

} // namespace aufd
