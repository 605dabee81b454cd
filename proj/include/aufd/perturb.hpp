#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "aufd/frames.hpp"

namespace aufd {

enum class PerturbFamily { saturation, contrast, gaussian_noise, gaussian_blur, pixelation, blocking };

inline constexpr std::array<PerturbFamily, 6> kAllPerturbFamilies = {
    PerturbFamily::saturation,    PerturbFamily::contrast,   PerturbFamily::gaussian_noise,
    PerturbFamily::gaussian_blur, PerturbFamily::pixelation, PerturbFamily::blocking,
};

struct PerturbationSpec {
    PerturbFamily family = PerturbFamily::saturation;
    float parameter = 1.0f;
    std::uint64_t seed = 0; // noise only
};

const char* family_name(PerturbFamily f);
PerturbFamily parse_family(const std::string& name);

// Valid parameter range per family: saturation/contrast [0.5,2.0], noise std
// [0.01,0.1], blur radius [3,11], pixelation factor [4,16], blocking quality
// [10,50].
std::array<float, 2> family_range(PerturbFamily f);

// The range end that stresses the model most, and the mildest in-range value.
float family_extreme(PerturbFamily f);
float family_mildest(PerturbFamily f);

void validate_spec(const PerturbationSpec& spec);

// Applies one perturbation to every frame; output clamped to [0,1] and
// landmarks carried over unchanged. Identity parameters (saturation or
// contrast at 1.0) return a bitwise copy of the input.
FrameStack apply_perturbation(const FrameStack& stack, const PerturbationSpec& spec);

} // namespace aufd
