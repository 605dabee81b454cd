#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aufd/landmarks.hpp"

namespace aufd {

// A clip of T_f RGB frames with values in [0,1] and per-frame landmarks.
// Pixel layout is row-major (t, c, y, x).
struct FrameStack {
    int t_f = 0;
    int h = 0;
    int w = 0;
    std::vector<float> pixels;
    std::vector<FrameLandmarks> landmarks;

    static FrameStack zero(int t_f, int h, int w);

    std::size_t idx(int t, int c, int y, int x) const {
        return ((static_cast<std::size_t>(t) * 3 + static_cast<std::size_t>(c)) * static_cast<std::size_t>(h) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(w) +
               static_cast<std::size_t>(x);
    }
    float at(int t, int c, int y, int x) const { return pixels[idx(t, c, y, x)]; }
    float& at(int t, int c, int y, int x) { return pixels[idx(t, c, y, x)]; }
    std::size_t pixel_count() const { return pixels.size(); }
};

struct EditDescriptor {
    std::string name;       // brow_raise | eye_size | mouth_corner
    float magnitude = 0.0f; // in [0,1]
};

// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct IntRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    int area() const { return (x1 - x0) * (y1 - y0); }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
};

struct LabeledClip {
    FrameStack stack;
    int label = 0; // 1 = fake
    std::optional<EditDescriptor> edit;
    std::uint64_t seed = 0;
    IntRect edit_region; // tight diff bound vs the seed-matched real clip; empty for reals
};

struct ClipGeometry {
    int t_f = 8;
    int h = 64;
    int w = 64;
    // Chroma residue left inside re-rendered (edited) strokes, emulating the
    // local re-synthesis footprint of editing pipelines.
    float edit_tint = 0.2f;
    float max_region_frac = 0.15f;
};

const std::vector<std::string>& known_edit_names();

// Equally spaced frame selection: index k maps to floor(k * L_raw / count).
FrameStack sample_frames(const FrameStack& raw, int count);

// Deterministic procedural face clip. Same (seed, geometry, edit) always
// yields a bit-identical clip; an edited clip differs from its seed-matched
// real twin only inside edit_region.
LabeledClip generate_synthetic_clip(std::uint64_t seed, const ClipGeometry& geom,
                                    const std::optional<EditDescriptor>& edit);

struct CorpusSpec {
    int n_clips = 0;
    float fake_fraction = 0.5f;
    std::uint64_t seed = 0;
    ClipGeometry geom;
};

// Alternates real/fake; fake edits rotate through the known edit names with
// seeded magnitudes in [0.4, 1.0].
std::vector<LabeledClip> generate_corpus(const CorpusSpec& spec);

double mean_abs_diff(const FrameStack& a, const FrameStack& b);

} // namespace aufd
