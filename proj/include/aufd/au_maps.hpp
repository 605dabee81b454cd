#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aufd/frames.hpp"
#include "aufd/config.hpp"

namespace aufd {

// Per-frame stack of F soft activation maps in [0,1]; layout (t, au, y, x).
struct AUMapStack {
    int t_f = 0;
    int f = 0;
    int h = 0;
    int w = 0;
    std::vector<float> maps;

    static AUMapStack zero(int t_f, int f, int h, int w);

    std::size_t idx(int t, int au, int y, int x) const {
        return ((static_cast<std::size_t>(t) * static_cast<std::size_t>(f) + static_cast<std::size_t>(au)) *
                    static_cast<std::size_t>(h) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(w) +
               static_cast<std::size_t>(x);
    }
    float at(int t, int au, int y, int x) const { return maps[idx(t, au, y, x)]; }
    float& at(int t, int au, int y, int x) { return maps[idx(t, au, y, x)]; }
};

struct AUDefinition {
    int au_index; // 1..16
    const char* name;
    std::vector<Lm> points;
    float scale; // region scale over the principal landmark spread
};

// Fixed registry over the 20-point schema. Indices 1-5 reference brow/eye
// landmarks, 6 the cheeks, 7-11 nose/cheek, 12-16 mouth/dimple.
const std::array<AUDefinition, 16>& au_registry();

struct AUSubset {
    std::string name;
    std::vector<int> indices; // au_index values
    bool contains(int au_index) const;
};

// eyes = {1..5}, nose = {7..11}, lips = {12..16}, all = {1..16}
AUSubset au_subset(AUSubsetName name);

struct Ellipse {
    float cx = 0, cy = 0;
    float semi_major = 0, semi_minor = 0;
    float rotation = 0; // radians, major-axis direction
};

// Centroid-centered ellipse whose axes follow the points' principal spread,
// scaled; a degenerate spread gets a 2 px floor per axis.
Ellipse fit_ellipse(std::span<const Point> points, float scale);

// 1 where the pixel center falls inside the ellipse, clipped to the frame.
std::vector<std::uint8_t> rasterize_region(const Ellipse& e, int h, int w);

// Separable Gaussian (sigma = radius/3, half-width = radius, reflective
// boundary), clamped to [0,1].
void gaussian_smooth(std::vector<float>& map, int h, int w, int radius = 3);

// fit -> rasterize -> smooth per frame and per AU in the subset; channels
// outside the subset stay zero so indexing is stable across subsets.
AUMapStack build_au_stack(const FrameStack& stack, const AUSubset& subset, int f_aus = 16,
                          int smooth_radius = 3);

// .aumap container: AUFD header plus F x T_f x H x W float32 payload.
void write_aumap(const AUMapStack& maps, const std::filesystem::path& path);
AUMapStack read_aumap(const std::filesystem::path& path);

// Plain 8-bit PGM dump of one map, for eyeballing.
void write_pgm(const float* plane, int h, int w, const std::filesystem::path& path);

} // namespace aufd
