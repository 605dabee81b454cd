#include "aufd/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "aufd/errors.hpp"
#include "aufd/filters.hpp"
#include "aufd/rng.hpp"

namespace aufd {

const char* family_name(PerturbFamily f) {
    switch (f) {
        case PerturbFamily::saturation: return "saturation";
        case PerturbFamily::contrast: return "contrast";
        case PerturbFamily::gaussian_noise: return "gaussian_noise";
        case PerturbFamily::gaussian_blur: return "gaussian_blur";
        case PerturbFamily::pixelation: return "pixelation";
        case PerturbFamily::blocking: return "blocking";
    }
    return "?";
}

PerturbFamily parse_family(const std::string& name) {
    for (PerturbFamily f : kAllPerturbFamilies)
        if (name == family_name(f)) return f;
    throw ConfigError("unknown perturbation family '" + name + "'");
}

std::array<float, 2> family_range(PerturbFamily f) {
    switch (f) {
        case PerturbFamily::saturation: return {0.5f, 2.0f};
        case PerturbFamily::contrast: return {0.5f, 2.0f};
        case PerturbFamily::gaussian_noise: return {0.01f, 0.1f};
        case PerturbFamily::gaussian_blur: return {3.0f, 11.0f};
        case PerturbFamily::pixelation: return {4.0f, 16.0f};
        case PerturbFamily::blocking: return {10.0f, 50.0f};
    }
    return {0.0f, 0.0f};
}

float family_extreme(PerturbFamily f) {
    // blocking quality gets worse toward the low end; all others toward the high end
    return f == PerturbFamily::blocking ? family_range(f)[0] : family_range(f)[1];
}

float family_mildest(PerturbFamily f) {
    switch (f) {
        case PerturbFamily::saturation: return 1.0f; // identity anchor inside [0.5,2.0]
        case PerturbFamily::contrast: return 1.0f;
        case PerturbFamily::gaussian_noise: return 0.01f;
        case PerturbFamily::gaussian_blur: return 3.0f;
        case PerturbFamily::pixelation: return 4.0f;
        case PerturbFamily::blocking: return 50.0f;
    }
    return 0.0f;
}

void validate_spec(const PerturbationSpec& spec) {
    const auto [lo, hi] = family_range(spec.family);
    if (spec.parameter < lo || spec.parameter > hi)
        throw ConfigError(std::string("perturbation ") + family_name(spec.family) + " parameter " +
                          std::to_string(spec.parameter) + " outside [" + std::to_string(lo) + "," +
                          std::to_string(hi) + "]");
    if (spec.family == PerturbFamily::gaussian_blur || spec.family == PerturbFamily::pixelation) {
        if (spec.parameter != std::floor(spec.parameter))
            throw ConfigError(std::string("perturbation ") + family_name(spec.family) +
                              " parameter must be an integer");
    }
}

namespace {

void saturate(FrameStack& s, float f) {
    for (int t = 0; t < s.t_f; ++t)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                const float r = s.at(t, 0, y, x), g = s.at(t, 1, y, x), b = s.at(t, 2, y, x);
                const float luma = 0.299f * r + 0.587f * g + 0.114f * b;
                s.at(t, 0, y, x) = std::clamp(luma + f * (r - luma), 0.0f, 1.0f);
                s.at(t, 1, y, x) = std::clamp(luma + f * (g - luma), 0.0f, 1.0f);
                s.at(t, 2, y, x) = std::clamp(luma + f * (b - luma), 0.0f, 1.0f);
            }
}

void contrast(FrameStack& s, float f) {
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int t = 0; t < s.t_f; ++t)
        for (int c = 0; c < 3; ++c) {
            float* p = s.pixels.data() + s.idx(t, c, 0, 0);
            double mean = 0.0;
            for (std::size_t i = 0; i < plane; ++i) mean += p[i];
            const float m = static_cast<float>(mean / static_cast<double>(plane));
            for (std::size_t i = 0; i < plane; ++i)
                p[i] = std::clamp(m + f * (p[i] - m), 0.0f, 1.0f);
        }
}

void add_noise(FrameStack& s, float sigma, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x4015e));
    for (float& v : s.pixels)
        v = std::clamp(v + static_cast<float>(rng.normal(0.0, sigma)), 0.0f, 1.0f);
}

void blur(FrameStack& s, int radius) {
    const auto kernel = gaussian_kernel(radius);
    for (int t = 0; t < s.t_f; ++t)
        for (int c = 0; c < 3; ++c)
            separable_blur(s.pixels.data() + s.idx(t, c, 0, 0), s.h, s.w, kernel);
    for (float& v : s.pixels) v = std::clamp(v, 0.0f, 1.0f);
}

void pixelate(FrameStack& s, int factor) {
    for (int t = 0; t < s.t_f; ++t)
        for (int c = 0; c < 3; ++c) {
            float* p = s.pixels.data() + s.idx(t, c, 0, 0);
            for (int by = 0; by < s.h; by += factor)
                for (int bx = 0; bx < s.w; bx += factor) {
                    const int y1 = std::min(by + factor, s.h), x1 = std::min(bx + factor, s.w);
                    double acc = 0.0;
                    for (int y = by; y < y1; ++y)
                        for (int x = bx; x < x1; ++x) acc += p[y * s.w + x];
                    const float m = static_cast<float>(acc / ((y1 - by) * (x1 - bx)));
                    for (int y = by; y < y1; ++y)
                        for (int x = bx; x < x1; ++x) p[y * s.w + x] = m;
                }
        }
}

// 8x8 orthonormal DCT-II basis.
const float* dct_basis() {
    static float c[64];
    static bool init = false;
    if (!init) {
        for (int k = 0; k < 8; ++k) {
            const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n)
                c[k * 8 + n] = static_cast<float>(a * std::cos(M_PI * (2.0 * n + 1.0) * k / 16.0));
        }
        init = true;
    }
    return c;
}

// Uniform quantization of 8x8 DCT coefficients; the quantizer step scales
// with (100 - quality).
void blocking(FrameStack& s, float quality) {
    const float* c = dct_basis();
    const float step = (100.0f - quality) * 0.004f;
    const int bh = (s.h + 7) / 8, bw = (s.w + 7) / 8;
    std::vector<float> block(64), coef(64), tmp(64);
    for (int t = 0; t < s.t_f; ++t)
        for (int ch = 0; ch < 3; ++ch) {
            float* p = s.pixels.data() + s.idx(t, ch, 0, 0);
            for (int by = 0; by < bh; ++by)
                for (int bx = 0; bx < bw; ++bx) {
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x)
                            block[y * 8 + x] =
                                p[reflect_index(by * 8 + y, s.h) * s.w + reflect_index(bx * 8 + x, s.w)];
                    // coef = C * block * C^T
                    for (int k = 0; k < 8; ++k)
                        for (int x = 0; x < 8; ++x) {
                            float acc = 0.0f;
                            for (int n = 0; n < 8; ++n) acc += c[k * 8 + n] * block[n * 8 + x];
                            tmp[k * 8 + x] = acc;
                        }
                    for (int k = 0; k < 8; ++k)
                        for (int j = 0; j < 8; ++j) {
                            float acc = 0.0f;
                            for (int n = 0; n < 8; ++n) acc += tmp[k * 8 + n] * c[j * 8 + n];
                            coef[k * 8 + j] = std::round(acc / step) * step;
                        }
                    // block = C^T * coef * C
                    for (int y = 0; y < 8; ++y)
                        for (int j = 0; j < 8; ++j) {
                            float acc = 0.0f;
                            for (int n = 0; n < 8; ++n) acc += c[n * 8 + y] * coef[n * 8 + j];
                            tmp[y * 8 + j] = acc;
                        }
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x) {
                            float acc = 0.0f;
                            for (int n = 0; n < 8; ++n) acc += tmp[y * 8 + n] * c[n * 8 + x];
                            const int yy = by * 8 + y, xx = bx * 8 + x;
                            if (yy < s.h && xx < s.w) p[yy * s.w + xx] = std::clamp(acc, 0.0f, 1.0f);
                        }
                }
        }
}

} // namespace

FrameStack apply_perturbation(const FrameStack& stack, const PerturbationSpec& spec) {
    validate_spec(spec);
    FrameStack out = stack;
    switch (spec.family) {
        case PerturbFamily::saturation:
            if (spec.parameter != 1.0f) saturate(out, spec.parameter);
            break;
        case PerturbFamily::contrast:
            if (spec.parameter != 1.0f) contrast(out, spec.parameter);
            break;
        case PerturbFamily::gaussian_noise:
            add_noise(out, spec.parameter, spec.seed);
            break;
        case PerturbFamily::gaussian_blur:
            blur(out, static_cast<int>(spec.parameter));
            break;
        case PerturbFamily::pixelation:
            pixelate(out, static_cast<int>(spec.parameter));
            break;
        case PerturbFamily::blocking:
            blocking(out, spec.parameter);
            break;
    }
    return out;
}

} // namespace aufd
