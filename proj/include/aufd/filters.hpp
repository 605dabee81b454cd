#pragma once

#include <cmath>
#include <vector>

namespace aufd {

// Normalized Gaussian taps with sigma = radius/3 and half-width = radius.
inline std::vector<float> gaussian_kernel(int radius) {
    const double sigma = static_cast<double>(radius) / 3.0;
    std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
        sum += v;
    }
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

// index reflection at the borders (…, 1, 0 | 0, 1, …); preserves constants
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// In-place separable Gaussian blur of one h x w plane.
inline void separable_blur(float* plane, int h, int w, const std::vector<float>& kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<float> tmp(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       plane[y * w + reflect_index(x + k, w)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(reflect_index(y + k, h)) * w + x];
            plane[y * w + x] = acc;
        }
    }
}

} // namespace aufd
