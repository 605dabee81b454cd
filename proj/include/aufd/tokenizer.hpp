#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aufd/au_maps.hpp"
#include "aufd/frames.hpp"
#include "aufd/ops.hpp"
#include "aufd/rng.hpp"
#include "aufd/tensor.hpp"

namespace aufd {

struct GridDims {
    int n_t = 0, n_h = 0, n_w = 0;
    int count() const { return n_t * n_h * n_w; }
    bool operator==(const GridDims&) const = default;
};

// N x (T*C*P*P) matrix of flattened tube voxels, row-major over (t, h, w)
// grid cells; voxel order within a token is (t, c, y, x).
template <typename S>
struct TubeTokenGrid {
    MatRM<S> tokens;
    GridDims grid;
    int tube_t = 0;
    int tube_p = 0;
    int channels = 0;
};

namespace detail {

template <typename S>
TubeTokenGrid<S> partition_planes(const float* data, int t_f, int channels, int h, int w, int tube_t,
                                  int tube_p) {
    if (tube_t <= 0 || t_f % tube_t != 0)
        throw ShapeError("tubelet_partition: tube size " + std::to_string(tube_t) +
                         " does not divide frame count " + std::to_string(t_f) + " on the temporal axis");
    if (tube_p <= 0 || h % tube_p != 0)
        throw ShapeError("tubelet_partition: patch size " + std::to_string(tube_p) +
                         " does not divide height " + std::to_string(h));
    if (w % tube_p != 0)
        throw ShapeError("tubelet_partition: patch size " + std::to_string(tube_p) +
                         " does not divide width " + std::to_string(w));
    TubeTokenGrid<S> out;
    out.grid = {t_f / tube_t, h / tube_p, w / tube_p};
    out.tube_t = tube_t;
    out.tube_p = tube_p;
    out.channels = channels;
    const int token_dim = tube_t * channels * tube_p * tube_p;
    out.tokens.resize(out.grid.count(), token_dim);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Index row = 0;
    for (int gt = 0; gt < out.grid.n_t; ++gt)
        for (int gy = 0; gy < out.grid.n_h; ++gy)
            for (int gx = 0; gx < out.grid.n_w; ++gx, ++row) {
                S* dst = out.tokens.row(row).data();
                for (int dt = 0; dt < tube_t; ++dt)
                    for (int c = 0; c < channels; ++c) {
                        const float* src = data +
                                           (static_cast<std::size_t>(gt * tube_t + dt) * channels + c) * plane;
                        for (int py = 0; py < tube_p; ++py) {
                            const float* line = src + static_cast<std::size_t>(gy * tube_p + py) * w +
                                                static_cast<std::size_t>(gx) * tube_p;
                            for (int px = 0; px < tube_p; ++px) *dst++ = static_cast<S>(line[px]);
                        }
                    }
            }
    return out;
}

// Inverse of partition_planes for an arbitrary value buffer.
template <typename S>
void fold_planes(const S* tokens, const GridDims& grid, int tube_t, int tube_p, int channels, float* data,
                 int h, int w) {
    const int token_dim = tube_t * channels * tube_p * tube_p;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Index row = 0;
    for (int gt = 0; gt < grid.n_t; ++gt)
        for (int gy = 0; gy < grid.n_h; ++gy)
            for (int gx = 0; gx < grid.n_w; ++gx, ++row) {
                const S* src = tokens + static_cast<std::size_t>(row) * token_dim;
                for (int dt = 0; dt < tube_t; ++dt)
                    for (int c = 0; c < channels; ++c) {
                        float* dst = data +
                                     (static_cast<std::size_t>(gt * tube_t + dt) * channels + c) * plane;
                        for (int py = 0; py < tube_p; ++py) {
                            float* line = dst + static_cast<std::size_t>(gy * tube_p + py) * w +
                                          static_cast<std::size_t>(gx) * tube_p;
                            for (int px = 0; px < tube_p; ++px) line[px] = static_cast<float>(*src++);
                        }
                    }
            }
}

} // namespace detail

template <typename S>
TubeTokenGrid<S> tubelet_partition(const FrameStack& stack, int tube_t, int tube_p) {
    return detail::partition_planes<S>(stack.pixels.data(), stack.t_f, 3, stack.h, stack.w, tube_t, tube_p);
}

// AU targets enter the decoder loss as tube tokens too; channel count is F
// (or 3F in the replicated paper-shape mode handled by the caller).
template <typename S>
TubeTokenGrid<S> tubelet_partition_au(const AUMapStack& maps, int tube_t, int tube_p) {
    return detail::partition_planes<S>(maps.maps.data(), maps.t_f, maps.f, maps.h, maps.w, tube_t, tube_p);
}

template <typename S>
FrameStack tubelet_fold(const TubeTokenGrid<S>& grid) {
    if (grid.channels != 3) throw ShapeError("tubelet_fold: expected 3 channels");
    FrameStack out = FrameStack::zero(grid.grid.n_t * grid.tube_t, grid.grid.n_h * grid.tube_p,
                                      grid.grid.n_w * grid.tube_p);
    detail::fold_planes(grid.tokens.data(), grid.grid, grid.tube_t, grid.tube_p, 3, out.pixels.data(),
                        out.h, out.w);
    return out;
}

// Deterministic separable sinusoidal positional encoding. D splits into a
// temporal half and a D/4-per-spatial-axis half, sin/cos interleaved per
// band.
template <typename S>
MatRM<S> positional_encoding(const GridDims& grid, int d) {
    if (d % 4 != 0) throw ConfigError("positional_encoding: D must be divisible by 4, got " + std::to_string(d));
    const int dt = d / 2, dh = d / 4, dw = d / 4;
    MatRM<S> pe(grid.count(), d);
    auto fill_band = [](S* dst, int band_width, double pos) {
        for (int k = 0; 2 * k < band_width; ++k) {
            const double freq = std::pow(10000.0, -2.0 * k / band_width);
            dst[2 * k] = static_cast<S>(std::sin(pos * freq));
            if (2 * k + 1 < band_width) dst[2 * k + 1] = static_cast<S>(std::cos(pos * freq));
        }
    };
    Index row = 0;
    for (int t = 0; t < grid.n_t; ++t)
        for (int y = 0; y < grid.n_h; ++y)
            for (int x = 0; x < grid.n_w; ++x, ++row) {
                S* r = pe.row(row).data();
                fill_band(r, dt, static_cast<double>(t));
                fill_band(r + dt, dh, static_cast<double>(y));
                fill_band(r + dt + dh, dw, static_cast<double>(x));
            }
    return pe;
}

// Deterministic partition of token indices into visible and masked sets.
struct MaskPattern {
    std::vector<int> visible;
    std::vector<int> masked;
    std::uint64_t seed = 0;
    float ratio = 0.0f;
};

inline MaskPattern sample_mask(int n, float ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0f && ratio < 1.0f))
        throw ConfigError("sample_mask: ratio must lie in [0,1), got " + std::to_string(ratio));
    if (n <= 0) throw ContractError("sample_mask: token count must be positive");
    const int m_visible = static_cast<int>(std::lround(n * (1.0 - static_cast<double>(ratio))));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(mix_seed(seed, 0x3a5c));
    rng.shuffle(order);
    MaskPattern mp;
    mp.seed = seed;
    mp.ratio = ratio;
    mp.masked.assign(order.begin(), order.begin() + (n - m_visible));
    mp.visible.assign(order.begin() + (n - m_visible), order.end());
    std::sort(mp.masked.begin(), mp.masked.end());
    std::sort(mp.visible.begin(), mp.visible.end());
    return mp;
}

// Token embeddings flowing through the encoders; positions map rows back to
// grid cells.
template <typename S>
struct LatentSequence {
    Tensor<S> values;
    std::vector<int> positions;
    GridDims grid;
};

// values = tokens * W_embed + PE; the encoding is added before any masking.
template <typename S>
LatentSequence<S> embed_tokens(const TubeTokenGrid<S>& grid, const Tensor<S>& w_embed,
                               const Tensor<S>& pe) {
    const Index token_dim = grid.tokens.cols();
    if (w_embed.rank() != 2 || w_embed.rows() != token_dim)
        throw ShapeError("embed_tokens: weight shape " + shape_str(w_embed.shape()) +
                         " does not accept token dim " + std::to_string(token_dim));
    if (pe.rows() != grid.tokens.rows() || pe.cols() != w_embed.cols())
        throw ShapeError("embed_tokens: positional encoding shape mismatch");
    LatentSequence<S> out;
    out.values = add(matmul(Tensor<S>::from_matrix(grid.tokens), w_embed), pe);
    out.grid = grid.grid;
    out.positions.resize(static_cast<std::size_t>(grid.tokens.rows()));
    for (int i = 0; i < grid.tokens.rows(); ++i) out.positions[static_cast<std::size_t>(i)] = i;
    return out;
}

template <typename S>
LatentSequence<S> gather_visible(const LatentSequence<S>& seq, const MaskPattern& mask) {
    if (static_cast<Index>(mask.visible.size() + mask.masked.size()) != seq.values.rows())
        throw ContractError("gather_visible: mask covers " +
                            std::to_string(mask.visible.size() + mask.masked.size()) + " rows, sequence has " +
                            std::to_string(seq.values.rows()));
    LatentSequence<S> out;
    out.values = gather_rows(seq.values, mask.visible);
    out.grid = seq.grid;
    out.positions.reserve(mask.visible.size());
    for (int i : mask.visible) out.positions.push_back(seq.positions[static_cast<std::size_t>(i)]);
    return out;
}

} // namespace aufd
