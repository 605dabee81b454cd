#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "aufd/ops.hpp"
#include "aufd/rng.hpp"
#include "aufd/tensor.hpp"
#include "aufd/tokenizer.hpp"

namespace aufd {

template <typename S>
Tensor<S> init_weight(Index rows, Index cols, Rng& rng, double stddev = 0.02) {
    ArrX<S> v(rows * cols);
    for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<S>(rng.trunc_normal(stddev));
    return Tensor<S>::from_array({rows, cols}, std::move(v), true);
}

// Per-head projections W_Q, W_K, W_V (each D x d with d = D/H) plus the
// output projection W_O (D x D).
template <typename S>
struct AttentionParams {
    std::vector<Tensor<S>> wq, wk, wv;
    Tensor<S> wo;

    static AttentionParams init(int d, int heads, Rng& rng) {
        if (heads <= 0 || d % heads != 0)
            throw ShapeError("attention: head count " + std::to_string(heads) + " must divide width " +
                             std::to_string(d));
        AttentionParams p;
        const int dh = d / heads;
        for (int h = 0; h < heads; ++h) {
            p.wq.push_back(init_weight<S>(d, dh, rng));
            p.wk.push_back(init_weight<S>(d, dh, rng));
            p.wv.push_back(init_weight<S>(d, dh, rng));
        }
        p.wo = init_weight<S>(d, d, rng);
        return p;
    }

    int heads() const { return static_cast<int>(wq.size()); }
    int width() const { return static_cast<int>(wo.rows()); }
};

// Pre-norm residual block: attention plus a 4x GELU feed-forward, with two
// layer-norm parameter pairs.
template <typename S>
struct BlockParams {
    AttentionParams<S> attn;
    Tensor<S> w_ff1, w_ff2;
    Tensor<S> ln1_g, ln1_b, ln2_g, ln2_b;

    static BlockParams init(int d, int heads, Rng& rng) {
        BlockParams b;
        b.attn = AttentionParams<S>::init(d, heads, rng);
        b.w_ff1 = init_weight<S>(d, 4 * d, rng);
        b.w_ff2 = init_weight<S>(4 * d, d, rng);
        b.ln1_g = Tensor<S>::filled({1, d}, S(1), true);
        b.ln1_b = Tensor<S>::zeros({1, d}, true);
        b.ln2_g = Tensor<S>::filled({1, d}, S(1), true);
        b.ln2_b = Tensor<S>::zeros({1, d}, true);
        return b;
    }
};

// L blocks plus, for decoders, the learnable placeholder token.
template <typename S>
struct StackParams {
    std::vector<BlockParams<S>> blocks;
    Tensor<S> mask_token; // defined for decoder stacks only

    static StackParams init(int d, int heads, int depth, Rng& rng, bool decoder = false) {
        StackParams s;
        for (int i = 0; i < depth; ++i) s.blocks.push_back(BlockParams<S>::init(d, heads, rng));
        if (decoder) s.mask_token = init_weight<S>(1, d, rng);
        return s;
    }

    int depth() const { return static_cast<int>(blocks.size()); }
};

// head_h = softmax(Q_h K_h^T / sqrt(d)) V_h with queries projected from
// queries_from and keys/values from keys_values_from; heads are concatenated
// and passed through W_O. Self-attention is the case where both arguments
// are the same sequence. attn_out, when given, receives each head's
// attention probabilities.
template <typename S>
Tensor<S> mh_attention(const Tensor<S>& queries_from, const Tensor<S>& keys_values_from,
                       const AttentionParams<S>& params, std::vector<MatRM<S>>* attn_out = nullptr) {
    const int d = params.width();
    if (queries_from.rank() != 2 || keys_values_from.rank() != 2 || queries_from.cols() != d ||
        keys_values_from.cols() != d)
        throw ShapeError("mh_attention: inputs must be rank-2 with width " + std::to_string(d));
    const int dh = d / params.heads();
    const S inv_sqrt_d = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));
    std::vector<Tensor<S>> heads;
    heads.reserve(params.wq.size());
    for (std::size_t h = 0; h < params.wq.size(); ++h) {
        Tensor<S> q = matmul(queries_from, params.wq[h]);
        Tensor<S> k = matmul(keys_values_from, params.wk[h]);
        Tensor<S> v = matmul(keys_values_from, params.wv[h]);
        Tensor<S> attn = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_d));
        if (attn_out) attn_out->push_back(attn.mat());
        heads.push_back(matmul(attn, v));
    }
    return matmul(hconcat(heads), params.wo);
}

// x + MHA(norm(cond or x), norm(x)) followed by x + FFN(norm(x)). The
// conditioning sequence supplies queries; keys/values and both residual
// paths stay on x.
template <typename S>
Tensor<S> block_forward(const Tensor<S>& x, const Tensor<S>* cond, const BlockParams<S>& p,
                        std::vector<MatRM<S>>* attn_out = nullptr) {
    Tensor<S> normed_x = layer_norm(x, p.ln1_g, p.ln1_b);
    Tensor<S> normed_q = cond ? layer_norm(*cond, p.ln1_g, p.ln1_b) : normed_x;
    Tensor<S> h = add(x, mh_attention(normed_q, normed_x, p.attn, attn_out));
    Tensor<S> ff_in = layer_norm(h, p.ln2_g, p.ln2_b);
    Tensor<S> ff = matmul(gelu(matmul(ff_in, p.w_ff1)), p.w_ff2);
    return add(h, ff);
}

// Runs the self-attention stack and returns every intermediate layer output
// X(1)..X(L); the fusion wiring conditions on them layer by layer.
template <typename S>
std::vector<Tensor<S>> encoder_forward(const Tensor<S>& x, const StackParams<S>& stack) {
    std::vector<Tensor<S>> outputs;
    outputs.reserve(stack.blocks.size());
    Tensor<S> cur = x;
    for (const BlockParams<S>& b : stack.blocks) {
        cur = block_forward<S>(cur, nullptr, b);
        outputs.push_back(cur);
    }
    return outputs;
}

// Scatters visible encoder outputs back to full resolution, broadcasts the
// learnable placeholder (plus the cell's positional encoding) into masked
// rows, runs the decoder stack, and projects every token to its target
// patch.
template <typename S>
Tensor<S> decoder_forward(const LatentSequence<S>& visible, const MaskPattern& mask,
                          const StackParams<S>& stack, const Tensor<S>& output_proj,
                          const MatRM<S>& pe) {
    const Index n = static_cast<Index>(mask.visible.size() + mask.masked.size());
    if (visible.values.rows() != static_cast<Index>(mask.visible.size()))
        throw ContractError("decoder_forward: visible rows " + std::to_string(visible.values.rows()) +
                            " != mask visible count " + std::to_string(mask.visible.size()));
    if (!stack.mask_token.defined())
        throw ContractError("decoder_forward: stack has no placeholder token");
    const Index d = visible.values.cols();
    Tensor<S> full = scatter_rows_with_fill(visible.values, mask.visible, n, stack.mask_token);
    if (!mask.masked.empty()) {
        // placeholder rows receive the positional encoding of their target cell
        ArrX<S> pe_masked = ArrX<S>::Zero(n * d);
        for (int r : mask.masked)
            for (Index j = 0; j < d; ++j) pe_masked[static_cast<Index>(r) * d + j] = pe(r, j);
        full = add(full, Tensor<S>::from_array({n, d}, std::move(pe_masked)));
    }
    Tensor<S> cur = full;
    for (const BlockParams<S>& b : stack.blocks) cur = block_forward<S>(cur, nullptr, b);
    return matmul(cur, output_proj);
}

// Checkpoint-facing parameter enumeration, stable order.
template <typename S>
void collect_params(const std::string& prefix, StackParams<S>& stack,
                    std::vector<std::pair<std::string, Tensor<S>*>>& out) {
    for (std::size_t i = 0; i < stack.blocks.size(); ++i) {
        BlockParams<S>& b = stack.blocks[i];
        const std::string base = prefix + ".block" + std::to_string(i);
        for (std::size_t h = 0; h < b.attn.wq.size(); ++h) {
            out.emplace_back(base + ".attn.q" + std::to_string(h), &b.attn.wq[h]);
            out.emplace_back(base + ".attn.k" + std::to_string(h), &b.attn.wk[h]);
            out.emplace_back(base + ".attn.v" + std::to_string(h), &b.attn.wv[h]);
        }
        out.emplace_back(base + ".attn.o", &b.attn.wo);
        out.emplace_back(base + ".ff1", &b.w_ff1);
        out.emplace_back(base + ".ff2", &b.w_ff2);
        out.emplace_back(base + ".ln1_g", &b.ln1_g);
        out.emplace_back(base + ".ln1_b", &b.ln1_b);
        out.emplace_back(base + ".ln2_g", &b.ln2_g);
        out.emplace_back(base + ".ln2_b", &b.ln2_b);
    }
    if (stack.mask_token.defined()) out.emplace_back(prefix + ".mask_token", &stack.mask_token);
}

} // namespace aufd
