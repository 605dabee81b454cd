#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aufd/attention.hpp"
#include "aufd/checkpoint.hpp"
#include "aufd/config.hpp"
#include "aufd/optimizer.hpp"
#include "aufd/pretext.hpp"
#include "aufd/tokenizer.hpp"

namespace aufd {

struct DetectionScore {
    double probability = 0.5;
    double logit = 0.0;
    std::string clip_id;
};

// mean-pool -> layer norm -> linear to one logit
template <typename S>
struct ClassifierHead {
    Tensor<S> ln_g, ln_b;
    Tensor<S> w; // D x 1
    Tensor<S> b; // 1 x 1

    static ClassifierHead init(int d, Rng& rng) {
        ClassifierHead h;
        h.ln_g = Tensor<S>::filled({1, d}, S(1), true);
        h.ln_b = Tensor<S>::zeros({1, d}, true);
        h.w = init_weight<S>(d, 1, rng);
        h.b = Tensor<S>::zeros({1, 1}, true);
        return h;
    }
};

// The fused encoder of the detector: the VFE stream carries keys/values and
// the residual path; from layer 2 on its blocks take queries from the
// matching AUE layer outputs. Single-stream modes run one stack with plain
// self-attention; baseline is the VFE architecture without pretraining.
template <typename S>
struct FusedModel {
    ModelConfig cfg;
    Mode mode = Mode::fused;
    Tensor<S> vfe_embed, aue_embed;
    StackParams<S> vfe, aue;
    std::vector<char> cross_enabled; // per VFE layer; layer 1 stays self-attention
    ClassifierHead<S> head;
    MatRM<S> pe;
    std::int64_t step_count = 0;

    bool uses_vfe() const { return mode != Mode::aue_only; }
    bool uses_aue() const { return mode == Mode::fused || mode == Mode::aue_only; }

    static FusedModel init(const ModelConfig& cfg, Mode mode, std::uint64_t seed) {
        cfg.validate_or_throw();
        FusedModel m;
        m.cfg = cfg;
        m.mode = mode;
        Rng rng(mix_seed(seed, 0xF5ED));
        if (m.uses_vfe()) {
            m.vfe_embed = init_weight<S>(cfg.token_dim(), cfg.d, rng);
            m.vfe = StackParams<S>::init(cfg.d, cfg.heads, cfg.l, rng, false);
        }
        if (m.uses_aue()) {
            m.aue_embed = init_weight<S>(cfg.token_dim(), cfg.d, rng);
            m.aue = StackParams<S>::init(cfg.d, cfg.heads, cfg.l, rng, false);
        }
        m.cross_enabled.assign(static_cast<std::size_t>(cfg.l), mode == Mode::fused ? 1 : 0);
        if (!m.cross_enabled.empty()) m.cross_enabled[0] = 0;
        m.head = ClassifierHead<S>::init(cfg.d, rng);
        m.pe = positional_encoding<S>({cfg.grid_t(), cfg.grid_h(), cfg.grid_w()}, cfg.d);
        return m;
    }

    std::vector<std::pair<std::string, Tensor<S>*>> named_params() {
        std::vector<std::pair<std::string, Tensor<S>*>> out;
        if (uses_vfe()) {
            out.emplace_back("vfe.embed", &vfe_embed);
            collect_params("vfe", vfe, out);
        }
        if (uses_aue()) {
            out.emplace_back("aue.embed", &aue_embed);
            collect_params("aue", aue, out);
        }
        out.emplace_back("head.ln_g", &head.ln_g);
        out.emplace_back("head.ln_b", &head.ln_b);
        out.emplace_back("head.w", &head.w);
        out.emplace_back("head.b", &head.b);
        return out;
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (auto& [name, p] : named_params()) n += p->size();
        return n;
    }
};

template <typename S>
struct FusedForward {
    Tensor<S> x_e;
    GridDims grid;
    // cross-attention probabilities per conditioned VFE layer, one matrix per
    // head; the last entry is the final cross block (the Fig-5 source)
    std::vector<std::vector<MatRM<S>>> cross_attn;
};

// No masking here: fine-tuning and inference see all N tokens.
template <typename S>
FusedForward<S> fused_forward(const FrameStack& clip, FusedModel<S>& m, bool collect_attn = false) {
    const ModelConfig& cfg = m.cfg;
    if (clip.t_f != cfg.t_f || clip.h != cfg.h_px || clip.w != cfg.w_px)
        throw ShapeError("fused_forward: clip dims do not match config");
    TubeTokenGrid<S> grid = tubelet_partition<S>(clip, cfg.tube_t, cfg.tube_p);
    FusedForward<S> out;
    out.grid = grid.grid;
    Tensor<S> pe = Tensor<S>::from_matrix(m.pe);

    if (m.mode != Mode::fused) {
        Tensor<S>& embed = m.uses_vfe() ? m.vfe_embed : m.aue_embed;
        StackParams<S>& stack = m.uses_vfe() ? m.vfe : m.aue;
        LatentSequence<S> x = embed_tokens(grid, embed, pe);
        out.x_e = encoder_forward(x.values, stack).back();
        return out;
    }

    LatentSequence<S> x1 = embed_tokens(grid, m.vfe_embed, pe); // VFE stream
    LatentSequence<S> x2 = embed_tokens(grid, m.aue_embed, pe); // AUE stream
    const std::vector<Tensor<S>> aue_layers = encoder_forward(x2.values, m.aue);
    Tensor<S> cur = x1.values;
    for (std::size_t li = 0; li < m.vfe.blocks.size(); ++li) {
        const bool cross = m.cross_enabled[li] != 0;
        std::vector<MatRM<S>>* sink = nullptr;
        if (cross && collect_attn) {
            out.cross_attn.emplace_back();
            sink = &out.cross_attn.back();
        }
        // queries for layer i come from the AUE output of layer i-1
        cur = block_forward<S>(cur, cross ? &aue_layers[li - 1] : nullptr, m.vfe.blocks[li], sink);
    }
    out.x_e = cur;
    return out;
}

template <typename S>
Tensor<S> classify_logit(const Tensor<S>& x_e, const ClassifierHead<S>& head) {
    if (x_e.rank() != 2 || x_e.cols() != head.w.rows())
        throw ShapeError("classify: X_E width " + shape_str(x_e.shape()) + " does not match head");
    Tensor<S> pooled = mean_rows(x_e);
    Tensor<S> normed = layer_norm(pooled, head.ln_g, head.ln_b);
    return add(matmul(normed, head.w), head.b);
}

inline double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

template <typename S>
DetectionScore classify(const Tensor<S>& x_e, const ClassifierHead<S>& head,
                        const std::string& clip_id = "") {
    NoGradGuard no_grad;
    DetectionScore score;
    score.logit = static_cast<double>(classify_logit(x_e, head).scalar());
    score.probability = logistic(score.logit);
    score.clip_id = clip_id;
    return score;
}

// Focal loss on a probability, the reference form: y=1 -> -alpha (1-p)^gamma
// log p, y=0 -> -(1-alpha) p^gamma log(1-p), with p clamped at 1e-7.
inline double focal_loss_value(double p, int y, double alpha, double gamma) {
    p = std::min(1.0 - 1e-7, std::max(1e-7, p));
    return y == 1 ? -alpha * std::pow(1.0 - p, gamma) * std::log(p)
                  : -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
}

template <typename S>
DetectionScore score_clip(FusedModel<S>& model, const LabeledClip& clip, const std::string& clip_id = "") {
    NoGradGuard no_grad;
    FusedForward<S> fw = fused_forward(clip.stack, model);
    return classify(fw.x_e, model.head, clip_id);
}

// Initializes the mode's streams from the pretext checkpoints: VFE from the
// frame-reconstruction encoder, AUE from the AU-detection encoder. Baseline
// keeps its random init.
template <typename S>
void load_pretrained_streams(FusedModel<S>& model, const CheckpointFile* vfe_ckpt,
                             const CheckpointFile* aue_ckpt) {
    auto load_stream = [&](const CheckpointFile& ckpt, const char* expected_kind, const std::string& prefix,
                           Tensor<S>* embed, StackParams<S>& stack) {
        if (ckpt.kind != expected_kind)
            throw ConfigError("checkpoint kind '" + ckpt.kind + "' where '" + expected_kind +
                              "' was expected for the " + prefix + " stream");
        std::vector<std::pair<std::string, Tensor<S>*>> params;
        params.emplace_back("embed", embed);
        collect_params("enc", stack, params);
        unpack_tensors(ckpt, params);
    };
    if (model.uses_vfe() && model.mode != Mode::baseline) {
        if (!vfe_ckpt) throw ConfigError("mode " + std::string(mode_name(model.mode)) +
                                         " requires a frame-reconstruction checkpoint");
        load_stream(*vfe_ckpt, "pretext_frame", "vfe", &model.vfe_embed, model.vfe);
    }
    if (model.uses_aue() && model.mode != Mode::baseline) {
        if (!aue_ckpt) throw ConfigError("mode " + std::string(mode_name(model.mode)) +
                                         " requires an AU-detection checkpoint");
        load_stream(*aue_ckpt, "pretext_au", "aue", &model.aue_embed, model.aue);
    }
}

struct FinetuneLog {
    std::vector<std::pair<int, double>> loss_curve;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_train_auc; // from the scores seen during the epoch
};

double rank_auc_of(const std::vector<double>& scores, const std::vector<int>& labels);

// Focal-loss fine-tuning of the fused detector under the same optimizer
// regime as the pretext tasks. AUE stays trainable unless cfg.freeze_aue.
template <typename S>
FusedModel<S> finetune(const std::vector<LabeledClip>& corpus, const CheckpointFile* vfe_ckpt,
                       const CheckpointFile* aue_ckpt, const ModelConfig& cfg, FinetuneLog* log = nullptr) {
    if (corpus.empty()) throw ConfigError("finetune: empty corpus");
    FusedModel<S> model = FusedModel<S>::init(cfg, cfg.mode, cfg.seed);
    load_pretrained_streams(model, vfe_ckpt, aue_ckpt);

    std::vector<Tensor<S>*> params;
    for (auto& [name, p] : model.named_params()) {
        if (cfg.freeze_aue && name.rfind("aue.", 0) == 0) {
            p->set_requires_grad(false);
            continue;
        }
        params.push_back(p);
    }
    Adam<S> opt(params, cfg.lr);

    int micro_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order(corpus.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng shuffle_rng(mix_seed(mix_seed(cfg.seed, 0xF17E), static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        int epoch_batches = 0;
        std::vector<double> epoch_scores;
        std::vector<int> epoch_labels;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch));
            Tensor<S> batch_loss;
            for (std::size_t i = pos; i < end; ++i) {
                const LabeledClip& clip = corpus[static_cast<std::size_t>(order[i])];
                FusedForward<S> fw = fused_forward(clip.stack, model);
                Tensor<S> logit = classify_logit(fw.x_e, model.head);
                Tensor<S> loss = sigmoid_focal_loss(logit, {clip.label}, static_cast<S>(cfg.focal_alpha),
                                                    static_cast<S>(cfg.focal_gamma));
                batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
                epoch_scores.push_back(logistic(static_cast<double>(logit.scalar())));
                epoch_labels.push_back(clip.label);
            }
            batch_loss = scale(batch_loss, S(1) / static_cast<S>(end - pos));
            backward(batch_loss);
            opt.accumulate();
            ++micro_step;
            if (micro_step % cfg.accum_steps == 0) opt.step();
            epoch_loss += static_cast<double>(batch_loss.scalar());
            ++epoch_batches;
            if (log) log->loss_curve.emplace_back(micro_step, static_cast<double>(batch_loss.scalar()));
        }
        if (log && epoch_batches > 0) {
            log->epoch_loss.push_back(epoch_loss / epoch_batches);
            log->epoch_train_auc.push_back(rank_auc_of(epoch_scores, epoch_labels));
        }
        if (cfg.decay_mode == DecayMode::factor)
            opt.set_lr(opt.lr() * (1.0 - static_cast<double>(cfg.decay)));
        else
            opt.set_lr(static_cast<double>(cfg.lr) *
                       std::exp(-static_cast<double>(cfg.decay) * (epoch + 1)));
    }
    opt.step();
    model.step_count = micro_step;
    return model;
}

template <typename S>
CheckpointFile to_checkpoint(FusedModel<S>& model) {
    CheckpointFile ckpt;
    ckpt.kind = "fused";
    ckpt.meta["mode"] = mode_name(model.mode);
    ckpt.meta["step_count"] = std::to_string(model.step_count);
    for (const auto& [k, v] : model.cfg.to_map()) ckpt.meta["config." + k] = v;
    pack_tensors(model.named_params(), ckpt);
    return ckpt;
}

template <typename S>
FusedModel<S> fused_from_checkpoint(const CheckpointFile& ckpt) {
    if (ckpt.kind != "fused") throw ConfigError("checkpoint kind '" + ckpt.kind + "' is not a fused model");
    ModelConfig cfg = config_from_checkpoint(ckpt);
    const Mode mode = parse_mode(ckpt.meta.at("mode"));
    FusedModel<S> model = FusedModel<S>::init(cfg, mode, cfg.seed);
    unpack_tensors(ckpt, model.named_params());
    if (const auto it = ckpt.meta.find("step_count"); it != ckpt.meta.end())
        model.step_count = std::stoll(it->second);
    return model;
}

// ---- Fig-5 style attention maps ----

struct HeatStack {
    int t_f = 0, h = 0, w = 0;
    std::vector<float> data; // (t, y, x)
    float& at(int t, int y, int x) {
        return data[(static_cast<std::size_t>(t) * h + y) * static_cast<std::size_t>(w) + x];
    }
    float at(int t, int y, int x) const {
        return data[(static_cast<std::size_t>(t) * h + y) * static_cast<std::size_t>(w) + x];
    }
};

// Final-cross-block attention averaged over heads and query tokens: one mass
// value per key/value token.
template <typename S>
std::vector<float> attention_token_mass(const FusedForward<S>& fw) {
    if (fw.cross_attn.empty())
        throw ContractError("attention maps require a fused-mode forward with collected attention");
    const std::vector<MatRM<S>>& heads = fw.cross_attn.back();
    const Index n = heads.front().cols();
    std::vector<float> mass(static_cast<std::size_t>(n), 0.0f);
    for (const MatRM<S>& a : heads) {
        const Eigen::RowVectorX<S> col_mean = a.colwise().mean();
        for (Index j = 0; j < n; ++j) mass[static_cast<std::size_t>(j)] += static_cast<float>(col_mean[j]);
    }
    for (float& v : mass) v /= static_cast<float>(heads.size());
    return mass;
}

// Piecewise-constant scatter of per-token mass onto each token's T x P x P
// pixel footprint.
HeatStack scatter_token_mass(const std::vector<float>& mass, const GridDims& grid, int tube_t, int tube_p);

// Bilinear interpolation of the per-cell grid values to pixel resolution,
// then per-frame min-max normalization (flat frames render as 0.5).
HeatStack smooth_heat_stack(const std::vector<float>& mass, const GridDims& grid, int tube_t, int tube_p);

template <typename S>
HeatStack extract_attention_maps(const FrameStack& clip, FusedModel<S>& model) {
    if (model.mode != Mode::fused)
        throw ContractError("extract_attention_maps: model mode is not fused");
    NoGradGuard no_grad;
    FusedForward<S> fw = fused_forward(clip, model, true);
    return smooth_heat_stack(attention_token_mass(fw), fw.grid, model.cfg.tube_t, model.cfg.tube_p);
}

} // namespace aufd
