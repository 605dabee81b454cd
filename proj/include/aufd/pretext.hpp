#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aufd/attention.hpp"
#include "aufd/au_maps.hpp"
#include "aufd/checkpoint.hpp"
#include "aufd/config.hpp"
#include "aufd/optimizer.hpp"
#include "aufd/tokenizer.hpp"

namespace aufd {

enum class PretextTask { frame_recon, au_detect };

inline const char* task_name(PretextTask t) {
    return t == PretextTask::frame_recon ? "frame_recon" : "au_detect";
}

inline PretextTask parse_task(const std::string& s) {
    if (s == "frame_recon") return PretextTask::frame_recon;
    if (s == "au_detect") return PretextTask::au_detect;
    throw ConfigError("unknown pretext task '" + s + "'");
}

// Masked-autoencoder model for one pretext task: patch embedding, encoder
// over visible tokens, mirrored decoder with a learnable placeholder, and a
// per-token projection to the task target patch.
template <typename S>
struct PretextModel {
    PretextTask task = PretextTask::frame_recon;
    ModelConfig cfg;
    Tensor<S> w_embed;
    StackParams<S> encoder;
    StackParams<S> decoder;
    Tensor<S> w_out;
    MatRM<S> pe;
    std::int64_t step_count = 0;

    int target_dim() const {
        return task == PretextTask::frame_recon ? cfg.token_dim() : cfg.au_token_dim();
    }

    static PretextModel init(const ModelConfig& cfg, PretextTask task, std::uint64_t seed) {
        cfg.validate_or_throw();
        PretextModel m;
        m.task = task;
        m.cfg = cfg;
        Rng rng(mix_seed(seed, task == PretextTask::frame_recon ? 0xF1 : 0xA0));
        m.w_embed = init_weight<S>(cfg.token_dim(), cfg.d, rng);
        m.encoder = StackParams<S>::init(cfg.d, cfg.heads, cfg.l, rng, false);
        m.decoder = StackParams<S>::init(cfg.d, cfg.heads, cfg.decoder_depth(), rng, true);
        m.w_out = init_weight<S>(cfg.d, m.target_dim(), rng);
        m.pe = positional_encoding<S>({cfg.grid_t(), cfg.grid_h(), cfg.grid_w()}, cfg.d);
        return m;
    }

    std::vector<std::pair<std::string, Tensor<S>*>> named_params() {
        std::vector<std::pair<std::string, Tensor<S>*>> out;
        out.emplace_back("embed", &w_embed);
        collect_params("enc", encoder, out);
        collect_params("dec", decoder, out);
        out.emplace_back("out", &w_out);
        return out;
    }
};

template <typename S>
struct PretextForward {
    Tensor<S> loss;
    Tensor<S> prediction; // N x target_dim
    MaskPattern mask;
    Tensor<S> target; // constant
};

namespace detail {

inline AUMapStack replicate_channels3(const AUMapStack& in) {
    AUMapStack out = AUMapStack::zero(in.t_f, in.f * 3, in.h, in.w);
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    for (int t = 0; t < in.t_f; ++t)
        for (int f = 0; f < in.f; ++f)
            for (int c = 0; c < 3; ++c)
                std::copy_n(in.maps.begin() + static_cast<std::ptrdiff_t>(in.idx(t, f, 0, 0)), plane,
                            out.maps.begin() + static_cast<std::ptrdiff_t>(out.idx(t, f * 3 + c, 0, 0)));
    return out;
}

} // namespace detail

// tokenize -> embed+PE -> mask -> encode visible -> decode full -> project,
// then mean Huber loss against the task target. The loss covers all tokens
// by default; cfg.loss_masked_only restricts it to masked rows.
template <typename S>
PretextForward<S> pretext_forward(const FrameStack& clip, const AUMapStack* au_target, PretextModel<S>& m,
                                  std::uint64_t mask_seed) {
    const ModelConfig& cfg = m.cfg;
    if (clip.t_f != cfg.t_f || clip.h != cfg.h_px || clip.w != cfg.w_px)
        throw ShapeError("pretext_forward: clip dims do not match config");

    TubeTokenGrid<S> grid = tubelet_partition<S>(clip, cfg.tube_t, cfg.tube_p);
    Tensor<S> target;
    if (m.task == PretextTask::frame_recon) {
        target = Tensor<S>::from_matrix(grid.tokens);
    } else {
        if (!au_target) throw ContractError("pretext_forward: au_detect task requires an AU target");
        if (au_target->t_f != cfg.t_f || au_target->h != cfg.h_px || au_target->w != cfg.w_px ||
            au_target->f != cfg.f_aus)
            throw ShapeError("pretext_forward: AU target dims do not match config");
        if (cfg.au_channels_3) {
            const AUMapStack rep = detail::replicate_channels3(*au_target);
            target = Tensor<S>::from_matrix(tubelet_partition_au<S>(rep, cfg.tube_t, cfg.tube_p).tokens);
        } else {
            target = Tensor<S>::from_matrix(tubelet_partition_au<S>(*au_target, cfg.tube_t, cfg.tube_p).tokens);
        }
    }

    PretextForward<S> fw;
    fw.mask = sample_mask(cfg.n_tokens(), cfg.mask_ratio, mask_seed);
    Tensor<S> pe = Tensor<S>::from_matrix(m.pe);
    LatentSequence<S> embedded = embed_tokens(grid, m.w_embed, pe);
    LatentSequence<S> visible = gather_visible(embedded, fw.mask);
    const std::vector<Tensor<S>> enc_layers = encoder_forward(visible.values, m.encoder);
    LatentSequence<S> encoded = visible;
    encoded.values = enc_layers.back();
    fw.prediction = decoder_forward(encoded, fw.mask, m.decoder, m.w_out, m.pe);
    fw.target = target;
    if (cfg.loss_masked_only && !fw.mask.masked.empty()) {
        fw.loss = huber_loss(gather_rows(fw.prediction, fw.mask.masked),
                             gather_rows(target, fw.mask.masked), static_cast<S>(cfg.huber_delta));
    } else {
        fw.loss = huber_loss(fw.prediction, target, static_cast<S>(cfg.huber_delta));
    }
    return fw;
}

struct TrainLog {
    std::vector<std::pair<int, double>> loss_curve; // (micro-step, batch loss)
    std::vector<double> epoch_loss;
};

// AU targets are a pure function of the clip; cached once per corpus.
inline std::vector<AUMapStack> precompute_au_targets(const std::vector<LabeledClip>& corpus,
                                                     const ModelConfig& cfg) {
    const AUSubset subset = au_subset(cfg.au_subset);
    std::vector<AUMapStack> targets;
    targets.reserve(corpus.size());
    for (const LabeledClip& clip : corpus) targets.push_back(build_au_stack(clip.stack, subset, cfg.f_aus));
    return targets;
}

// Adam with gradient accumulation over cfg.accum_steps micro-batches and a
// per-epoch lr decay. Bit-deterministic for a fixed config seed. max_steps
// caps the number of micro-steps (0 = run all epochs).
template <typename S>
PretextModel<S> train_pretext(const std::vector<LabeledClip>& corpus, const ModelConfig& cfg,
                              PretextTask task, TrainLog* log = nullptr, int max_steps = 0) {
    if (corpus.empty()) throw ConfigError("train_pretext: empty corpus");
    PretextModel<S> model = PretextModel<S>::init(cfg, task, cfg.seed);
    std::vector<AUMapStack> au_targets;
    if (task == PretextTask::au_detect) au_targets = precompute_au_targets(corpus, cfg);

    std::vector<Tensor<S>*> params;
    for (auto& [name, p] : model.named_params()) params.push_back(p);
    Adam<S> opt(params, cfg.lr);

    std::uint64_t forward_counter = 0;
    int micro_step = 0;
    bool done = false;
    for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
        std::vector<int> order(corpus.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng shuffle_rng(mix_seed(mix_seed(cfg.seed, 0xE90C), static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        int epoch_batches = 0;
        for (std::size_t pos = 0; pos < order.size() && !done; pos += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch));
            Tensor<S> batch_loss;
            for (std::size_t i = pos; i < end; ++i) {
                const int ci = order[i];
                const AUMapStack* au =
                    task == PretextTask::au_detect ? &au_targets[static_cast<std::size_t>(ci)] : nullptr;
                const std::uint64_t mask_seed = mix_seed(mix_seed(cfg.seed, 0x5eed), forward_counter++);
                PretextForward<S> fw =
                    pretext_forward(corpus[static_cast<std::size_t>(ci)].stack, au, model, mask_seed);
                batch_loss = batch_loss.defined() ? add(batch_loss, fw.loss) : fw.loss;
            }
            batch_loss = scale(batch_loss, S(1) / static_cast<S>(end - pos));
            backward(batch_loss);
            opt.accumulate();
            ++micro_step;
            if (micro_step % cfg.accum_steps == 0) opt.step();
            const double loss_value = static_cast<double>(batch_loss.scalar());
            epoch_loss += loss_value;
            ++epoch_batches;
            if (log) log->loss_curve.emplace_back(micro_step, loss_value);
            if (max_steps > 0 && micro_step >= max_steps) done = true;
        }
        if (log && epoch_batches > 0) log->epoch_loss.push_back(epoch_loss / epoch_batches);
        if (cfg.decay_mode == DecayMode::factor)
            opt.set_lr(opt.lr() * (1.0 - static_cast<double>(cfg.decay)));
        else
            opt.set_lr(static_cast<double>(cfg.lr) *
                       std::exp(-static_cast<double>(cfg.decay) * (epoch + 1)));
    }
    opt.step(); // flush a trailing partial accumulation window
    model.step_count = micro_step;
    return model;
}

template <typename S>
CheckpointFile to_checkpoint(PretextModel<S>& model) {
    CheckpointFile ckpt;
    ckpt.kind = model.task == PretextTask::frame_recon ? "pretext_frame" : "pretext_au";
    ckpt.meta["task"] = task_name(model.task);
    ckpt.meta["step_count"] = std::to_string(model.step_count);
    for (const auto& [k, v] : model.cfg.to_map()) ckpt.meta["config." + k] = v;
    pack_tensors(model.named_params(), ckpt);
    return ckpt;
}

inline ModelConfig config_from_checkpoint(const CheckpointFile& ckpt) {
    std::string text;
    for (const auto& [k, v] : ckpt.meta)
        if (k.rfind("config.", 0) == 0) text += k.substr(7) + "=" + v + "\n";
    return parse_config_text(text);
}

template <typename S>
PretextModel<S> pretext_from_checkpoint(const CheckpointFile& ckpt) {
    if (ckpt.kind != "pretext_frame" && ckpt.kind != "pretext_au")
        throw ConfigError("checkpoint kind '" + ckpt.kind + "' is not a pretext checkpoint");
    const ModelConfig cfg = config_from_checkpoint(ckpt);
    const PretextTask task = parse_task(ckpt.meta.at("task"));
    PretextModel<S> model = PretextModel<S>::init(cfg, task, cfg.seed);
    unpack_tensors(ckpt, model.named_params());
    if (const auto it = ckpt.meta.find("step_count"); it != ckpt.meta.end())
        model.step_count = std::stoll(it->second);
    return model;
}

} // namespace aufd
