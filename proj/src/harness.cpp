#include "aufd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace aufd {

std::vector<DetectionScore> score_corpus(FusedModel<float>& model, const std::vector<LabeledClip>& corpus) {
    std::vector<DetectionScore> scores;
    scores.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        scores.push_back(score_clip(model, corpus[i], "clip" + std::to_string(i)));
    return scores;
}

MetricReport evaluate_corpus(FusedModel<float>& model, const std::vector<LabeledClip>& corpus,
                             const std::string& condition, double threshold) {
    std::vector<double> probs;
    std::vector<int> labels;
    probs.reserve(corpus.size());
    labels.reserve(corpus.size());
    for (const DetectionScore& s : score_corpus(model, corpus)) probs.push_back(s.probability);
    for (const LabeledClip& c : corpus) labels.push_back(c.label);
    return compute_metrics(probs, labels, condition, threshold);
}

std::vector<PerturbationSpec> default_perturbation_grid() {
    std::vector<PerturbationSpec> grid;
    for (PerturbFamily f : kAllPerturbFamilies) {
        grid.push_back({f, family_mildest(f), 0});
        grid.push_back({f, family_extreme(f), 0});
    }
    return grid;
}

std::string condition_label(const PerturbationSpec& spec) {
    std::ostringstream os;
    os << family_name(spec.family) << "=" << spec.parameter;
    return os.str();
}

std::vector<MetricReport> robustness_sweep(FusedModel<float>& model, const std::vector<LabeledClip>& corpus,
                                           const std::vector<PerturbationSpec>& grid,
                                           bool perturb_fake_only, double threshold) {
    std::vector<MetricReport> reports;
    reports.push_back(evaluate_corpus(model, corpus, "no_perturbation", threshold));
    for (const PerturbationSpec& base_spec : grid) {
        validate_spec(base_spec);
        std::vector<double> probs;
        std::vector<int> labels;
        probs.reserve(corpus.size());
        labels.reserve(corpus.size());
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const LabeledClip& clip = corpus[i];
            labels.push_back(clip.label);
            if (perturb_fake_only && clip.label == 0) {
                probs.push_back(score_clip(model, clip).probability);
                continue;
            }
            PerturbationSpec spec = base_spec;
            spec.seed = mix_seed(clip.seed, static_cast<std::uint64_t>(spec.family)); // same noise per clip across parameters
            LabeledClip perturbed = clip;
            perturbed.stack = apply_perturbation(clip.stack, spec);
            probs.push_back(score_clip(model, perturbed).probability);
        }
        reports.push_back(compute_metrics(probs, labels, condition_label(base_spec), threshold));
    }
    return reports;
}

namespace {

double frame_mae(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc / static_cast<double>(n);
}

} // namespace

double pretext_mae(PretextModel<float>& model, const std::vector<LabeledClip>& corpus,
                   std::uint64_t mask_seed_base) {
    if (corpus.empty()) throw ConfigError("pretext_mae: empty corpus");
    NoGradGuard no_grad;
    const ModelConfig& cfg = model.cfg;
    const int channels = model.task == PretextTask::frame_recon
                             ? 3
                             : cfg.f_aus * (cfg.au_channels_3 ? 3 : 1);
    const std::size_t plane = static_cast<std::size_t>(cfg.h_px) * cfg.w_px;
    const std::size_t frame_floats = static_cast<std::size_t>(channels) * plane;
    std::vector<std::vector<double>> per_video;
    per_video.reserve(corpus.size());
    std::vector<AUMapStack> au_targets;
    if (model.task == PretextTask::au_detect) au_targets = precompute_au_targets(corpus, cfg);
    std::vector<float> pred_buf(static_cast<std::size_t>(cfg.t_f) * frame_floats);
    std::vector<float> target_buf(pred_buf.size());
    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        const AUMapStack* au = model.task == PretextTask::au_detect ? &au_targets[ci] : nullptr;
        PretextForward<float> fw = pretext_forward(corpus[ci].stack, au, model,
                                                   mix_seed(mask_seed_base, static_cast<std::uint64_t>(ci)));
        const GridDims grid{cfg.grid_t(), cfg.grid_h(), cfg.grid_w()};
        detail::fold_planes(fw.prediction.value().data(), grid, cfg.tube_t, cfg.tube_p, channels,
                            pred_buf.data(), cfg.h_px, cfg.w_px);
        detail::fold_planes(fw.target.value().data(), grid, cfg.tube_t, cfg.tube_p, channels,
                            target_buf.data(), cfg.h_px, cfg.w_px);
        std::vector<double> frames(static_cast<std::size_t>(cfg.t_f));
        for (int t = 0; t < cfg.t_f; ++t)
            frames[static_cast<std::size_t>(t)] =
                frame_mae(pred_buf.data() + static_cast<std::size_t>(t) * frame_floats,
                          target_buf.data() + static_cast<std::size_t>(t) * frame_floats, frame_floats);
        per_video.push_back(std::move(frames));
    }
    return mae_average(per_video);
}

MaskedReconStats masked_recon_stats(PretextModel<float>& model, const std::vector<LabeledClip>& corpus,
                                    std::uint64_t mask_seed_base) {
    if (model.task != PretextTask::frame_recon)
        throw ContractError("masked_recon_stats: defined for the frame-reconstruction task");
    if (corpus.empty()) throw ConfigError("masked_recon_stats: empty corpus");
    NoGradGuard no_grad;
    const ModelConfig& cfg = model.cfg;
    double model_acc = 0.0, base_acc = 0.0;
    std::size_t count = 0;
    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        const FrameStack& stack = corpus[ci].stack;
        PretextForward<float> fw = pretext_forward(stack, nullptr, model,
                                                   mix_seed(mask_seed_base, static_cast<std::uint64_t>(ci)));
        // temporal-mean-frame predictor, tokenized the same way
        FrameStack mean_stack = stack;
        const std::size_t plane3 = static_cast<std::size_t>(3) * cfg.h_px * cfg.w_px;
        for (std::size_t i = 0; i < plane3; ++i) {
            double acc = 0.0;
            for (int t = 0; t < cfg.t_f; ++t)
                acc += stack.pixels[static_cast<std::size_t>(t) * plane3 + i];
            const float mean = static_cast<float>(acc / cfg.t_f);
            for (int t = 0; t < cfg.t_f; ++t)
                mean_stack.pixels[static_cast<std::size_t>(t) * plane3 + i] = mean;
        }
        const MatRM<float> base_tokens = tubelet_partition<float>(mean_stack, cfg.tube_t, cfg.tube_p).tokens;
        const auto& pred = fw.prediction.value();
        const auto& target = fw.target.value();
        const Index dim = fw.prediction.cols();
        for (int row : fw.mask.masked) {
            for (Index j = 0; j < dim; ++j) {
                const Index at = static_cast<Index>(row) * dim + j;
                model_acc += std::abs(static_cast<double>(pred[at]) - static_cast<double>(target[at]));
                base_acc += std::abs(static_cast<double>(base_tokens(row, j)) -
                                     static_cast<double>(target[at]));
            }
            count += static_cast<std::size_t>(dim);
        }
    }
    if (count == 0) throw ContractError("masked_recon_stats: mask ratio 0 leaves no masked tokens");
    return {model_acc / static_cast<double>(count), base_acc / static_cast<double>(count)};
}

std::vector<AblationOutcome> ablation_run(const std::vector<Mode>& modes,
                                          const std::vector<LabeledClip>& train_corpus,
                                          const std::vector<LabeledClip>& eval_corpus,
                                          const ModelConfig& base_cfg, const CheckpointFile* vfe_ckpt,
                                          const CheckpointFile* aue_ckpt) {
    std::vector<AblationOutcome> out;
    for (Mode mode : modes) {
        ModelConfig cfg = base_cfg;
        cfg.mode = mode;
        const bool needs_vfe = mode == Mode::fused || mode == Mode::vfe_only;
        const bool needs_aue = mode == Mode::fused || mode == Mode::aue_only;
        if (needs_vfe && !vfe_ckpt)
            throw ConfigError(std::string("ablation: mode ") + mode_name(mode) +
                              " requires a frame-reconstruction checkpoint");
        if (needs_aue && !aue_ckpt)
            throw ConfigError(std::string("ablation: mode ") + mode_name(mode) +
                              " requires an AU-detection checkpoint");
        FusedModel<float> model = finetune<float>(train_corpus, needs_vfe ? vfe_ckpt : nullptr,
                                                  needs_aue ? aue_ckpt : nullptr, cfg);
        AblationOutcome o;
        o.mode = mode;
        o.report = evaluate_corpus(model, eval_corpus, std::string("mode=") + mode_name(mode));
        o.param_count = model.param_count();
        out.push_back(std::move(o));
    }
    return out;
}

std::uint64_t config_hash(const ModelConfig& cfg) {
    // FNV-1a over the canonical text form
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : config_to_text(cfg)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

void write_reports_json(const std::filesystem::path& path, const std::vector<MetricReport>& reports,
                        const ModelConfig& cfg, std::uint64_t seed) {
    nlohmann::json arr = nlohmann::json::array();
    for (const MetricReport& r : reports) {
        arr.push_back({
            {"condition", r.condition},
            {"auc", r.auc},
            {"ap", r.ap},
            {"ar", r.ar},
            {"mf1", r.mf1},
            {"n_real", r.n_real},
            {"n_fake", r.n_fake},
            {"threshold", r.threshold},
            {"seed", seed},
            {"config_hash", config_hash(cfg)},
        });
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << arr.dump(2) << "\n";
}

std::string reports_table(const std::vector<MetricReport>& reports) {
    std::ostringstream os;
    std::size_t label_w = 12;
    for (const MetricReport& r : reports) label_w = std::max(label_w, r.condition.size() + 2);
    os << std::left << std::setw(static_cast<int>(label_w)) << "condition" << std::right
       << std::setw(8) << "AUC" << std::setw(8) << "AP" << std::setw(8) << "AR" << std::setw(8) << "mF1"
       << std::setw(8) << "real" << std::setw(8) << "fake" << "\n";
    os << std::string(label_w + 48, '-') << "\n";
    os << std::fixed << std::setprecision(4);
    for (const MetricReport& r : reports) {
        os << std::left << std::setw(static_cast<int>(label_w)) << r.condition << std::right
           << std::setw(8) << r.auc << std::setw(8) << r.ap << std::setw(8) << r.ar << std::setw(8) << r.mf1
           << std::setw(8) << r.n_real << std::setw(8) << r.n_fake << "\n";
    }
    return os.str();
}

// ---- attention-map geometry (fusion.hpp declarations) ----

HeatStack scatter_token_mass(const std::vector<float>& mass, const GridDims& grid, int tube_t, int tube_p) {
    HeatStack heat;
    heat.t_f = grid.n_t * tube_t;
    heat.h = grid.n_h * tube_p;
    heat.w = grid.n_w * tube_p;
    heat.data.assign(static_cast<std::size_t>(heat.t_f) * heat.h * heat.w, 0.0f);
    std::size_t token = 0;
    for (int gt = 0; gt < grid.n_t; ++gt)
        for (int gy = 0; gy < grid.n_h; ++gy)
            for (int gx = 0; gx < grid.n_w; ++gx, ++token)
                for (int dt = 0; dt < tube_t; ++dt)
                    for (int py = 0; py < tube_p; ++py)
                        for (int px = 0; px < tube_p; ++px)
                            heat.at(gt * tube_t + dt, gy * tube_p + py, gx * tube_p + px) = mass[token];
    return heat;
}

HeatStack smooth_heat_stack(const std::vector<float>& mass, const GridDims& grid, int tube_t, int tube_p) {
    HeatStack heat;
    heat.t_f = grid.n_t * tube_t;
    heat.h = grid.n_h * tube_p;
    heat.w = grid.n_w * tube_p;
    heat.data.assign(static_cast<std::size_t>(heat.t_f) * heat.h * heat.w, 0.0f);
    const auto cell = [&](int gt, int gy, int gx) {
        return mass[static_cast<std::size_t>((gt * grid.n_h + gy) * grid.n_w + gx)];
    };
    for (int t = 0; t < heat.t_f; ++t) {
        const int gt = t / tube_t;
        float lo = 1e30f, hi = -1e30f;
        for (int y = 0; y < heat.h; ++y)
            for (int x = 0; x < heat.w; ++x) {
                // bilinear between grid-cell centers
                const float fy = (static_cast<float>(y) + 0.5f) / tube_p - 0.5f;
                const float fx = (static_cast<float>(x) + 0.5f) / tube_p - 0.5f;
                const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, grid.n_h - 1);
                const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, grid.n_w - 1);
                const int y1 = std::min(y0 + 1, grid.n_h - 1);
                const int x1 = std::min(x0 + 1, grid.n_w - 1);
                const float wy = std::clamp(fy - static_cast<float>(y0), 0.0f, 1.0f);
                const float wx = std::clamp(fx - static_cast<float>(x0), 0.0f, 1.0f);
                const float v = (1 - wy) * ((1 - wx) * cell(gt, y0, x0) + wx * cell(gt, y0, x1)) +
                                wy * ((1 - wx) * cell(gt, y1, x0) + wx * cell(gt, y1, x1));
                heat.at(t, y, x) = v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        for (int y = 0; y < heat.h; ++y)
            for (int x = 0; x < heat.w; ++x) {
                float& v = heat.at(t, y, x);
                v = hi > lo ? (v - lo) / (hi - lo) : 0.5f; // flat frames render mid-gray
            }
    }
    return heat;
}

} // namespace aufd
