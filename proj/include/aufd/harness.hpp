#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aufd/fusion.hpp"
#include "aufd/metrics.hpp"
#include "aufd/perturb.hpp"
#include "aufd/pretext.hpp"

namespace aufd {

std::vector<DetectionScore> score_corpus(FusedModel<float>& model, const std::vector<LabeledClip>& corpus);

MetricReport evaluate_corpus(FusedModel<float>& model, const std::vector<LabeledClip>& corpus,
                             const std::string& condition, double threshold = 0.5);

// One spec per family endpoint plus the mildest in-range value per family.
std::vector<PerturbationSpec> default_perturbation_grid();

std::string condition_label(const PerturbationSpec& spec);

// One report per (family, parameter) on top of the mandatory
// "no_perturbation" row; identical clips and noise seeds across conditions.
// perturb_fake_only leaves real clips untouched.
std::vector<MetricReport> robustness_sweep(FusedModel<float>& model, const std::vector<LabeledClip>& corpus,
                                           const std::vector<PerturbationSpec>& grid,
                                           bool perturb_fake_only = false, double threshold = 0.5);

// Reconstruction MAE against the task target, averaged frames -> video ->
// corpus. Masking is seeded per clip index for reproducibility.
double pretext_mae(PretextModel<float>& model, const std::vector<LabeledClip>& corpus,
                   std::uint64_t mask_seed_base = 0);

struct MaskedReconStats {
    double model_mae = 0;    // prediction error on masked tokens
    double baseline_mae = 0; // per-clip temporal-mean-frame predictor on the same tokens
};

MaskedReconStats masked_recon_stats(PretextModel<float>& model, const std::vector<LabeledClip>& corpus,
                                    std::uint64_t mask_seed_base = 0);

struct AblationOutcome {
    Mode mode = Mode::fused;
    MetricReport report;
    std::int64_t param_count = 0;
};

// Trains and evaluates each mode under identical seeds and data. Pretrained
// checkpoints are required for every non-baseline mode.
std::vector<AblationOutcome> ablation_run(const std::vector<Mode>& modes,
                                          const std::vector<LabeledClip>& train_corpus,
                                          const std::vector<LabeledClip>& eval_corpus,
                                          const ModelConfig& base_cfg, const CheckpointFile* vfe_ckpt,
                                          const CheckpointFile* aue_ckpt);

void write_reports_json(const std::filesystem::path& path, const std::vector<MetricReport>& reports,
                        const ModelConfig& cfg, std::uint64_t seed);

std::string reports_table(const std::vector<MetricReport>& reports);

std::uint64_t config_hash(const ModelConfig& cfg);

} // namespace aufd
