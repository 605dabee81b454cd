// aufd command-line driver: synthetic data generation, the two pretext
// trainers, fused fine-tuning, evaluation, robustness and ablation sweeps,
// and attention-map dumps.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "aufd/au_maps.hpp"
#include "aufd/clip_io.hpp"
#include "aufd/config.hpp"
#include "aufd/errors.hpp"
#include "aufd/fusion.hpp"
#include "aufd/harness.hpp"
#include "aufd/manifest.hpp"
#include "aufd/pretext.hpp"

namespace fs = std::filesystem;
using namespace aufd;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "desk";
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_out = true) {
    cmd->add_option("--config", o.config_path, "key=value config file");
    cmd->add_option("--preset", o.preset, "config preset (desk|paper)")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", o.seed, "seed override");
    if (needs_out) cmd->add_option("--out", o.out, "output directory")->required();
    cmd->add_flag("--force", o.force, "allow writing into a non-empty output directory");
}

ModelConfig resolve_config(const CommonOpts& o) {
    ModelConfig cfg = preset_by_name(o.preset);
    if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate_or_throw();
    return cfg;
}

void ensure_out_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir) && !fs::is_directory(dir))
        throw IoError(dir.string() + " exists and is not a directory");
    if (fs::is_directory(dir) && !fs::is_empty(dir) && !force)
        throw IoError("output directory " + dir.string() + " is not empty (pass --force to overwrite)");
    fs::create_directories(dir);
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void write_loss_csv(const fs::path& path, const TrainLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << "step,loss\n";
    for (const auto& [step, loss] : log.loss_curve) out << step << "," << loss << "\n";
}

void write_finetune_csv(const fs::path& path, const FinetuneLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << "epoch,loss,train_auc\n";
    for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
        out << (e + 1) << "," << log.epoch_loss[e] << "," << log.epoch_train_auc[e] << "\n";
}

PerturbationSpec parse_perturb_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw ConfigError("--perturb expects FAMILY=PARAM, got '" + arg + "'");
    PerturbationSpec spec;
    spec.family = parse_family(arg.substr(0, eq));
    spec.parameter = std::stof(arg.substr(eq + 1));
    validate_spec(spec);
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"action-unit-guided detector for locally edited fake clips"};
    app.require_subcommand(1);
    std::vector<std::string> full_argv;
    for (int i = 0; i < argc; ++i) full_argv.emplace_back(argv[i]);

    // ---- validate-config ----
    CommonOpts vc_opts;
    auto* vc = app.add_subcommand("validate-config", "check a config and echo derived sizes");
    add_common(vc, vc_opts, false);
    vc->callback([&] {
        const ModelConfig cfg = resolve_config(vc_opts);
        std::cout << config_to_text(cfg);
        std::cout << "n_tokens=" << cfg.n_tokens() << "\n";
        std::cout << "m_visible=" << cfg.m_visible() << "\n";
        std::cout << "head_dim=" << cfg.head_dim() << "\n";
    });

    // ---- gen-data ----
    CommonOpts gd_opts;
    int gd_clips = 40;
    float gd_fake_fraction = 0.5f;
    auto* gd = app.add_subcommand("gen-data", "generate a synthetic labeled clip corpus");
    add_common(gd, gd_opts);
    gd->add_option("--clips", gd_clips, "number of clips")->check(CLI::PositiveNumber);
    gd->add_option("--fake-fraction", gd_fake_fraction, "fraction of fake clips");
    gd->callback([&] {
        Stopwatch watch;
        const ModelConfig cfg = resolve_config(gd_opts);
        ensure_out_dir(gd_opts.out, gd_opts.force);
        CorpusSpec spec{gd_clips, gd_fake_fraction, cfg.seed, ClipGeometry{cfg.t_f, cfg.h_px, cfg.w_px}};
        const std::vector<LabeledClip> corpus = generate_corpus(spec);
        RunManifest manifest{"gen-data", full_argv, cfg, cfg.seed, {}, {}, {}, 0.0};
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            std::ostringstream name;
            name << "clip_" << std::setw(4) << std::setfill('0') << i << "_"
                 << (corpus[i].label ? "fake" : "real") << ".clip";
            const fs::path path = fs::path(gd_opts.out) / name.str();
            write_clip(corpus[i], path);
            manifest.outputs.push_back(path.string());
        }
        manifest.metrics["n_clips"] = static_cast<double>(corpus.size());
        manifest.wall_seconds = watch.seconds();
        write_manifest(manifest, gd_opts.out);
        std::cout << "wrote " << corpus.size() << " clips to " << gd_opts.out << "\n";
    });

    // ---- pretrain-frames / pretrain-au ----
    struct PretrainArgs {
        CommonOpts opts;
        std::string data;
        std::string au_subset;
        std::optional<int> epochs;
        int max_steps = 0;
    };
    auto add_pretrain = [&](const char* name, const char* desc, PretextTask task,
                            std::shared_ptr<PretrainArgs> a) {
        auto* cmd = app.add_subcommand(name, desc);
        add_common(cmd, a->opts);
        cmd->add_option("--data", a->data, "clip corpus directory")->required();
        cmd->add_option("--epochs", a->epochs, "epoch override");
        cmd->add_option("--max-steps", a->max_steps, "stop after this many micro-steps (0 = all)");
        if (task == PretextTask::au_detect)
            cmd->add_option("--au-subset", a->au_subset, "AU subset (eyes|nose|lips|all)")
                ->check(CLI::IsMember({"eyes", "nose", "lips", "all"}));
        cmd->callback([&app, a, task, &full_argv] {
            Stopwatch watch;
            ModelConfig cfg = resolve_config(a->opts);
            if (a->epochs) cfg.epochs = *a->epochs;
            if (!a->au_subset.empty()) cfg.au_subset = parse_au_subset(a->au_subset);
            ensure_out_dir(a->opts.out, a->opts.force);
            const std::vector<LabeledClip> corpus = load_clip_dir(a->data);
            TrainLog log;
            PretextModel<float> model = train_pretext<float>(corpus, cfg, task, &log, a->max_steps);
            const fs::path ckpt_path =
                fs::path(a->opts.out) / (task == PretextTask::frame_recon ? "vfe.ckpt" : "aue.ckpt");
            write_ckpt(to_checkpoint(model), ckpt_path);
            write_loss_csv(fs::path(a->opts.out) / "loss_curve.csv", log);
            RunManifest manifest{task == PretextTask::frame_recon ? "pretrain-frames" : "pretrain-au",
                                 full_argv,
                                 cfg,
                                 cfg.seed,
                                 {a->data},
                                 {ckpt_path.string()},
                                 {},
                                 0.0};
            if (!log.epoch_loss.empty()) {
                manifest.metrics["first_epoch_loss"] = log.epoch_loss.front();
                manifest.metrics["last_epoch_loss"] = log.epoch_loss.back();
            }
            manifest.wall_seconds = watch.seconds();
            write_manifest(manifest, a->opts.out);
            std::cout << "wrote " << ckpt_path.string() << " after " << model.step_count << " steps\n";
        });
    };
    auto pf_args = std::make_shared<PretrainArgs>();
    auto pa_args = std::make_shared<PretrainArgs>();
    add_pretrain("pretrain-frames", "train the masked frame-reconstruction pretext task",
                 PretextTask::frame_recon, pf_args);
    add_pretrain("pretrain-au", "train the AU-map reconstruction pretext task", PretextTask::au_detect,
                 pa_args);

    // ---- finetune ----
    CommonOpts ft_opts;
    std::string ft_data, ft_vfe, ft_aue, ft_mode = "fused";
    std::optional<int> ft_epochs;
    bool ft_freeze_aue = false;
    auto* ft = app.add_subcommand("finetune", "fine-tune the fused detector with focal loss");
    add_common(ft, ft_opts);
    ft->add_option("--data", ft_data, "clip corpus directory")->required();
    ft->add_option("--vfe", ft_vfe, "frame-reconstruction checkpoint");
    ft->add_option("--aue", ft_aue, "AU-detection checkpoint");
    ft->add_option("--mode", ft_mode, "fused|vfe_only|aue_only|baseline")
        ->check(CLI::IsMember({"fused", "vfe_only", "aue_only", "baseline"}));
    ft->add_option("--epochs", ft_epochs, "epoch override");
    ft->add_flag("--freeze-aue", ft_freeze_aue, "freeze AUE weights during fine-tuning");
    ft->callback([&] {
        Stopwatch watch;
        ModelConfig cfg = resolve_config(ft_opts);
        cfg.mode = parse_mode(ft_mode);
        if (ft_epochs) cfg.epochs = *ft_epochs;
        if (ft_freeze_aue) cfg.freeze_aue = true;
        ensure_out_dir(ft_opts.out, ft_opts.force);
        const std::vector<LabeledClip> corpus = load_clip_dir(ft_data);
        std::optional<CheckpointFile> vfe_ckpt, aue_ckpt;
        if (!ft_vfe.empty()) vfe_ckpt = read_ckpt(ft_vfe);
        if (!ft_aue.empty()) aue_ckpt = read_ckpt(ft_aue);
        FinetuneLog log;
        FusedModel<float> model =
            finetune<float>(corpus, vfe_ckpt ? &*vfe_ckpt : nullptr, aue_ckpt ? &*aue_ckpt : nullptr,
                            cfg, &log);
        const fs::path ckpt_path = fs::path(ft_opts.out) / "fused.ckpt";
        write_ckpt(to_checkpoint(model), ckpt_path);
        write_finetune_csv(fs::path(ft_opts.out) / "train_curve.csv", log);
        RunManifest manifest{"finetune", full_argv, cfg, cfg.seed, {ft_data}, {ckpt_path.string()}, {}, 0.0};
        if (!ft_vfe.empty()) manifest.inputs.push_back(ft_vfe);
        if (!ft_aue.empty()) manifest.inputs.push_back(ft_aue);
        if (!log.epoch_train_auc.empty()) manifest.metrics["final_train_auc"] = log.epoch_train_auc.back();
        manifest.metrics["param_count"] = static_cast<double>(model.param_count());
        manifest.wall_seconds = watch.seconds();
        write_manifest(manifest, ft_opts.out);
        std::cout << "wrote " << ckpt_path.string() << " (params " << model.param_count() << ")\n";
    });

    // ---- evaluate ----
    CommonOpts ev_opts;
    std::string ev_data, ev_model;
    auto* ev = app.add_subcommand("evaluate", "score a corpus and report AUC/AP/AR/mF1");
    add_common(ev, ev_opts);
    ev->add_option("--data", ev_data, "clip corpus directory")->required();
    ev->add_option("--model", ev_model, "fused checkpoint")->required();
    ev->callback([&] {
        Stopwatch watch;
        ensure_out_dir(ev_opts.out, ev_opts.force);
        const std::vector<LabeledClip> corpus = load_clip_dir(ev_data);
        FusedModel<float> model = fused_from_checkpoint<float>(read_ckpt(ev_model));
        const MetricReport report = evaluate_corpus(model, corpus, "evaluate");
        write_reports_json(fs::path(ev_opts.out) / "report.json", {report}, model.cfg, model.cfg.seed);
        std::ofstream table(fs::path(ev_opts.out) / "report.txt");
        table << reports_table({report});
        RunManifest manifest{"evaluate", full_argv, model.cfg, model.cfg.seed,
                             {ev_data, ev_model}, {}, {}, 0.0};
        manifest.metrics = {{"auc", report.auc}, {"ap", report.ap}, {"ar", report.ar}, {"mf1", report.mf1}};
        manifest.wall_seconds = watch.seconds();
        write_manifest(manifest, ev_opts.out);
        std::cout << reports_table({report});
    });

    // ---- perturb-eval ----
    CommonOpts pe_opts;
    std::string pe_data, pe_model;
    std::vector<std::string> pe_perturbs;
    bool pe_fake_only = false;
    auto* pe = app.add_subcommand("perturb-eval", "robustness sweep over the perturbation families");
    add_common(pe, pe_opts);
    pe->add_option("--data", pe_data, "clip corpus directory")->required();
    pe->add_option("--model", pe_model, "fused checkpoint")->required();
    pe->add_option("--perturb", pe_perturbs, "FAMILY=PARAM condition (repeatable; default full grid)");
    pe->add_flag("--perturb-fake-only", pe_fake_only, "perturb only fake clips");
    pe->callback([&] {
        Stopwatch watch;
        ensure_out_dir(pe_opts.out, pe_opts.force);
        const std::vector<LabeledClip> corpus = load_clip_dir(pe_data);
        FusedModel<float> model = fused_from_checkpoint<float>(read_ckpt(pe_model));
        std::vector<PerturbationSpec> grid;
        if (pe_perturbs.empty()) {
            grid = default_perturbation_grid();
        } else {
            for (const std::string& arg : pe_perturbs) grid.push_back(parse_perturb_arg(arg));
        }
        const std::vector<MetricReport> reports =
            robustness_sweep(model, corpus, grid, pe_fake_only || model.cfg.perturb_fake_only);
        write_reports_json(fs::path(pe_opts.out) / "perturb_report.json", reports, model.cfg,
                           model.cfg.seed);
        std::ofstream table(fs::path(pe_opts.out) / "perturb_report.txt");
        table << reports_table(reports);
        RunManifest manifest{"perturb-eval", full_argv, model.cfg, model.cfg.seed,
                             {pe_data, pe_model}, {}, {}, 0.0};
        for (const MetricReport& r : reports) manifest.metrics["auc[" + r.condition + "]"] = r.auc;
        manifest.wall_seconds = watch.seconds();
        write_manifest(manifest, pe_opts.out);
        std::cout << reports_table(reports);
    });

    // ---- ablate ----
    CommonOpts ab_opts;
    std::string ab_train, ab_eval, ab_vfe, ab_aue;
    std::vector<std::string> ab_modes = {"baseline", "vfe_only", "aue_only", "fused"};
    auto* ab = app.add_subcommand("ablate", "encoder ablation: baseline, single streams, fused");
    add_common(ab, ab_opts);
    ab->add_option("--data", ab_train, "training corpus directory")->required();
    ab->add_option("--eval-data", ab_eval, "held-out corpus directory")->required();
    ab->add_option("--vfe", ab_vfe, "frame-reconstruction checkpoint");
    ab->add_option("--aue", ab_aue, "AU-detection checkpoint");
    ab->add_option("--mode", ab_modes, "modes to run (repeatable)")
        ->check(CLI::IsMember({"fused", "vfe_only", "aue_only", "baseline"}));
    ab->callback([&] {
        Stopwatch watch;
        const ModelConfig cfg = resolve_config(ab_opts);
        ensure_out_dir(ab_opts.out, ab_opts.force);
        const std::vector<LabeledClip> train_corpus = load_clip_dir(ab_train);
        const std::vector<LabeledClip> eval_corpus = load_clip_dir(ab_eval);
        std::optional<CheckpointFile> vfe_ckpt, aue_ckpt;
        if (!ab_vfe.empty()) vfe_ckpt = read_ckpt(ab_vfe);
        if (!ab_aue.empty()) aue_ckpt = read_ckpt(ab_aue);
        std::vector<Mode> modes;
        for (const std::string& m : ab_modes) modes.push_back(parse_mode(m));
        const std::vector<AblationOutcome> outcomes =
            ablation_run(modes, train_corpus, eval_corpus, cfg, vfe_ckpt ? &*vfe_ckpt : nullptr,
                         aue_ckpt ? &*aue_ckpt : nullptr);
        std::vector<MetricReport> reports;
        for (const AblationOutcome& o : outcomes) reports.push_back(o.report);
        write_reports_json(fs::path(ab_opts.out) / "ablation_report.json", reports, cfg, cfg.seed);
        std::ofstream table(fs::path(ab_opts.out) / "ablation_report.txt");
        table << reports_table(reports);
        RunManifest manifest{"ablate", full_argv, cfg, cfg.seed, {ab_train, ab_eval}, {}, {}, 0.0};
        for (const AblationOutcome& o : outcomes) {
            manifest.metrics[std::string("auc[") + mode_name(o.mode) + "]"] = o.report.auc;
            manifest.metrics[std::string("params[") + mode_name(o.mode) + "]"] =
                static_cast<double>(o.param_count);
        }
        manifest.wall_seconds = watch.seconds();
        write_manifest(manifest, ab_opts.out);
        std::cout << reports_table(reports);
        for (const AblationOutcome& o : outcomes)
            std::cout << mode_name(o.mode) << " params: " << o.param_count << "\n";
    });

    // ---- attn-dump ----
    CommonOpts ad_opts;
    std::string ad_model, ad_clip;
    bool ad_pgm = false;
    auto* ad = app.add_subcommand("attn-dump", "dump final cross-attention heat maps for one clip");
    add_common(ad, ad_opts);
    ad->add_option("--model", ad_model, "fused checkpoint")->required();
    ad->add_option("--clip", ad_clip, "input .clip file")->required();
    ad->add_flag("--pgm", ad_pgm, "also write per-frame PGM images");
    ad->callback([&] {
        Stopwatch watch;
        ensure_out_dir(ad_opts.out, ad_opts.force);
        FusedModel<float> model = fused_from_checkpoint<float>(read_ckpt(ad_model));
        const LabeledClip clip = read_clip(ad_clip);
        const HeatStack heat = extract_attention_maps(clip.stack, model);
        AUMapStack maps = AUMapStack::zero(heat.t_f, 1, heat.h, heat.w);
        std::copy(heat.data.begin(), heat.data.end(), maps.maps.begin());
        const fs::path heat_path = fs::path(ad_opts.out) / "attention.aumap";
        write_aumap(maps, heat_path);
        if (ad_pgm)
            for (int t = 0; t < heat.t_f; ++t) {
                std::ostringstream name;
                name << "attention_f" << std::setw(2) << std::setfill('0') << t << ".pgm";
                write_pgm(heat.data.data() + static_cast<std::size_t>(t) * heat.h * heat.w, heat.h, heat.w,
                          fs::path(ad_opts.out) / name.str());
            }
        RunManifest manifest{"attn-dump", full_argv, model.cfg, model.cfg.seed,
                             {ad_model, ad_clip}, {heat_path.string()}, {}, 0.0};
        manifest.wall_seconds = watch.seconds();
        write_manifest(manifest, ad_opts.out);
        std::cout << "wrote " << heat_path.string() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ShapeError& e) {
        std::cerr << "error: shape: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 1;
    } catch (const MetricError& e) {
        std::cerr << "error: metric: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
