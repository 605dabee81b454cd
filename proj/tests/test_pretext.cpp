#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "aufd/harness.hpp"
#include "aufd/pretext.hpp"

using namespace aufd;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.t_f = 4;
    cfg.h_px = 16;
    cfg.w_px = 16;
    cfg.tube_t = 2;
    cfg.tube_p = 4;
    cfg.d = 16;
    cfg.l = 2;
    cfg.heads = 2;
    cfg.epochs = 2;
    cfg.batch = 4;
    cfg.accum_steps = 1;
    cfg.lr = 1e-3f;
    cfg.seed = 5;
    return cfg;
}

std::vector<LabeledClip> tiny_corpus(int n, std::uint64_t seed, const ModelConfig& cfg) {
    CorpusSpec spec{n, 0.0f, seed, ClipGeometry{cfg.t_f, cfg.h_px, cfg.w_px}};
    return generate_corpus(spec);
}

} // namespace

TEST_CASE("huber loss branch values") {
    using T = Tensor<double>;
    T pred = T::from_vector({1, 1}, {0.0});
    SUBCASE("zero error") {
        T target = T::from_vector({1, 1}, {0.0});
        CHECK(huber_loss(pred, target, 1.0).scalar() == 0.0);
    }
    SUBCASE("quadratic branch") {
        T target = T::from_vector({1, 1}, {-0.1});
        CHECK(huber_loss(pred, target, 1.0).scalar() == doctest::Approx(0.005).epsilon(1e-12));
    }
    SUBCASE("linear branch") {
        T target = T::from_vector({1, 1}, {-3.0});
        CHECK(huber_loss(pred, target, 1.0).scalar() == doctest::Approx(2.5).epsilon(1e-12));
    }
    SUBCASE("mean over elements and shape checks") {
        T p2 = T::from_vector({1, 2}, {0.0, 0.0});
        T t2 = T::from_vector({1, 2}, {0.1, 3.0});
        CHECK(huber_loss(p2, t2, 1.0).scalar() == doctest::Approx(0.5 * (0.005 + 2.5)));
        T t3 = T::from_vector({2, 1}, {0.1, 3.0});
        CHECK_THROWS_AS(huber_loss(p2, t3, 1.0), ShapeError);
    }
}

TEST_CASE("loss is non-negative and zero only at equality") {
    using T = Tensor<double>;
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        ArrX<double> a(6), b(6);
        for (Index i = 0; i < 6; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        T pred = T::from_array({2, 3}, a);
        T target = T::from_array({2, 3}, b);
        const double loss = huber_loss(pred, target, 1.0).scalar();
        if ((a == b).all())
            CHECK(loss == 0.0);
        else
            CHECK(loss > 0.0);
        CHECK(huber_loss(pred, pred, 1.0).scalar() == 0.0);
    }
}

TEST_CASE("pretext forward: self-consistency and output shapes") {
    const ModelConfig cfg = tiny_config();
    const auto corpus = tiny_corpus(2, 71, cfg);
    PretextModel<float> model = PretextModel<float>::init(cfg, PretextTask::frame_recon, 3);

    PretextForward<float> fw = pretext_forward(corpus[0].stack, nullptr, model, 17);
    // prediction covers every token's full patch: N x (T*3*P*P)
    CHECK(fw.prediction.rows() == cfg.n_tokens());
    CHECK(fw.prediction.cols() == cfg.token_dim());
    CHECK(fw.loss.size() == 1);
    CHECK(fw.loss.scalar() > 0.0f);

    // target := model's own output => loss 0 (self-consistency of the loss)
    CHECK(huber_loss(fw.prediction, fw.prediction, cfg.huber_delta).scalar() == 0.0f);

    // folding the prediction reproduces the frame geometry
    TubeTokenGrid<float> grid;
    grid.tokens = Eigen::Map<const MatRM<float>>(fw.prediction.value().data(), fw.prediction.rows(),
                                                 fw.prediction.cols());
    grid.grid = {cfg.grid_t(), cfg.grid_h(), cfg.grid_w()};
    grid.tube_t = cfg.tube_t;
    grid.tube_p = cfg.tube_p;
    grid.channels = 3;
    const FrameStack folded = tubelet_fold(grid);
    CHECK(folded.t_f == cfg.t_f);
    CHECK(folded.h == cfg.h_px);
    CHECK(folded.w == cfg.w_px);
}

TEST_CASE("au task requires a target and respects channel replication") {
    ModelConfig cfg = tiny_config();
    const auto corpus = tiny_corpus(1, 72, cfg);
    PretextModel<float> model = PretextModel<float>::init(cfg, PretextTask::au_detect, 4);
    CHECK_THROWS_AS(pretext_forward(corpus[0].stack, nullptr, model, 1), ContractError);

    const AUMapStack maps = build_au_stack(corpus[0].stack, au_subset(cfg.au_subset), cfg.f_aus);
    PretextForward<float> fw = pretext_forward(corpus[0].stack, &maps, model, 1);
    CHECK(fw.prediction.cols() == cfg.tube_t * cfg.f_aus * cfg.tube_p * cfg.tube_p);

    ModelConfig rep = cfg;
    rep.au_channels_3 = true;
    PretextModel<float> model3 = PretextModel<float>::init(rep, PretextTask::au_detect, 4);
    PretextForward<float> fw3 = pretext_forward(corpus[0].stack, &maps, model3, 1);
    CHECK(fw3.prediction.cols() == rep.tube_t * rep.f_aus * 3 * rep.tube_p * rep.tube_p);
}

TEST_CASE("zero epochs returns the initialization") {
    ModelConfig cfg = tiny_config();
    cfg.epochs = 0;
    const auto corpus = tiny_corpus(4, 73, cfg);
    PretextModel<float> trained = train_pretext<float>(corpus, cfg, PretextTask::frame_recon);
    PretextModel<float> fresh = PretextModel<float>::init(cfg, PretextTask::frame_recon, cfg.seed);
    auto a = trained.named_params();
    auto b = fresh.named_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a[i].second->value() == b[i].second->value()).all());
}

TEST_CASE("gradient accumulation equals the single large batch") {
    ModelConfig cfg = tiny_config();
    const auto corpus = tiny_corpus(8, 74, cfg);
    PretextModel<float> model = PretextModel<float>::init(cfg, PretextTask::frame_recon, 11);
    auto params = model.named_params();

    // micro-batch path: k=4 batches of 2, mean of the accumulated gradients
    std::vector<ArrX<float>> accum;
    for (auto& [name, p] : params) accum.push_back(ArrX<float>::Zero(p->size()));
    for (int micro = 0; micro < 4; ++micro) {
        Tensor<float> loss;
        for (int i = 0; i < 2; ++i) {
            const auto& clip = corpus[static_cast<std::size_t>(micro * 2 + i)];
            auto fw = pretext_forward(clip.stack, nullptr, model,
                                      mix_seed(99, static_cast<std::uint64_t>(micro * 2 + i)));
            loss = loss.defined() ? add(loss, fw.loss) : fw.loss;
        }
        backward(scale(loss, 0.5f));
        for (std::size_t t = 0; t < params.size(); ++t) {
            if (params[t].second->has_grad()) accum[t] += params[t].second->grad();
            params[t].second->clear_grad();
        }
    }
    for (auto& g : accum) g /= 4.0f;

    // one batch of all 8 clips with the same mask seeds
    Tensor<float> big;
    for (int i = 0; i < 8; ++i) {
        auto fw = pretext_forward(corpus[static_cast<std::size_t>(i)].stack, nullptr, model,
                                  mix_seed(99, static_cast<std::uint64_t>(i)));
        big = big.defined() ? add(big, fw.loss) : fw.loss;
    }
    backward(scale(big, 1.0f / 8.0f));
    for (std::size_t t = 0; t < params.size(); ++t) {
        REQUIRE(params[t].second->has_grad());
        const auto& g = params[t].second->grad();
        for (Index i = 0; i < g.size(); ++i)
            CHECK(std::abs(g[i] - accum[t][i]) <= 1e-5 * std::max(1.0f, std::abs(g[i])));
        params[t].second->clear_grad();
    }
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    ModelConfig cfg = tiny_config();
    cfg.epochs = 1;
    const auto corpus = tiny_corpus(4, 75, cfg);
    PretextModel<float> a = train_pretext<float>(corpus, cfg, PretextTask::frame_recon);
    PretextModel<float> b = train_pretext<float>(corpus, cfg, PretextTask::frame_recon);
    auto pa = a.named_params();
    auto pb = b.named_params();
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK((pa[i].second->value() == pb[i].second->value()).all()); // bitwise
}

TEST_CASE("a short toy run reduces the loss") {
    ModelConfig cfg = tiny_config();
    cfg.epochs = 12;
    cfg.lr = 2e-3f;
    const auto corpus = tiny_corpus(8, 76, cfg);
    TrainLog log;
    train_pretext<float>(corpus, cfg, PretextTask::frame_recon, &log);
    REQUIRE_FALSE(log.epoch_loss.empty());
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());
}

TEST_CASE("empty corpus is a config error") {
    const ModelConfig cfg = tiny_config();
    CHECK_THROWS_AS(train_pretext<float>({}, cfg, PretextTask::frame_recon), ConfigError);
}

TEST_CASE("checkpoints round-trip the model") {
    namespace fs = std::filesystem;
    ModelConfig cfg = tiny_config();
    cfg.epochs = 1;
    const auto corpus = tiny_corpus(4, 77, cfg);
    PretextModel<float> model = train_pretext<float>(corpus, cfg, PretextTask::au_detect);
    const fs::path path = fs::temp_directory_path() / "aufd_test_pretext.ckpt";
    write_ckpt(to_checkpoint(model), path);
    const CheckpointFile file = read_ckpt(path);
    CHECK(file.kind == "pretext_au");
    PretextModel<float> back = pretext_from_checkpoint<float>(file);
    CHECK(back.task == PretextTask::au_detect);
    CHECK(back.step_count == model.step_count);
    auto pa = model.named_params();
    auto pb = back.named_params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].first == pb[i].first);
        CHECK((pa[i].second->value() == pb[i].second->value()).all());
    }
    fs::remove(path);
}

TEST_CASE("pretext MAE evaluation hook") {
    ModelConfig cfg = tiny_config();
    const auto corpus = tiny_corpus(3, 78, cfg);
    PretextModel<float> model = PretextModel<float>::init(cfg, PretextTask::frame_recon, 21);
    const double mae = pretext_mae(model, corpus, 7);
    CHECK(mae > 0.0);
    CHECK(mae < 1.0);
    // deterministic under the same mask seeds
    CHECK(pretext_mae(model, corpus, 7) == mae);
}

TEST_CASE("masked-token baseline comparison machinery") {
    ModelConfig cfg = tiny_config();
    const auto corpus = tiny_corpus(3, 79, cfg);
    PretextModel<float> model = PretextModel<float>::init(cfg, PretextTask::frame_recon, 22);
    const MaskedReconStats stats = masked_recon_stats(model, corpus, 7);
    CHECK(stats.model_mae > 0.0);
    CHECK(stats.baseline_mae > 0.0);
    // an untrained model should not beat the temporal-mean baseline
    CHECK(stats.model_mae > stats.baseline_mae);
}
