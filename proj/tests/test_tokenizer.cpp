#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "aufd/frames.hpp"
#include "aufd/tokenizer.hpp"

using namespace aufd;
using T = Tensor<float>;

namespace {

FrameStack noise_stack(int t_f, int h, int w, std::uint64_t seed) {
    FrameStack s = FrameStack::zero(t_f, h, w);
    Rng rng(seed);
    for (float& v : s.pixels) v = static_cast<float>(rng.uniform01());
    return s;
}

} // namespace

TEST_CASE("tubelet partition token counts") {
    // paper scale: 16 frames at 224x224 with 2x16x16 tubes -> 1568 tokens
    FrameStack paper = FrameStack::zero(16, 224, 224);
    const auto grid = tubelet_partition<float>(paper, 2, 16);
    CHECK(grid.grid.count() == 1568);
    CHECK(grid.grid.n_t == 8);
    CHECK(grid.grid.n_h == 14);
    CHECK(grid.grid.n_w == 14);
    CHECK(grid.tokens.cols() == 2 * 3 * 16 * 16);

    FrameStack desk = FrameStack::zero(8, 64, 64);
    CHECK(tubelet_partition<float>(desk, 2, 8).grid.count() == 256);
}

TEST_CASE("tubelet partition rejects non-divisible dims naming the axis") {
    FrameStack s = FrameStack::zero(16, 224, 224);
    CHECK_THROWS_WITH_AS(tubelet_partition<float>(s, 2, 15), doctest::Contains("height"), ShapeError);
    CHECK_THROWS_WITH_AS(tubelet_partition<float>(s, 3, 16), doctest::Contains("temporal"), ShapeError);
    FrameStack wide = FrameStack::zero(8, 64, 60);
    CHECK_THROWS_WITH_AS(tubelet_partition<float>(wide, 2, 8), doctest::Contains("width"), ShapeError);
}

TEST_CASE("fold inverts unfold bit-exactly for all valid tube sizes") {
    const FrameStack s = noise_stack(8, 32, 16, 99);
    for (int tube_t : {1, 2, 4, 8})
        for (int tube_p : {1, 2, 4, 8, 16}) {
            if (32 % tube_p != 0 || 16 % tube_p != 0) continue;
            const auto grid = tubelet_partition<float>(s, tube_t, tube_p);
            const FrameStack back = tubelet_fold(grid);
            REQUIRE(back.pixels.size() == s.pixels.size());
            CHECK(back.pixels == s.pixels); // bit-exact round trip
        }
}

TEST_CASE("positional encoding basics") {
    const GridDims grid{2, 3, 4};
    const auto pe = positional_encoding<float>(grid, 16);
    CHECK(pe.rows() == 24);
    CHECK(pe.cols() == 16);
    // cell (0,0,0): sin components 0, cos components 1 in every band
    for (int j = 0; j < 16; j += 2) {
        CHECK(pe(0, j) == doctest::Approx(0.0f));
        CHECK(pe(0, j + 1) == doctest::Approx(1.0f));
    }
    // determinism
    const auto pe2 = positional_encoding<float>(grid, 16);
    CHECK((pe - pe2).cwiseAbs().maxCoeff() == 0.0f);
    CHECK_THROWS_AS(positional_encoding<float>(grid, 18), ConfigError);
}

TEST_CASE("positional encoding rows are pairwise distinct") {
    const GridDims grid{4, 8, 8}; // 256 cells at the desk scale
    const auto pe = positional_encoding<float>(grid, 64);
    for (Index a = 0; a < pe.rows(); ++a)
        for (Index b = a + 1; b < pe.rows(); ++b) {
            if ((pe.row(a) - pe.row(b)).cwiseAbs().maxCoeff() == 0.0f) {
                FAIL("identical PE rows at ", a, " and ", b);
            }
        }
}

TEST_CASE("embedding is linear around the positional term") {
    const FrameStack s = noise_stack(4, 16, 16, 5);
    auto grid = tubelet_partition<float>(s, 2, 8);
    const GridDims dims = grid.grid;
    const int token_dim = static_cast<int>(grid.tokens.cols());
    const auto pe_m = positional_encoding<float>(dims, 16);
    T pe = T::from_matrix(pe_m);

    // zero tokens, zero weights -> output equals PE exactly
    TubeTokenGrid<float> zero_grid = grid;
    zero_grid.tokens.setZero();
    T w0 = T::zeros({token_dim, 16});
    const auto out0 = embed_tokens(zero_grid, w0, pe);
    CHECK((Eigen::Map<const MatRM<float>>(out0.values.value().data(), dims.count(), 16) - pe_m)
              .cwiseAbs()
              .maxCoeff() == 0.0f);

    // doubling the tokens doubles (output - PE)
    Rng rng(8);
    ArrX<float> wv(token_dim * 16);
    for (Index i = 0; i < wv.size(); ++i) wv[i] = static_cast<float>(rng.normal(0, 0.05));
    T w = T::from_array({token_dim, 16}, wv);
    TubeTokenGrid<float> doubled = grid;
    doubled.tokens *= 2.0f;
    const auto out1 = embed_tokens(grid, w, pe);
    const auto out2 = embed_tokens(doubled, w, pe);
    for (Index i = 0; i < out1.values.size(); ++i) {
        const float d1 = out1.values.value()[i] - pe_m.data()[i];
        const float d2 = out2.values.value()[i] - pe_m.data()[i];
        CHECK(d2 == doctest::Approx(2.0f * d1).epsilon(1e-4));
    }

    T bad = T::zeros({token_dim + 1, 16});
    CHECK_THROWS_AS(embed_tokens(grid, bad, pe), ShapeError);
}

TEST_CASE("mask sampling: counts, determinism, seed sensitivity") {
    const MaskPattern half = sample_mask(1568, 0.5f, 3);
    CHECK(half.visible.size() == 784);
    CHECK(half.masked.size() == 784);

    const MaskPattern none = sample_mask(64, 0.0f, 3);
    CHECK(none.visible.size() == 64);
    CHECK(none.masked.empty());

    CHECK_THROWS_AS(sample_mask(64, 1.0f, 3), ConfigError);
    CHECK_THROWS_AS(sample_mask(64, -0.1f, 3), ConfigError);

    // visible and masked partition 0..N-1
    const MaskPattern p = sample_mask(100, 0.37f, 11);
    CHECK(p.visible.size() + p.masked.size() == 100);
    CHECK(static_cast<int>(p.visible.size()) == static_cast<int>(std::lround(100 * 0.63)));
    std::set<int> all(p.visible.begin(), p.visible.end());
    all.insert(p.masked.begin(), p.masked.end());
    CHECK(all.size() == 100);
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == 99);

    const MaskPattern q = sample_mask(100, 0.37f, 11);
    CHECK(p.visible == q.visible);
    CHECK(p.masked == q.masked);

    // different seeds disagree with overwhelming probability
    int collisions = 0;
    const MaskPattern base = sample_mask(256, 0.5f, 0);
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
        if (sample_mask(256, 0.5f, seed).visible == base.visible) ++collisions;
    CHECK(collisions == 0);
}

TEST_CASE("mask count law across ratios") {
    for (int n : {7, 64, 256, 1568})
        for (float ratio : {0.0f, 0.25f, 0.5f, 0.75f, 0.9f}) {
            const MaskPattern p = sample_mask(n, ratio, 77);
            CHECK(static_cast<int>(p.visible.size()) ==
                  static_cast<int>(std::lround(n * (1.0 - static_cast<double>(ratio)))));
            CHECK(p.visible.size() + p.masked.size() == static_cast<std::size_t>(n));
        }
}

TEST_CASE("gather_visible keeps values and positions aligned") {
    const FrameStack s = noise_stack(4, 16, 16, 21);
    auto grid = tubelet_partition<float>(s, 2, 8);
    const auto pe_m = positional_encoding<float>(grid.grid, 16);
    Rng rng(22);
    ArrX<float> wv(grid.tokens.cols() * 16);
    for (Index i = 0; i < wv.size(); ++i) wv[i] = static_cast<float>(rng.normal(0, 0.05));
    T w = T::from_array({grid.tokens.cols(), 16}, wv);
    const auto seq = embed_tokens(grid, w, T::from_matrix(pe_m));

    const MaskPattern none = sample_mask(grid.grid.count(), 0.0f, 1);
    const auto all = gather_visible(seq, none);
    CHECK(all.values.value().isApprox(seq.values.value(), 0.0f)); // ratio 0 keeps everything

    const MaskPattern p = sample_mask(grid.grid.count(), 0.5f, 9);
    const auto vis = gather_visible(seq, p);
    CHECK(vis.values.rows() == static_cast<Index>(p.visible.size()));
    for (std::size_t i = 0; i < p.visible.size(); ++i) {
        CHECK(vis.positions[i] == p.visible[i]);
        for (Index j = 0; j < 16; ++j)
            CHECK(vis.values.value()[static_cast<Index>(i) * 16 + j] ==
                  seq.values.value()[static_cast<Index>(p.visible[i]) * 16 + j]);
    }

    MaskPattern wrong = p;
    wrong.visible.pop_back();
    CHECK_THROWS_AS(gather_visible(seq, wrong), ContractError);
}

TEST_CASE("scatter after gather restores visible rows bit-exactly") {
    const FrameStack s = noise_stack(4, 16, 16, 31);
    auto grid = tubelet_partition<float>(s, 2, 8);
    T tokens = T::from_matrix(grid.tokens);
    const MaskPattern p = sample_mask(grid.grid.count(), 0.5f, 13);
    T vis = gather_rows(tokens, p.visible);
    T fill = T::filled({1, tokens.cols()}, 0.25f);
    T full = scatter_rows_with_fill(vis, p.visible, tokens.rows(), fill);
    for (int r : p.visible)
        for (Index j = 0; j < tokens.cols(); ++j)
            CHECK(full.value()[static_cast<Index>(r) * tokens.cols() + j] ==
                  tokens.value()[static_cast<Index>(r) * tokens.cols() + j]);
    for (int r : p.masked)
        for (Index j = 0; j < tokens.cols(); ++j)
            CHECK(full.value()[static_cast<Index>(r) * tokens.cols() + j] == 0.25f);
}
