#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "aufd/au_maps.hpp"
#include "aufd/frames.hpp"

using namespace aufd;

TEST_CASE("fit_ellipse on two horizontal points") {
    const Point pts[] = {{10, 20}, {30, 20}};
    const Ellipse e = fit_ellipse(pts, 1.0f);
    CHECK(e.cx == doctest::Approx(20.0f));
    CHECK(e.cy == doctest::Approx(20.0f));
    // major axis along x
    CHECK(std::abs(std::sin(e.rotation)) == doctest::Approx(0.0f).epsilon(1e-5));
    CHECK(e.semi_major == doctest::Approx(10.0f)); // sqrt of spread 100
    CHECK(e.semi_minor == doctest::Approx(2.0f));  // degenerate floor
}

TEST_CASE("fit_ellipse degenerate coincident points give the 2 px floor circle") {
    const Point pts[] = {{5, 5}, {5, 5}, {5, 5}};
    const Ellipse e = fit_ellipse(pts, 3.0f);
    CHECK(e.semi_major == doctest::Approx(2.0f));
    CHECK(e.semi_minor == doctest::Approx(2.0f));
}

TEST_CASE("fit_ellipse principal axes of an axis-aligned rectangle") {
    const Point pts[] = {{-6, -2}, {6, -2}, {-6, 2}, {6, 2}};
    const Ellipse e = fit_ellipse(pts, 1.0f);
    CHECK(e.cx == doctest::Approx(0.0f));
    CHECK(e.cy == doctest::Approx(0.0f));
    CHECK(std::abs(std::sin(e.rotation)) == doctest::Approx(0.0f).epsilon(1e-5));
    CHECK(e.semi_major == doctest::Approx(6.0f)); // proportional to half-extents
    CHECK(e.semi_minor == doctest::Approx(2.0f));
    // scaled variant
    const Ellipse e2 = fit_ellipse(pts, 1.5f);
    CHECK(e2.semi_major == doctest::Approx(9.0f));
    CHECK(e2.semi_minor == doctest::Approx(3.0f));
}

TEST_CASE("fit_ellipse requires two points") {
    const Point one[] = {{1, 1}};
    CHECK_THROWS_AS(fit_ellipse(std::span<const Point>(one, 1), 1.0f), ContractError);
}

TEST_CASE("rasterize_region clipping and area") {
    Ellipse outside{-100, -100, 5, 5, 0};
    const auto zero_map = rasterize_region(outside, 32, 32);
    for (auto v : zero_map) CHECK(v == 0);

    Ellipse cover{16, 16, 1000, 1000, 0};
    const auto one_map = rasterize_region(cover, 32, 32);
    for (auto v : one_map) CHECK(v == 1);

    // pixel count tracks pi r^2 within 5% for r >= 8
    for (float r : {8.0f, 12.0f, 20.0f}) {
        Ellipse circle{32, 32, r, r, 0};
        const auto map = rasterize_region(circle, 64, 64);
        double count = 0;
        for (auto v : map) count += v;
        const double expect = M_PI * r * r;
        CHECK(count > 0.95 * expect);
        CHECK(count < 1.05 * expect);
    }
}

TEST_CASE("gaussian smoothing preserves constants and unit mass") {
    std::vector<float> zeros(32 * 32, 0.0f);
    gaussian_smooth(zeros, 32, 32, 3);
    for (float v : zeros) CHECK(v == 0.0f);

    std::vector<float> ones(32 * 32, 1.0f);
    gaussian_smooth(ones, 32, 32, 3);
    for (float v : ones) CHECK(v == doctest::Approx(1.0f).epsilon(1e-6));

    std::vector<float> impulse(33 * 33, 0.0f);
    impulse[16 * 33 + 16] = 1.0f;
    gaussian_smooth(impulse, 33, 33, 3);
    double mass = 0.0;
    float peak = 0.0f;
    int peak_at = -1;
    for (int i = 0; i < 33 * 33; ++i) {
        mass += impulse[static_cast<std::size_t>(i)];
        if (impulse[static_cast<std::size_t>(i)] > peak) {
            peak = impulse[static_cast<std::size_t>(i)];
            peak_at = i;
        }
    }
    CHECK(peak_at == 16 * 33 + 16);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("registry covers 1..16 once with schema-grouped landmarks") {
    const auto& reg = au_registry();
    std::array<bool, 17> seen{};
    for (const AUDefinition& def : reg) {
        REQUIRE(def.au_index >= 1);
        REQUIRE(def.au_index <= 16);
        CHECK_FALSE(seen[static_cast<std::size_t>(def.au_index)]);
        seen[static_cast<std::size_t>(def.au_index)] = true;
        CHECK(def.points.size() >= 2);
        for (Lm lm : def.points) {
            const int idx = static_cast<int>(lm);
            CHECK(idx >= 0);
            CHECK(idx < kNumLandmarks);
            const std::string name = kLandmarkNames[static_cast<std::size_t>(idx)];
            if (def.au_index <= 5) {
                CHECK((name.rfind("brow", 0) == 0 || name.rfind("eye", 0) == 0));
            } else if (def.au_index >= 7 && def.au_index <= 11) {
                CHECK((name.rfind("nose", 0) == 0 || name.rfind("cheek", 0) == 0));
            } else if (def.au_index >= 12) {
                CHECK((name.rfind("mouth", 0) == 0 || name.rfind("dimple", 0) == 0));
            }
        }
    }
    for (int i = 1; i <= 16; ++i) CHECK(seen[static_cast<std::size_t>(i)]);
}

TEST_CASE("subset definitions match the ablation groupings") {
    CHECK(au_subset(AUSubsetName::eyes).indices == std::vector<int>({1, 2, 3, 4, 5}));
    CHECK(au_subset(AUSubsetName::nose).indices == std::vector<int>({7, 8, 9, 10, 11}));
    CHECK(au_subset(AUSubsetName::lips).indices == std::vector<int>({12, 13, 14, 15, 16}));
    const auto all = au_subset(AUSubsetName::all).indices;
    CHECK(all.size() == 16);
    CHECK(all.front() == 1);
    CHECK(all.back() == 16);
    // AU 6 appears only in "all"
    CHECK_FALSE(au_subset(AUSubsetName::eyes).contains(6));
    CHECK_FALSE(au_subset(AUSubsetName::nose).contains(6));
    CHECK_FALSE(au_subset(AUSubsetName::lips).contains(6));
    CHECK(au_subset(AUSubsetName::all).contains(6));
}

TEST_CASE("build_au_stack emits 16 maps per frame in [0,1]") {
    ClipGeometry geom;
    const LabeledClip clip = generate_synthetic_clip(55, geom, std::nullopt);
    const AUMapStack maps = build_au_stack(clip.stack, au_subset(AUSubsetName::all));
    CHECK(maps.t_f == geom.t_f);
    CHECK(maps.f == 16);
    CHECK(maps.h == geom.h);
    CHECK(maps.w == geom.w);
    float peak = 0.0f;
    for (float v : maps.maps) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        peak = std::max(peak, v);
    }
    CHECK(peak > 0.5f); // regions actually light up
    // every in-subset channel has support
    for (int au = 0; au < 16; ++au) {
        double mass = 0.0;
        for (int t = 0; t < maps.t_f; ++t)
            for (int y = 0; y < maps.h; ++y)
                for (int x = 0; x < maps.w; ++x) mass += maps.at(t, au, y, x);
        CHECK(mass > 0.0);
    }
}

TEST_CASE("out-of-subset channels stay zero with stable indexing") {
    ClipGeometry geom;
    const LabeledClip clip = generate_synthetic_clip(56, geom, std::nullopt);
    const AUMapStack maps = build_au_stack(clip.stack, au_subset(AUSubsetName::eyes));
    for (int au = 5; au < 16; ++au) // channels 6..16 are outside "eyes"
        for (int t = 0; t < maps.t_f; ++t)
            for (int y = 0; y < maps.h; ++y)
                for (int x = 0; x < maps.w; ++x) CHECK(maps.at(t, au, y, x) == 0.0f);
    // in-subset channels agree with the full stack
    const AUMapStack all = build_au_stack(clip.stack, au_subset(AUSubsetName::all));
    for (int au = 0; au < 5; ++au)
        for (int y = 0; y < maps.h; ++y)
            for (int x = 0; x < maps.w; ++x)
                CHECK(maps.at(0, au, y, x) == all.at(0, au, y, x));
}

TEST_CASE("build_au_stack is translation-equivariant away from borders") {
    ClipGeometry geom;
    const LabeledClip clip = generate_synthetic_clip(57, geom, std::nullopt);
    FrameStack shifted = clip.stack;
    const int dx = 5, dy = 5;
    for (FrameLandmarks& lms : shifted.landmarks)
        for (Point& p : lms) {
            p.x += static_cast<float>(dx);
            p.y += static_cast<float>(dy);
        }
    const AUMapStack base = build_au_stack(clip.stack, au_subset(AUSubsetName::all));
    const AUMapStack moved = build_au_stack(shifted, au_subset(AUSubsetName::all));
    const int margin = 8; // keep clear of both the shift and the smoothing support
    for (int au = 0; au < 16; ++au)
        for (int y = margin; y < geom.h - margin; ++y)
            for (int x = margin; x < geom.w - margin; ++x)
                CHECK(moved.at(0, au, y, x) ==
                      doctest::Approx(base.at(0, au, y - dy, x - dx)).epsilon(1e-5));
}

TEST_CASE("missing landmarks are a data error") {
    ClipGeometry geom;
    LabeledClip clip = generate_synthetic_clip(58, geom, std::nullopt);
    clip.stack.landmarks.pop_back();
    CHECK_THROWS_AS(build_au_stack(clip.stack, au_subset(AUSubsetName::all)), DataError);
}

TEST_CASE("aumap files round-trip") {
    namespace fs = std::filesystem;
    ClipGeometry geom;
    geom.t_f = 2;
    const LabeledClip clip = generate_synthetic_clip(59, geom, std::nullopt);
    const AUMapStack maps = build_au_stack(clip.stack, au_subset(AUSubsetName::all));
    const fs::path path = fs::temp_directory_path() / "aufd_test.aumap";
    write_aumap(maps, path);
    const AUMapStack back = read_aumap(path);
    CHECK(back.t_f == maps.t_f);
    CHECK(back.f == maps.f);
    CHECK(back.maps == maps.maps);
    fs::remove(path);
}
