#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aufd/clip_io.hpp"
#include "aufd/frames.hpp"
#include "aufd/metrics.hpp"
#include "aufd/perturb.hpp"
#include "aufd/rng.hpp"

using namespace aufd;
namespace fs = std::filesystem;

namespace {

FrameStack ramp_stack(int t_f, int h, int w) {
    FrameStack s = FrameStack::zero(t_f, h, w);
    for (std::size_t i = 0; i < s.pixels.size(); ++i)
        s.pixels[i] = static_cast<float>(i % 97) / 96.0f;
    return s;
}

fs::path temp_dir(const char* tag) {
    const fs::path dir = fs::temp_directory_path() / (std::string("aufd_vp_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("sample_frames index formula") {
    FrameStack raw = ramp_stack(16, 4, 4);
    const FrameStack same = sample_frames(raw, 16);
    CHECK(same.pixels == raw.pixels); // identity when counts match

    FrameStack raw64 = ramp_stack(64, 2, 2);
    const FrameStack out = sample_frames(raw64, 16);
    for (int k = 0; k < 16; ++k) {
        const int src = k * 4; // floor(k*64/16)
        for (int c = 0; c < 3; ++c)
            CHECK(out.at(k, c, 0, 0) == raw64.at(src, c, 0, 0));
    }

    FrameStack raw10 = ramp_stack(10, 2, 2);
    CHECK_THROWS_AS(sample_frames(raw10, 16), DataError);
}

TEST_CASE("synthetic clip generation is pure in (seed, config, edit)") {
    ClipGeometry geom;
    const LabeledClip a = generate_synthetic_clip(123, geom, std::nullopt);
    const LabeledClip b = generate_synthetic_clip(123, geom, std::nullopt);
    CHECK(a.stack.pixels == b.stack.pixels); // bit-identical
    for (int t = 0; t < geom.t_f; ++t)
        for (int i = 0; i < kNumLandmarks; ++i) {
            CHECK(a.stack.landmarks[t][i].x == b.stack.landmarks[t][i].x);
            CHECK(a.stack.landmarks[t][i].y == b.stack.landmarks[t][i].y);
        }
    const LabeledClip c = generate_synthetic_clip(124, geom, std::nullopt);
    CHECK(a.stack.pixels != c.stack.pixels);
}

TEST_CASE("edits stay inside their bounding region") {
    ClipGeometry geom;
    for (const std::string& name : known_edit_names()) {
        const LabeledClip real = generate_synthetic_clip(77, geom, std::nullopt);
        const LabeledClip fake = generate_synthetic_clip(77, geom, EditDescriptor{name, 0.5f});
        REQUIRE(fake.label == 1);
        REQUIRE(fake.edit.has_value());
        CHECK_FALSE(fake.edit_region.empty());
        CHECK(fake.edit_region.area() <= static_cast<int>(0.15 * geom.h * geom.w));
        int outside_diff = 0;
        for (int t = 0; t < geom.t_f; ++t)
            for (int y = 0; y < geom.h; ++y)
                for (int x = 0; x < geom.w; ++x) {
                    if (fake.edit_region.contains(x, y)) continue;
                    for (int ch = 0; ch < 3; ++ch)
                        if (real.stack.at(t, ch, y, x) != fake.stack.at(t, ch, y, x)) ++outside_diff;
                }
        CHECK(outside_diff == 0);
    }
}

TEST_CASE("landmarks lie within frame bounds and pixels within [0,1]") {
    ClipGeometry geom;
    for (std::uint64_t seed : {1ULL, 9ULL, 512ULL}) {
        const LabeledClip clip = generate_synthetic_clip(seed, geom, EditDescriptor{"eye_size", 1.0f});
        for (float v : clip.stack.pixels) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        for (const FrameLandmarks& lms : clip.stack.landmarks)
            for (const Point& p : lms) {
                CHECK(p.x >= 0.0f);
                CHECK(p.x <= static_cast<float>(geom.w - 1));
                CHECK(p.y >= 0.0f);
                CHECK(p.y <= static_cast<float>(geom.h - 1));
            }
    }
}

TEST_CASE("unknown edit name is a config error") {
    ClipGeometry geom;
    CHECK_THROWS_AS(generate_synthetic_clip(1, geom, EditDescriptor{"nose_swap", 0.5f}), ConfigError);
    CHECK_THROWS_AS(generate_synthetic_clip(1, geom, EditDescriptor{"brow_raise", 1.5f}), ConfigError);
}

TEST_CASE("200-clip corpus keeps fake-vs-real mean pixel difference under 0.02") {
    ClipGeometry geom;
    CorpusSpec spec{200, 0.5f, 20260304, geom};
    const auto corpus = generate_corpus(spec);
    int n_fake = 0, n_real = 0;
    double acc = 0.0;
    for (const LabeledClip& clip : corpus) {
        if (clip.label == 0) {
            ++n_real;
            continue;
        }
        ++n_fake;
        const LabeledClip twin = generate_synthetic_clip(clip.seed, geom, std::nullopt);
        acc += mean_abs_diff(clip.stack, twin.stack);
    }
    CHECK(n_fake == 100);
    CHECK(n_real == 100);
    CHECK(acc / n_fake < 0.02);
}

TEST_CASE("perturbation parameter ranges are enforced") {
    FrameStack s = ramp_stack(2, 16, 16);
    CHECK_THROWS_AS(apply_perturbation(s, {PerturbFamily::saturation, 2.5f, 0}), ConfigError);
    CHECK_THROWS_AS(apply_perturbation(s, {PerturbFamily::gaussian_noise, 0.2f, 0}), ConfigError);
    CHECK_THROWS_AS(apply_perturbation(s, {PerturbFamily::gaussian_blur, 2.0f, 0}), ConfigError);
    CHECK_THROWS_AS(apply_perturbation(s, {PerturbFamily::pixelation, 17.0f, 0}), ConfigError);
    CHECK_THROWS_AS(apply_perturbation(s, {PerturbFamily::blocking, 55.0f, 0}), ConfigError);
}

TEST_CASE("identity parameters return bitwise-identical frames") {
    ClipGeometry geom;
    const LabeledClip clip = generate_synthetic_clip(5, geom, std::nullopt);
    const FrameStack contrast1 = apply_perturbation(clip.stack, {PerturbFamily::contrast, 1.0f, 0});
    CHECK(contrast1.pixels == clip.stack.pixels);
    const FrameStack sat1 = apply_perturbation(clip.stack, {PerturbFamily::saturation, 1.0f, 0});
    CHECK(sat1.pixels == clip.stack.pixels);
}

TEST_CASE("contrast on a constant frame is a no-op") {
    FrameStack flat = FrameStack::zero(1, 8, 8);
    for (float& v : flat.pixels) v = 0.4f;
    const FrameStack out = apply_perturbation(flat, {PerturbFamily::contrast, 2.0f, 0});
    for (float v : out.pixels) CHECK(v == doctest::Approx(0.4f).epsilon(1e-6));
}

TEST_CASE("gaussian noise empirical std matches sigma") {
    FrameStack gray = FrameStack::zero(2, 64, 64);
    for (float& v : gray.pixels) v = 0.5f;
    const FrameStack noisy = apply_perturbation(gray, {PerturbFamily::gaussian_noise, 0.05f, 99});
    double mean = 0.0;
    for (float v : noisy.pixels) mean += v;
    mean /= static_cast<double>(noisy.pixels.size());
    double var = 0.0;
    for (float v : noisy.pixels) var += (v - mean) * (v - mean);
    var /= static_cast<double>(noisy.pixels.size());
    const double std = std::sqrt(var);
    CHECK(noisy.pixels.size() >= 10000);
    CHECK(std > 0.045);
    CHECK(std < 0.055);
}

TEST_CASE("noise is seeded and deterministic") {
    FrameStack gray = FrameStack::zero(1, 16, 16);
    for (float& v : gray.pixels) v = 0.5f;
    const FrameStack a = apply_perturbation(gray, {PerturbFamily::gaussian_noise, 0.05f, 7});
    const FrameStack b = apply_perturbation(gray, {PerturbFamily::gaussian_noise, 0.05f, 7});
    const FrameStack c = apply_perturbation(gray, {PerturbFamily::gaussian_noise, 0.05f, 8});
    CHECK(a.pixels == b.pixels);
    CHECK(a.pixels != c.pixels);
}

TEST_CASE("perturbations keep landmarks and never leave [0,1]") {
    ClipGeometry geom;
    const LabeledClip clip = generate_synthetic_clip(31, geom, EditDescriptor{"mouth_corner", 0.8f});
    for (PerturbFamily f : kAllPerturbFamilies) {
        const FrameStack out = apply_perturbation(clip.stack, {f, family_extreme(f), 3});
        for (float v : out.pixels) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        REQUIRE(out.landmarks.size() == clip.stack.landmarks.size());
        for (std::size_t t = 0; t < out.landmarks.size(); ++t)
            for (int i = 0; i < kNumLandmarks; ++i) {
                CHECK(out.landmarks[t][i].x == clip.stack.landmarks[t][i].x);
                CHECK(out.landmarks[t][i].y == clip.stack.landmarks[t][i].y);
            }
    }
}

TEST_CASE("monotone stress ordering for a fixed scoring rule") {
    // A fixed stand-in detector: mean absolute red-green imbalance in the
    // frame. Extreme perturbation parameters must move its AUC at least as
    // far from the clean AUC as the mildest in-range parameters do.
    ClipGeometry geom;
    const auto corpus = generate_corpus({60, 0.5f, 404, geom});
    const auto score = [](const FrameStack& s) {
        double acc = 0.0;
        for (int t = 0; t < s.t_f; ++t)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    acc += std::abs(static_cast<double>(s.at(t, 0, y, x)) - s.at(t, 1, y, x));
        return acc / (s.t_f * s.h * s.w);
    };
    std::vector<int> labels;
    std::vector<double> clean;
    for (const LabeledClip& c : corpus) {
        labels.push_back(c.label);
        clean.push_back(score(c.stack));
    }
    const double clean_auc = roc_auc(clean, labels);
    CHECK(clean_auc > 0.6); // the stand-in rule does see the tint cue
    for (PerturbFamily f : kAllPerturbFamilies) {
        auto auc_at = [&](float param) {
            std::vector<double> scores;
            for (const LabeledClip& c : corpus) {
                PerturbationSpec spec{f, param, mix_seed(c.seed, 1)};
                scores.push_back(score(apply_perturbation(c.stack, spec)));
            }
            return roc_auc(scores, labels);
        };
        const double mild = std::abs(auc_at(family_mildest(f)) - clean_auc);
        const double extreme = std::abs(auc_at(family_extreme(f)) - clean_auc);
        INFO(family_name(f), ": mild drift ", mild, " extreme drift ", extreme);
        CHECK(mild <= extreme + 1e-9);
    }
}

TEST_CASE("clip files round-trip bit-exactly") {
    const fs::path dir = temp_dir("roundtrip");
    ClipGeometry geom;
    const LabeledClip clip = generate_synthetic_clip(2024, geom, EditDescriptor{"brow_raise", 0.66f});
    const fs::path path = dir / "clip.clip";
    write_clip(clip, path);
    const LabeledClip back = read_clip(path);
    CHECK(back.stack.pixels == clip.stack.pixels);
    CHECK(back.label == clip.label);
    CHECK(back.seed == clip.seed);
    REQUIRE(back.edit.has_value());
    CHECK(back.edit->name == clip.edit->name);
    CHECK(back.edit->magnitude == clip.edit->magnitude);
    CHECK(back.edit_region.x0 == clip.edit_region.x0);
    CHECK(back.edit_region.area() == clip.edit_region.area());
    for (std::size_t t = 0; t < back.stack.landmarks.size(); ++t)
        for (int i = 0; i < kNumLandmarks; ++i) {
            CHECK(back.stack.landmarks[t][i].x == clip.stack.landmarks[t][i].x);
            CHECK(back.stack.landmarks[t][i].y == clip.stack.landmarks[t][i].y);
        }
    // write -> read -> write must produce identical bytes
    const fs::path path2 = dir / "clip2.clip";
    write_clip(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    fs::remove_all(dir);
}

TEST_CASE("clip format errors name the problem") {
    const fs::path dir = temp_dir("format");
    ClipGeometry geom;
    geom.t_f = 2;
    const LabeledClip clip = generate_synthetic_clip(3, geom, std::nullopt);
    const fs::path path = dir / "clip.clip";
    write_clip(clip, path);

    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("JUNK", 4);
        f.close();
        CHECK_THROWS_WITH_AS(read_clip(path), doctest::Contains("bad magic"), FormatError);
    }
    SUBCASE("truncation names the byte offset") {
        const auto size = fs::file_size(path);
        fs::resize_file(path, size / 2);
        try {
            read_clip(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("offset") != std::string::npos);
        }
    }
    fs::remove_all(dir);
}
