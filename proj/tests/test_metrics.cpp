#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aufd/errors.hpp"
#include "aufd/metrics.hpp"
#include "aufd/rng.hpp"
#include "oracles.hpp"

using namespace aufd;

TEST_CASE("roc_auc on the worked examples") {
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);     // perfectly separated
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == 0.0);     // perfectly inverted
    CHECK(roc_auc({0.9, 0.8, 0.8, 0.1}, {1, 0, 1, 0}) ==
          doctest::Approx(0.875)); // 3.5 of 4 pairs, tie counts half
}

TEST_CASE("roc_auc rejects single-class inputs") {
    CHECK_THROWS_AS(roc_auc({0.5, 0.6}, {1, 1}), MetricError);
    CHECK_THROWS_AS(roc_auc({0.5, 0.6}, {0, 0}), MetricError);
}

TEST_CASE("average_precision on the worked examples") {
    CHECK(average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(average_precision({0.9, 0.8, 0.7, 0.1}, {0, 0, 0, 1}) == doctest::Approx(0.25)); // last of n
    CHECK(average_precision({0.9, 0.7, 0.6, 0.5}, {1, 0, 1, 0}) ==
          doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
    CHECK_THROWS_AS(average_precision({0.5, 0.6}, {0, 0}), MetricError);
}

TEST_CASE("recall and mean F1 at the default threshold") {
    const auto perfect = recall_f1_at_threshold({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    CHECK(perfect.first == 1.0);
    CHECK(perfect.second == 1.0);

    const auto all_real = recall_f1_at_threshold({0.1, 0.2, 0.3, 0.4}, {1, 0, 1, 0});
    CHECK(all_real.first == 0.0);
    // fake-F1 is 0; real-F1 = 2*0.5*1/(0.5+1) = 2/3; mean = 1/3
    CHECK(all_real.second == doctest::Approx(1.0 / 3.0));

    const auto mixed = recall_f1_at_threshold({0.9, 0.6, 0.4, 0.1}, {1, 0, 1, 0}, 0.5);
    CHECK(mixed.first == doctest::Approx(0.5));
    CHECK(mixed.second == doctest::Approx(0.5));
}

TEST_CASE("metrics match brute-force oracles on random small instances") {
    Rng rng(20260405);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(11)); // sizes up to 12
        std::vector<double> scores(static_cast<std::size_t>(n));
        std::vector<int> labels(static_cast<std::size_t>(n));
        int n_pos = 0;
        for (int i = 0; i < n; ++i) {
            // quantized scores force plenty of ties
            scores[static_cast<std::size_t>(i)] = static_cast<double>(rng.below(8)) / 8.0;
            labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
            n_pos += labels[static_cast<std::size_t>(i)];
        }
        if (n_pos == 0 || n_pos == n) continue;
        ++checked;
        CHECK(roc_auc(scores, labels) == oracle::auc_pairwise(scores, labels)); // exact
        CHECK(average_precision(scores, labels) ==
              doctest::Approx(oracle::ap_by_rank_walk(scores, labels)).epsilon(1e-9));
    }
    CHECK(checked > 700);
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    Rng rng(31);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        scores.push_back(rng.uniform01());
        labels.push_back(static_cast<int>(rng.below(2)));
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base_auc = roc_auc(scores, labels);
    const double base_ap = average_precision(scores, labels);
    std::vector<double> warped;
    for (double s : scores) warped.push_back(std::exp(3.0 * s) - 1.0);
    CHECK(roc_auc(warped, labels) == doctest::Approx(base_auc).epsilon(1e-12));
    CHECK(average_precision(warped, labels) == doctest::Approx(base_ap).epsilon(1e-12));
}

TEST_CASE("label flip symmetry without ties") {
    Rng rng(32);
    std::vector<double> scores;
    std::vector<int> labels, flipped;
    for (int i = 0; i < 25; ++i) {
        scores.push_back(rng.uniform01() + 1e-9 * i); // distinct scores
        labels.push_back(static_cast<int>(rng.below(2)));
    }
    labels[0] = 1;
    labels[1] = 0;
    for (int y : labels) flipped.push_back(1 - y);
    CHECK(roc_auc(scores, flipped) == doctest::Approx(1.0 - roc_auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("metrics are independent of input ordering") {
    std::vector<double> scores = {0.9, 0.3, 0.8, 0.8, 0.2, 0.7};
    std::vector<int> labels = {1, 0, 0, 1, 0, 1};
    const double auc = roc_auc(scores, labels);
    const double ap = average_precision(scores, labels);
    // rotate the inputs
    for (int r = 0; r < 5; ++r) {
        std::rotate(scores.begin(), scores.begin() + 1, scores.end());
        std::rotate(labels.begin(), labels.begin() + 1, labels.end());
        CHECK(roc_auc(scores, labels) == doctest::Approx(auc).epsilon(1e-12));
        CHECK(average_precision(scores, labels) == doctest::Approx(ap).epsilon(1e-12));
    }
}

TEST_CASE("frames-video-corpus averaging order matters for unequal videos") {
    // video A: one frame at MAE 1.0; video B: three frames at MAE 0.0
    const std::vector<std::vector<double>> videos = {{1.0}, {0.0, 0.0, 0.0}};
    const double structured = mae_average(videos);
    CHECK(structured == doctest::Approx(0.5)); // (1.0 + 0.0) / 2
    double pooled = (1.0 + 0.0 + 0.0 + 0.0) / 4.0;
    CHECK(pooled == doctest::Approx(0.25));
    CHECK(structured != pooled);
}

TEST_CASE("compute_metrics assembles a report") {
    const MetricReport r = compute_metrics({0.9, 0.6, 0.4, 0.1}, {1, 0, 1, 0}, "unit", 0.5);
    CHECK(r.condition == "unit");
    CHECK(r.n_real == 2);
    CHECK(r.n_fake == 2);
    CHECK(r.auc == doctest::Approx(0.75));
    CHECK(r.ar == doctest::Approx(0.5));
    CHECK(r.mf1 == doctest::Approx(0.5));
}
