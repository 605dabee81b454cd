#pragma once

// Test-only brute-force oracles, kept independent of the library's metric
// implementations.

#include <algorithm>
#include <numeric>
#include <vector>

namespace oracle {

// AUC by exhaustive pair enumeration: fraction of (fake, real) pairs ranked
// correctly, ties counting one half.
inline double auc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// AP by walking the ranking (stable on ties by original index) and averaging
// precision at each positive position.
inline double ap_by_rank_walk(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    int hits = 0, total_pos = 0;
    for (int y : labels) total_pos += y;
    for (std::size_t k = 0; k < order.size(); ++k)
        if (labels[order[k]] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    return sum / total_pos;
}

} // namespace oracle
