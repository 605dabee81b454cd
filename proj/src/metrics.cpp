#include "aufd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aufd/errors.hpp"

namespace aufd {

namespace {

void check_sizes(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ContractError("metrics: scores and labels differ in length");
    if (scores.empty()) throw MetricError("metrics: empty input");
}

} // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_sizes(scores, labels);
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("roc_auc: undefined for single-class input");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += midrank;
        i = j + 1;
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double rank_auc_of(const std::vector<double>& scores, const std::vector<int>& labels) {
    // lenient wrapper for training curves; degenerate epochs report 0.5
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
    if (scores.empty() || n_pos == 0 || n_pos == scores.size()) return 0.5;
    return roc_auc(scores, labels);
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_sizes(scores, labels);
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
    if (n_pos == 0) throw MetricError("average_precision: undefined without positives");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(n_pos);
}

std::pair<double, double> recall_f1_at_threshold(const std::vector<double>& scores,
                                                 const std::vector<int>& labels, double threshold) {
    check_sizes(scores, labels);
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred_fake = scores[i] >= threshold;
        if (labels[i] == 1)
            (pred_fake ? tp : fn)++;
        else
            (pred_fake ? fp : tn)++;
    }
    if (tp + fn == 0 || fp + tn == 0)
        throw MetricError("recall_f1_at_threshold: undefined for single-class input");

    const auto f1 = [](long tp_, long fp_, long fn_) {
        const double denom = static_cast<double>(2 * tp_ + fp_ + fn_);
        return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp_) / denom;
    };
    const double ar = static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double mf1 = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
    return {ar, mf1};
}

double mae_average(const std::vector<std::vector<double>>& per_video_frame_mae) {
    if (per_video_frame_mae.empty()) throw ConfigError("mae_average: no videos");
    double corpus = 0.0;
    for (const auto& video : per_video_frame_mae) {
        if (video.empty()) throw ConfigError("mae_average: video without frames");
        double v = 0.0;
        for (double frame : video) v += frame;
        corpus += v / static_cast<double>(video.size());
    }
    return corpus / static_cast<double>(per_video_frame_mae.size());
}

MetricReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                             const std::string& condition, double threshold) {
    MetricReport r;
    r.condition = condition;
    r.threshold = threshold;
    for (int y : labels) (y == 1 ? r.n_fake : r.n_real)++;
    r.auc = roc_auc(scores, labels);
    r.ap = average_precision(scores, labels);
    const auto [ar, mf1] = recall_f1_at_threshold(scores, labels, threshold);
    r.ar = ar;
    r.mf1 = mf1;
    return r;
}

} // namespace aufd
