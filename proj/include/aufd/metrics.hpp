#pragma once

#include <string>
#include <utility>
#include <vector>

namespace aufd {

// Rank-statistic ROC AUC: P(score_fake > score_real) + 0.5 P(tie), exact
// over all pairs via midranks. Throws MetricError on single-class input.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Step-interpolated average precision; ties broken by stable sort on
// (-score, index). Throws MetricError when no positives are present.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// Fixed-threshold confusion-matrix metrics: AR is the recall of the fake
// class, mF1 the unweighted mean of per-class F1 (0 on zero denominators).
std::pair<double, double> recall_f1_at_threshold(const std::vector<double>& scores,
                                                 const std::vector<int>& labels, double threshold = 0.5);

// Appendix-style MAE averaging: frames -> video -> corpus, in that order.
double mae_average(const std::vector<std::vector<double>>& per_video_frame_mae);

struct MetricReport {
    double auc = 0, ap = 0, ar = 0, mf1 = 0;
    int n_real = 0, n_fake = 0;
    double threshold = 0.5;
    std::string condition;
};

MetricReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                             const std::string& condition, double threshold = 0.5);

} // namespace aufd
