#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace moatplus {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when there were no predicted positives but truth has positives;
    // precision is reported as 0 by convention in that case.
    bool degenerate = false;
};

/// One row of an evaluation table.
struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double meape = 0.0;
    double pac = 0.0;
    std::int64_t n = 0;
    double pac_threshold = 0.0;
    std::string subset_name;
    bool classification_degenerate = false;
};

/// Median of |pred_i - aur_i| / aur_i. Even-length median is the mean of the
/// two central order statistics. Throws MetricError on empty input.
double meape(std::span<const double> preds, std::span<const double> aurs);

/// Fraction of items with |pred_i - aur_i| / aur_i strictly below t.
double pac(std::span<const double> preds, std::span<const double> aurs, double t);

Prf precision_recall_f1(std::span<const int> flags, std::span<const int> truth);

/// Area under the precision-recall curve, trapezoidal rule over recall.
double pr_auc(std::span<const double> probs, std::span<const int> truth);

}  // namespace moatplus
