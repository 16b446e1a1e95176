#include "moatplus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "moatplus/errors.hpp"

namespace moatplus {

namespace {

std::vector<double> percentage_errors(std::span<const double> preds,
                                      std::span<const double> aurs) {
    if (preds.empty()) throw MetricError("empty prediction list");
    if (preds.size() != aurs.size()) throw MetricError("prediction/reference length mismatch");
    std::vector<double> e(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!(aurs[i] > 0.0)) throw MetricError("reference prices must be positive");
        e[i] = std::abs(preds[i] - aurs[i]) / aurs[i];
    }
    return e;
}

}  // namespace

double meape(std::span<const double> preds, std::span<const double> aurs) {
    std::vector<double> e = percentage_errors(preds, aurs);
    std::sort(e.begin(), e.end());
    const std::size_t n = e.size();
    return n % 2 == 1 ? e[n / 2] : (e[n / 2 - 1] + e[n / 2]) / 2.0;
}

double pac(std::span<const double> preds, std::span<const double> aurs, double t) {
    if (!(t > 0.0)) throw MetricError("pac threshold must be positive");
    const std::vector<double> e = percentage_errors(preds, aurs);
    std::size_t precise = 0;
    for (double v : e) precise += v < t;  // strictly below
    return static_cast<double>(precise) / static_cast<double>(e.size());
}

Prf precision_recall_f1(std::span<const int> flags, std::span<const int> truth) {
    if (flags.empty()) throw MetricError("empty classification input");
    if (flags.size() != truth.size()) throw MetricError("flags/truth length mismatch");
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        tp += flags[i] == 1 && truth[i] == 1;
        fp += flags[i] == 1 && truth[i] == 0;
        fn += flags[i] == 0 && truth[i] == 1;
    }
    Prf out;
    if (tp + fp == 0) {
        out.degenerate = fn > 0;
        out.precision = 0.0;
    } else {
        out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = out.precision + out.recall == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

double pr_auc(std::span<const double> probs, std::span<const int> truth) {
    if (probs.empty() || probs.size() != truth.size()) {
        throw MetricError("pr_auc input mismatch");
    }
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    std::int64_t total_pos = 0;
    for (int t : truth) total_pos += t == 1;
    if (total_pos == 0) throw MetricError("pr_auc requires at least one positive");

    double auc = 0.0;
    double prev_recall = 0.0, prev_precision = 1.0;
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        tp += truth[order[i]] == 1;
        fp += truth[order[i]] == 0;
        // Only close a trapezoid at threshold boundaries.
        if (i + 1 < order.size() && probs[order[i + 1]] == probs[order[i]]) continue;
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        auc += (recall - prev_recall) * (precision + prev_precision) / 2.0;
        prev_recall = recall;
        prev_precision = precision;
    }
    return auc;
}

}  // namespace moatplus
