#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moatplus/types.hpp"

namespace moatplus {

/// Log-ratio features r and their standardized form m, slot-aligned with the
/// anchor vector. Entries are present exactly where the anchor is present.
struct MarkupVector {
    std::array<std::optional<double>, kAnchorArity> r{};
    std::array<std::optional<double>, kAnchorArity> m{};
};

/// Pre-learned per-slot location/scale for the log-ratio features. Fitted on
/// a training corpus, persisted in the model bundle, refreshed at retraining.
struct StandardizationParams {
    std::array<double, kAnchorArity> means{};
    std::array<double, kAnchorArity> stds{};  // strictly positive
    std::string fitted_on;
};

/// Per-anchor kernel density score over the item's standardized markups,
/// always paired with the anchor count: a single-anchor item scores the
/// kernel peak, so the score is only meaningful together with k.
struct DensityFeatures {
    std::array<std::optional<double>, kAnchorArity> density{};
    int anchor_count = 0;
};

/// Outlier-cleansed summary of one anchor's price history.
struct HistoryStats {
    std::optional<double> cleansed_min;
    std::optional<double> cleansed_median;
    std::optional<double> cleansed_max;
    std::optional<double> cleansed_std;  // population convention
    int n_used = 0;
    int n_dropped = 0;
    bool low_confidence = true;  // fewer than 4 surviving points
};

/// Statistics over the competing-offer price array; all absent when empty.
struct OfferStats {
    std::optional<double> mean;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> range;
    std::optional<double> cv;  // population std / mean
    int count = 0;
};

struct FeatureConfig {
    double log_offset = 1.0;  // c in the log-ratio transform
    double bandwidth = 0.5;   // Gaussian kernel bandwidth
};

/// Everything the detector and aggregator layers consume for one event.
struct FeatureBundle {
    MarkupVector markups;
    DensityFeatures density;
    std::array<HistoryStats, kAnchorArity> history{};
    OfferStats offers;
    double base_price = 0.0;   // x0: median observed marketplace price
    bool base_fallback = false;  // true when x0 fell back to the anchor median
};

/// r_i = ln((x_i + c) / (x0 + c)) per present anchor; absent in, absent out.
std::array<std::optional<double>, kAnchorArity> markup_ratios(const AnchorVector& anchors,
                                                              double base_price, double c);

/// m_i = (r_i - mean_i) / std_i elementwise over present entries.
std::array<std::optional<double>, kAnchorArity> standardize(
    const std::array<std::optional<double>, kAnchorArity>& r, const StandardizationParams& p);

/// Per-slot sample mean and sample (n-1) standard deviation over present
/// values. Throws FitError naming the slot when a slot has fewer than
/// min_observations present values or zero variance.
StandardizationParams fit_standardization(
    std::span<const std::array<std::optional<double>, kAnchorArity>> corpus,
    std::size_t min_observations = 100, std::string fitted_on = {});

/// Gaussian-kernel density estimate (1/(k h)) * sum K((x - x_i)/h).
/// Self-inclusive: callers query at points that are members of samples.
double kde_density(std::span<const double> samples, double query, double h);

/// Density score of every present markup within the full present-markup
/// sample set, plus the anchor count. Throws FeatureError when no markup is
/// present.
DensityFeatures density_features(const MarkupVector& m, double h);

/// Drops nonpositive prices, then (for series of length >= 8) values outside
/// [Q1 - 1.5 IQR, Q3 + 1.5 IQR]; summarizes the survivors. Quartiles use
/// linear interpolation between order statistics.
HistoryStats history_stats(std::span<const PricePoint> series);

OfferStats offer_stats(std::span<const double> offers);

/// Median with the usual even-length convention (mean of central pair).
double median(std::vector<double> values);

/// Linear-interpolation quantile over a sorted sample, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Full feature derivation for one scoreable event. x0 is the median of the
/// offer array, falling back to the median of present anchors when offers
/// are empty (base_fallback). Throws FeatureError when no anchor is present.
FeatureBundle compute_features(const PriceEvent& event, const StandardizationParams& params,
                               const FeatureConfig& cfg);

/// Snapshot of a derived bundle for audit records.
std::string feature_bundle_to_json(const FeatureBundle& bundle);

}  // namespace moatplus
