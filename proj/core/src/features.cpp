#include "moatplus/features.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "moatplus/errors.hpp"

namespace moatplus {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gaussian_kernel(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

double population_std(std::span<const double> xs, double mean) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

std::array<std::optional<double>, kAnchorArity> markup_ratios(const AnchorVector& anchors,
                                                              double base_price, double c) {
    std::array<std::optional<double>, kAnchorArity> r{};
    const double denom = base_price + c;
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (anchors.values[i]) r[i] = std::log((*anchors.values[i] + c) / denom);
    }
    return r;
}

std::array<std::optional<double>, kAnchorArity> standardize(
    const std::array<std::optional<double>, kAnchorArity>& r, const StandardizationParams& p) {
    std::array<std::optional<double>, kAnchorArity> m{};
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (r[i]) m[i] = (*r[i] - p.means[i]) / p.stds[i];
    }
    return m;
}

StandardizationParams fit_standardization(
    std::span<const std::array<std::optional<double>, kAnchorArity>> corpus,
    std::size_t min_observations, std::string fitted_on) {
    StandardizationParams params;
    params.fitted_on = std::move(fitted_on);
    for (std::size_t slot = 0; slot < kAnchorArity; ++slot) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& row : corpus) {
            if (row[slot]) {
                sum += *row[slot];
                ++n;
            }
        }
        if (n < min_observations) {
            throw FitError("standardization slot '" + std::string(kAnchorNames[slot]) +
                           "' has only " + std::to_string(n) + " observations");
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& row : corpus) {
            if (row[slot]) ss += (*row[slot] - mean) * (*row[slot] - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd > 0.0)) {
            throw FitError("standardization slot '" + std::string(kAnchorNames[slot]) +
                           "' has zero variance");
        }
        params.means[slot] = mean;
        params.stds[slot] = sd;
    }
    return params;
}

double kde_density(std::span<const double> samples, double query, double h) {
    if (!(h > 0.0)) throw ConfigError("kernel bandwidth must be positive");
    if (samples.empty()) throw ConfigError("kernel density requires a nonempty sample");
    double acc = 0.0;
    for (double x : samples) acc += gaussian_kernel((query - x) / h);
    return acc / (static_cast<double>(samples.size()) * h);
}

DensityFeatures density_features(const MarkupVector& m, double h) {
    std::array<double, kAnchorArity> sample{};
    std::size_t k = 0;
    for (const auto& v : m.m) {
        if (v) sample[k++] = *v;
    }
    if (k == 0) throw FeatureError("density features require at least one present anchor");

    DensityFeatures out;
    out.anchor_count = static_cast<int>(k);
    const std::span<const double> samples(sample.data(), k);
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (m.m[i]) out.density[i] = kde_density(samples, *m.m[i], h);
    }
    return out;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

double quantile_sorted(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) throw MetricError("quantile of empty sample");
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

HistoryStats history_stats(std::span<const PricePoint> series) {
    HistoryStats stats;
    std::vector<double> values;
    values.reserve(series.size());
    for (const auto& pp : series) {
        if (pp.price > 0.0) values.push_back(pp.price);
    }
    int dropped = static_cast<int>(series.size() - values.size());

    if (values.size() >= 8) {
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double q1 = quantile_sorted(sorted, 0.25);
        const double q3 = quantile_sorted(sorted, 0.75);
        const double iqr = q3 - q1;
        const double lo = q1 - 1.5 * iqr;
        const double hi = q3 + 1.5 * iqr;
        std::vector<double> kept;
        kept.reserve(values.size());
        for (double v : values) {
            if (v >= lo && v <= hi) kept.push_back(v);
        }
        dropped += static_cast<int>(values.size() - kept.size());
        values = std::move(kept);
    }

    stats.n_used = static_cast<int>(values.size());
    stats.n_dropped = dropped;
    stats.low_confidence = values.size() < 4;
    if (values.empty()) return stats;

    std::sort(values.begin(), values.end());
    stats.cleansed_min = values.front();
    stats.cleansed_max = values.back();
    stats.cleansed_median = quantile_sorted(values, 0.5);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    stats.cleansed_std = population_std(values, mean);
    return stats;
}

OfferStats offer_stats(std::span<const double> offers) {
    OfferStats stats;
    stats.count = static_cast<int>(offers.size());
    if (offers.empty()) return stats;

    double mean = 0.0, lo = offers[0], hi = offers[0];
    for (double v : offers) {
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    mean /= static_cast<double>(offers.size());
    stats.mean = mean;
    stats.min = lo;
    stats.max = hi;
    stats.range = hi - lo;
    stats.cv = population_std(offers, mean) / mean;
    return stats;
}

FeatureBundle compute_features(const PriceEvent& event, const StandardizationParams& params,
                               const FeatureConfig& cfg) {
    if (!event.anchors.any_present()) {
        throw FeatureError("cannot derive features without any anchor");
    }

    FeatureBundle bundle;
    if (!event.offers.empty()) {
        bundle.base_price = median(event.offers);
    } else {
        std::vector<double> present;
        for (const auto& v : event.anchors.values) {
            if (v) present.push_back(*v);
        }
        bundle.base_price = median(std::move(present));
        bundle.base_fallback = true;
    }

    bundle.markups.r = markup_ratios(event.anchors, bundle.base_price, cfg.log_offset);
    bundle.markups.m = standardize(bundle.markups.r, params);
    bundle.density = density_features(bundle.markups, cfg.bandwidth);
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        bundle.history[i] = history_stats(event.history[i]);
    }
    bundle.offers = offer_stats(event.offers);
    return bundle;
}

std::string feature_bundle_to_json(const FeatureBundle& bundle) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };

    json j;
    j["base_price"] = bundle.base_price;
    j["base_fallback"] = bundle.base_fallback;
    j["anchor_count"] = bundle.density.anchor_count;
    json per_anchor = json::object();
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        const auto& h = bundle.history[i];
        per_anchor[std::string(kAnchorNames[i])] =
            json{{"r", opt(bundle.markups.r[i])},
                 {"m", opt(bundle.markups.m[i])},
                 {"density", opt(bundle.density.density[i])},
                 {"hist_min", opt(h.cleansed_min)},
                 {"hist_median", opt(h.cleansed_median)},
                 {"hist_max", opt(h.cleansed_max)},
                 {"hist_std", opt(h.cleansed_std)},
                 {"hist_n_used", h.n_used},
                 {"hist_n_dropped", h.n_dropped},
                 {"hist_low_confidence", h.low_confidence}};
    }
    j["anchors"] = std::move(per_anchor);
    j["offers"] = json{{"mean", opt(bundle.offers.mean)},   {"min", opt(bundle.offers.min)},
                       {"max", opt(bundle.offers.max)},     {"range", opt(bundle.offers.range)},
                       {"cv", opt(bundle.offers.cv)},       {"count", bundle.offers.count}};
    return j.dump();
}

}  // namespace moatplus
