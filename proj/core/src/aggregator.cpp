#include "moatplus/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "moatplus/errors.hpp"

namespace moatplus {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

double opt_cell(const std::optional<double>& v) { return v ? *v : kMissing; }

}  // namespace

int category_bucket(std::string_view category_id) {
    return static_cast<int>(fnv1a64(category_id) % 256);
}

std::vector<std::string> aggregator_feature_schema() {
    std::vector<std::string> schema = {"category_bucket", "offer_min",  "offer_max",
                                       "offer_mean",      "offer_range", "offer_cv",
                                       "offer_count"};
    for (auto name : kAnchorNames) schema.push_back("present_" + std::string(name));
    schema.push_back("anchor_count");
    return schema;
}

FeatureRow aggregator_features(const PriceEvent& event, const FeatureBundle& bundle) {
    FeatureRow row;
    row.reserve(13);
    row.push_back(static_cast<double>(category_bucket(event.category_id)));
    row.push_back(opt_cell(bundle.offers.min));
    row.push_back(opt_cell(bundle.offers.max));
    row.push_back(opt_cell(bundle.offers.mean));
    row.push_back(opt_cell(bundle.offers.range));
    row.push_back(opt_cell(bundle.offers.cv));
    row.push_back(static_cast<double>(bundle.offers.count));
    for (const auto& v : event.anchors.values) row.push_back(v ? 1.0 : 0.0);
    row.push_back(static_cast<double>(event.anchors.present_count()));
    return row;
}

int derive_target(const AnchorVector& anchors, double aur, Rng& rng) {
    if (!(aur > 0.0)) throw TargetError("target derivation requires a positive AUR");
    double best = std::numeric_limits<double>::infinity();
    std::array<int, kAnchorArity> tied{};
    int n_tied = 0;
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (!anchors.values[i]) continue;
        const double d = std::abs(*anchors.values[i] - aur);
        if (d < best) {
            best = d;
            tied[0] = static_cast<int>(i);
            n_tied = 1;
        } else if (d == best) {
            tied[n_tied++] = static_cast<int>(i);
        }
    }
    if (n_tied == 0) throw TargetError("no present anchor to derive a target from");
    if (n_tied == 1) return tied[0];
    return tied[rng.below(static_cast<std::uint64_t>(n_tied))];
}

std::pair<AggregatorModel, AggregatorReport> train_aggregator(
    std::span<const PriceEvent> events, const StandardizationParams& params,
    const FeatureConfig& fcfg, const AggregatorTrainConfig& cfg, std::uint64_t seed) {
    Dataset data;
    data.n_classes = static_cast<int>(kAnchorArity);
    data.feature_names = aggregator_feature_schema();

    for (const auto& event : events) {
        if (!event.aur || !event.anchors.any_present()) continue;
        Rng tie_rng = Rng::derive(seed, fnv1a64(event.item_id));
        const int target = derive_target(event.anchors, *event.aur, tie_rng);
        const FeatureBundle bundle = compute_features(event, params, fcfg);
        data.rows.push_back(aggregator_features(event, bundle));
        data.labels.push_back(target);
    }
    if (data.rows.size() < cfg.min_rows) {
        throw TrainError("aggregator needs >= " + std::to_string(cfg.min_rows) +
                         " AUR-covered rows, got " + std::to_string(data.rows.size()));
    }
    std::vector<std::int64_t> class_counts(kAnchorArity, 0);
    for (int l : data.labels) class_counts[l] += 1;
    const int realized =
        static_cast<int>(std::count_if(class_counts.begin(), class_counts.end(),
                                       [](std::int64_t c) { return c > 0; }));
    if (realized < 2) throw TrainError("aggregator target collapsed to a single class");

    // Seeded shuffle; the head trains, the tail validates.
    std::vector<std::size_t> order(data.rows.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(seed, 0xA66ULL);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(cfg.validation_fraction * data.rows.size()));
    const std::size_t n_train = data.rows.size() - n_val;

    Dataset train;
    train.n_classes = data.n_classes;
    train.feature_names = data.feature_names;
    train.rows.reserve(n_train);
    train.labels.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        train.rows.push_back(std::move(data.rows[order[i]]));
        train.labels.push_back(data.labels[order[i]]);
    }

    ForestConfig forest_cfg = cfg.forest;
    if (forest_cfg.class_weights.empty()) {
        forest_cfg.class_weights = balanced_class_weights(train.labels, train.n_classes);
    }
    RandomForest forest = train_random_forest(train, forest_cfg, seed, cfg.threads);

    AggregatorReport report;
    report.n_train = static_cast<std::int64_t>(n_train);
    report.n_validation = static_cast<std::int64_t>(n_val);
    report.oob_estimate = forest.oob_estimate;
    report.class_counts = std::move(class_counts);
    if (n_val > 0) {
        std::size_t correct = 0;
        for (std::size_t i = n_train; i < order.size(); ++i) {
            const auto probs = forest.predict_proba(data.rows[order[i]]);
            const int pred =
                static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
            correct += pred == data.labels[order[i]];
        }
        report.validation_accuracy = static_cast<double>(correct) / static_cast<double>(n_val);
    }

    AggregatorModel model;
    model.feature_schema = aggregator_feature_schema();
    model.forest = Classifier(std::move(forest));
    return {std::move(model), std::move(report)};
}

std::optional<std::vector<WeightedAnchor>> weight_anchors_from_probs(
    std::span<const double> probs, const AnchorVector& anchors,
    const std::array<bool, kAnchorArity>& flags) {
    if (probs.size() != kAnchorArity) {
        throw SchemaError("aggregator probability arity mismatch");
    }
    std::vector<WeightedAnchor> usable;
    double mass = 0.0;
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (!anchors.values[i] || flags[i]) continue;
        usable.push_back(WeightedAnchor{static_cast<int>(i), *anchors.values[i], probs[i]});
        mass += probs[i];
    }
    if (usable.empty()) return std::nullopt;
    if (mass <= 0.0) {
        // Degenerate probabilities; fall back to uniform over the usable set.
        for (auto& w : usable) w.weight = 1.0 / static_cast<double>(usable.size());
        return usable;
    }
    for (auto& w : usable) w.weight /= mass;
    return usable;
}

std::optional<std::vector<WeightedAnchor>> weight_anchors(
    const AggregatorModel& model, const FeatureRow& features, const AnchorVector& anchors,
    const std::array<bool, kAnchorArity>& flags) {
    if (features.size() != model.feature_schema.size()) {
        throw SchemaError("aggregator feature arity mismatch");
    }
    return weight_anchors_from_probs(model.forest.predict_proba(features), anchors, flags);
}

double optimal_anchor(std::span<const WeightedAnchor> weighted) {
    if (weighted.empty()) throw AggregationError("no weighted anchors to aggregate");
    double acc = 0.0;
    for (const auto& w : weighted) acc += w.weight * w.anchor_value;
    return acc;
}

double ceiling_price(double optimal, double multiplier) {
    if (multiplier < 1.0) throw ConfigError("ceiling multiplier must be >= 1");
    return optimal * multiplier;
}

}  // namespace moatplus
