#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moatplus/features.hpp"
#include "moatplus/rng.hpp"
#include "moatplus/tree.hpp"
#include "moatplus/types.hpp"

namespace moatplus {

/// Multiclass reliability model over the anchor slots. Class index == slot
/// index. The schema deliberately excludes raw anchor values: reliability is
/// estimated from item context, not from the prices being judged.
struct AggregatorModel {
    Classifier forest;
    std::vector<std::string> feature_schema;
};

struct WeightedAnchor {
    int slot = -1;
    double anchor_value = 0.0;
    double weight = 0.0;
};

/// Stable category bucket in [0, 256).
int category_bucket(std::string_view category_id);

std::vector<std::string> aggregator_feature_schema();

/// [category bucket, offer stats, presence mask, anchor count]; arity 13.
FeatureRow aggregator_features(const PriceEvent& event, const FeatureBundle& bundle);

/// Slot of the present anchor closest to AUR; exact ties broken by a uniform
/// draw from the supplied stream. Throws TargetError when no anchor present.
int derive_target(const AnchorVector& anchors, double aur, Rng& rng);

struct AggregatorTrainConfig {
    ForestConfig forest;
    std::size_t min_rows = 500;
    double validation_fraction = 0.2;
    int threads = 1;
};

struct AggregatorReport {
    std::int64_t n_train = 0;
    std::int64_t n_validation = 0;
    double validation_accuracy = 0.0;
    std::optional<double> oob_estimate;
    std::vector<std::int64_t> class_counts;
};

/// Random forest over (aggregator_features, derive_target) pairs from
/// AUR-covered events. Throws TrainError when under min_rows or fewer than
/// two target classes are realized.
std::pair<AggregatorModel, AggregatorReport> train_aggregator(
    std::span<const PriceEvent> events, const StandardizationParams& params,
    const FeatureConfig& fcfg, const AggregatorTrainConfig& cfg, std::uint64_t seed);

/// Restricts class probabilities to present-and-unflagged anchors and
/// renormalizes; empty result means no reliable anchor survived.
std::optional<std::vector<WeightedAnchor>> weight_anchors_from_probs(
    std::span<const double> probs, const AnchorVector& anchors,
    const std::array<bool, kAnchorArity>& flags);

std::optional<std::vector<WeightedAnchor>> weight_anchors(
    const AggregatorModel& model, const FeatureRow& features, const AnchorVector& anchors,
    const std::array<bool, kAnchorArity>& flags);

/// Weighted mean of the surviving anchors. Throws AggregationError on empty.
double optimal_anchor(std::span<const WeightedAnchor> weighted);

/// optimal * multiplier; the multiplier is the business tolerance buffer.
/// Throws ConfigError when multiplier < 1.
double ceiling_price(double optimal, double multiplier);

}  // namespace moatplus
