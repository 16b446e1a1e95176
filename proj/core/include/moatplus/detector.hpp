#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moatplus/features.hpp"
#include "moatplus/time.hpp"
#include "moatplus/tree.hpp"
#include "moatplus/types.hpp"
#include "moatplus/weak_supervision.hpp"

namespace moatplus {

/// Ordered feature schema shared by every per-anchor detector. The density
/// score is always paired with the anchor count.
std::vector<std::string> detector_feature_schema();

/// [markup, density, anchor_count, history stats, offer stats] for one slot.
/// Missing cells stay missing (NaN). Throws FeatureError when the anchor at
/// `slot` is absent.
FeatureRow detector_features(const FeatureBundle& bundle, int slot);

/// Binary anomaly detector for one anchor slot: a probability model plus an
/// operating threshold chosen on a held-out split.
struct DetectorModel {
    int anchor_slot = -1;
    Classifier model;
    double threshold = 0.5;  // flag at P(anomalous) >= threshold
    std::vector<std::string> feature_schema;
    Instant trained_at = 0;
    std::int64_t n_normal = 0;
    std::int64_t n_anomalous = 0;
};

/// Slots without a detector are pass-through: never flagged.
struct DetectorRegistry {
    std::map<int, DetectorModel> detectors;
};

struct DetectorTrainConfig {
    TreeConfig tree;
    double validation_fraction = 0.2;
};

struct DetectorReport {
    int anchor_slot = -1;
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double pr_auc = 0.0;
    std::int64_t n_train = 0;
    std::int64_t n_validation = 0;
    std::int64_t n_anomalous = 0;
    bool inverted_scores = false;  // sweep found a better F1 flagging low scores
};

/// Threshold from the midpoints of sorted distinct probabilities maximizing
/// F1; ties resolved toward the lower threshold (recall-favoring). Throws
/// TrainError when labels are single-class.
double select_threshold(std::span<const double> probs, std::span<const int> labels);

/// Trains the slot's tree on masked features and picks the F1-optimal
/// threshold on a held-out validation fraction. Deterministic given seed.
std::pair<DetectorModel, DetectorReport> train_detector(std::span<const LabeledRow> rows,
                                                        int slot,
                                                        const DetectorTrainConfig& cfg,
                                                        std::uint64_t seed,
                                                        Instant trained_at = 0);

/// Per-slot anomaly flags. Absent anchors and unmonitored slots are false.
/// Pure and deterministic.
std::array<bool, kAnchorArity> detect(const DetectorRegistry& registry,
                                      const FeatureBundle& bundle);

}  // namespace moatplus
