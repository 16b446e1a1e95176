#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moatplus/aggregator.hpp"
#include "moatplus/bundle.hpp"
#include "moatplus/detector.hpp"
#include "moatplus/synthetic.hpp"
#include "moatplus/weak_supervision.hpp"

namespace moatplus {

/// Offline training configuration: labeling-function thresholds, masking
/// profile and model hyperparameters. Defaults mirror the shipped config.
struct TrainConfig {
    std::uint64_t seed = 1;
    std::vector<int> monitored_slots{0, 2, 4};

    FeatureConfig features;

    // Labeling-function thresholds. The absolute AUR-distance threshold is
    // calibrated per corpus as a percentile of |competitor - AUR| over
    // normal AUR-covered rows (injection truth, when available, excludes
    // corrupted rows from the calibration sample).
    double aur_abs_percentile = 0.995;
    double rel_thresh = 2.0;
    double band_mult = 3.0;

    // Masking target; empty -> observed rates (fixed point).
    std::optional<SparsityProfile> masking_profile;

    DetectorTrainConfig detector;
    AggregatorTrainConfig aggregator;

    double pac_threshold = 0.2;
    double ceiling_multiplier = 1.5;
    int threads = 2;

    static TrainConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct TrainingReport {
    double aur_abs_threshold = 0.0;
    std::vector<DetectorReport> detectors;
    std::vector<LfReport> lf_reports;  // aligned with detectors
    AggregatorReport aggregator;
    double wall_seconds = 0.0;

    std::string to_json() const;
};

/// Labeling stage only: fits standardization, runs the per-slot labeling
/// functions and masking, returns the coverage/conflict reports without
/// training any model. Used by the `label` subcommand and by train_bundle.
struct LabelingOutcome {
    StandardizationParams standardization;
    double aur_abs_threshold = 0.0;
    SparsityProfile profile;
    std::vector<int> slots;
    std::vector<TrainingSet> training_sets;  // aligned with slots
    Instant max_ts = 0;
};

LabelingOutcome run_labeling(std::span<const PriceEvent> events,
                             std::span<const GroundTruth> truths, const TrainConfig& cfg);

/// Full offline training pass: fit standardization, weak-label and mask per
/// monitored slot, train detectors and the aggregator, assemble the bundle.
/// `truths` may be empty; when present it sharpens LF threshold calibration.
/// trained_at is derived from the corpus (max event ts) so retraining on
/// identical inputs reproduces identical bundle bytes.
std::pair<ModelBundle, TrainingReport> train_bundle(std::span<const PriceEvent> events,
                                                    std::span<const GroundTruth> truths,
                                                    const TrainConfig& cfg);

}  // namespace moatplus
