#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moatplus/features.hpp"
#include "moatplus/types.hpp"

namespace moatplus {

enum class LfVerdict { Anomalous, Normal, Abstain };

struct LabelingFunctionOutput {
    LfVerdict verdict = LfVerdict::Abstain;
    std::string lf_name;
};

/// A named heuristic labeler over (event, features).
struct LabelingFunction {
    std::string name;
    std::function<LfVerdict(const PriceEvent&, const FeatureBundle&)> evaluate;
};

/// Target marginal presence per anchor slot for masking, with an optional
/// stricter joint anchor-count histogram (counts 1..5, sums to 1).
struct SparsityProfile {
    std::array<double, kAnchorArity> presence_rate{1.0, 1.0, 1.0, 1.0, 1.0};
    std::optional<std::array<double, kAnchorArity>> joint_count_dist;
};

/// One weak-labeled training row for a detector task; keeps the (possibly
/// masked) event so features can be recomputed after masking.
struct LabeledRow {
    PriceEvent event;
    FeatureBundle features;
    BinaryLabel label = BinaryLabel::Normal;
    LabelSource source = LabelSource::LabelingFunction;
};

enum class ResolvedLabel { Anomalous, Normal, Unlabeled };

// --- Labeling functions -------------------------------------------------

/// Anomalous iff AUR and competitor price are present and their absolute
/// distance exceeds thresh; abstains on missing evidence.
LabelingFunctionOutput lf_high_distance_from_aur(const PriceEvent& row, double thresh);

/// Anomalous iff |anchor - aur| / aur > rel_thresh for the given slot.
LabelingFunctionOutput lf_relative_distance(const PriceEvent& row, int anchor_slot,
                                            double rel_thresh);

/// Anomalous iff the anchor exceeds band_mult times its cleansed history
/// maximum; abstains when the history is low-confidence or the anchor absent.
LabelingFunctionOutput lf_history_band(const PriceEvent& row, const FeatureBundle& features,
                                       int anchor_slot, double band_mult);

/// Union policy: Anomalous if any vote is Anomalous; Normal if at least one
/// Normal and no Anomalous; Unlabeled if all abstain.
ResolvedLabel resolve_labels(std::span<const LabelingFunctionOutput> outputs);

// --- Masking -------------------------------------------------------------

struct MaskingOptions {
    std::optional<int> protected_slot;  // a detector's own target anchor
    int max_redraws = 16;
};

/// Randomly nullifies anchors so per-slot presence matches the profile.
/// Slot j is retained with probability min(1, target_j / observed_j); at
/// least one anchor survives per row. Features are recomputed from the
/// masked events. Deterministic for a fixed seed (per-row streams).
std::vector<LabeledRow> mask_anchors(std::vector<LabeledRow> rows, const SparsityProfile& profile,
                                     std::uint64_t seed, const StandardizationParams& params,
                                     const FeatureConfig& fcfg, const MaskingOptions& opts = {});

// --- Pipeline ------------------------------------------------------------

/// Per-LF coverage, positive rate and pairwise overlap/conflict rates.
struct LfReport {
    std::vector<std::string> lf_names;
    std::vector<double> coverage;       // non-abstain rate
    std::vector<double> positive_rate;  // anomalous rate
    std::vector<std::vector<double>> overlap;   // both non-abstain
    std::vector<std::vector<double>> conflict;  // both voted, disagreed
    std::int64_t n_rows = 0;
    std::int64_t n_labeled = 0;
    std::int64_t n_anomalous = 0;

    std::string to_json() const;
};

struct TrainingSet {
    std::vector<LabeledRow> rows;
    LfReport report;
};

/// Label -> mask -> recompute features, in that order, for one detector's
/// target slot. Rows whose target anchor is absent are skipped; unlabeled
/// rows are dropped. Throws PipelineError on an empty LF list or when no row
/// receives a label.
TrainingSet build_training_set(std::span<const PriceEvent> events,
                               std::span<const LabelingFunction> lfs,
                               const SparsityProfile& profile, std::uint64_t seed,
                               int target_slot, const StandardizationParams& params,
                               const FeatureConfig& fcfg);

}  // namespace moatplus
