#include "moatplus/weak_supervision.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "moatplus/errors.hpp"
#include "moatplus/rng.hpp"

namespace moatplus {

using nlohmann::json;

LabelingFunctionOutput lf_high_distance_from_aur(const PriceEvent& row, double thresh) {
    LabelingFunctionOutput out{LfVerdict::Abstain, "high_distance_from_aur"};
    const auto& cmp = row.anchors.values[anchor_slot("competitor_price")];
    if (!row.aur || !cmp) return out;
    out.verdict = std::abs(*cmp - *row.aur) > thresh ? LfVerdict::Anomalous : LfVerdict::Normal;
    return out;
}

LabelingFunctionOutput lf_relative_distance(const PriceEvent& row, int anchor_slot,
                                            double rel_thresh) {
    LabelingFunctionOutput out{LfVerdict::Abstain,
                               "relative_distance_" + std::string(kAnchorNames[anchor_slot])};
    const auto& anchor = row.anchors.values[anchor_slot];
    if (!row.aur || !anchor) return out;
    out.verdict = std::abs(*anchor - *row.aur) / *row.aur > rel_thresh ? LfVerdict::Anomalous
                                                                       : LfVerdict::Normal;
    return out;
}

LabelingFunctionOutput lf_history_band(const PriceEvent& row, const FeatureBundle& features,
                                       int anchor_slot, double band_mult) {
    LabelingFunctionOutput out{LfVerdict::Abstain,
                               "history_band_" + std::string(kAnchorNames[anchor_slot])};
    const auto& anchor = row.anchors.values[anchor_slot];
    const auto& hist = features.history[anchor_slot];
    if (!anchor || hist.low_confidence || !hist.cleansed_max) return out;
    out.verdict =
        *anchor > band_mult * *hist.cleansed_max ? LfVerdict::Anomalous : LfVerdict::Normal;
    return out;
}

ResolvedLabel resolve_labels(std::span<const LabelingFunctionOutput> outputs) {
    bool any_normal = false;
    for (const auto& o : outputs) {
        if (o.verdict == LfVerdict::Anomalous) return ResolvedLabel::Anomalous;
        any_normal |= o.verdict == LfVerdict::Normal;
    }
    return any_normal ? ResolvedLabel::Normal : ResolvedLabel::Unlabeled;
}

std::vector<LabeledRow> mask_anchors(std::vector<LabeledRow> rows, const SparsityProfile& profile,
                                     std::uint64_t seed, const StandardizationParams& params,
                                     const FeatureConfig& fcfg, const MaskingOptions& opts) {
    if (rows.empty()) return rows;

    std::array<double, kAnchorArity> observed{};
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < kAnchorArity; ++j) {
            observed[j] += row.event.anchors.values[j].has_value();
        }
    }
    for (double& o : observed) o /= static_cast<double>(rows.size());

    std::array<double, kAnchorArity> retain{};
    bool any_reachable = false;
    for (std::size_t j = 0; j < kAnchorArity; ++j) {
        retain[j] = observed[j] > 0.0 ? std::min(1.0, profile.presence_rate[j] / observed[j]) : 1.0;
        any_reachable |= retain[j] < 1.0;
    }
    if (!any_reachable) {
        bool all_above = true;
        for (std::size_t j = 0; j < kAnchorArity; ++j) {
            all_above &= profile.presence_rate[j] > observed[j];
        }
        if (all_above) {
            throw MaskingError("profile unreachable: every target rate exceeds observed rate");
        }
    }

    // Slot kept when no draw can satisfy the one-anchor floor.
    int fallback_slot = 0;
    for (std::size_t j = 1; j < kAnchorArity; ++j) {
        if (retain[j] > retain[fallback_slot]) fallback_slot = static_cast<int>(j);
    }

    for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        auto& row = rows[idx];
        Rng rng = Rng::derive(seed, idx);
        AnchorVector masked;
        for (int attempt = 0; attempt <= opts.max_redraws; ++attempt) {
            masked = AnchorVector{};
            for (std::size_t j = 0; j < kAnchorArity; ++j) {
                if (!row.event.anchors.values[j]) continue;
                const bool keep = (opts.protected_slot && static_cast<int>(j) == *opts.protected_slot)
                                      ? true
                                      : rng.next_double() < retain[j];
                if (keep) masked.values[j] = row.event.anchors.values[j];
            }
            if (masked.any_present()) break;
        }
        if (!masked.any_present()) {
            // Exhausted redraws: keep the highest-retention-probability anchor
            // among the originally present ones.
            int keep_slot = -1;
            for (std::size_t j = 0; j < kAnchorArity; ++j) {
                if (!row.event.anchors.values[j]) continue;
                if (keep_slot < 0 || retain[j] > retain[keep_slot]) keep_slot = static_cast<int>(j);
            }
            if (keep_slot < 0) keep_slot = fallback_slot;
            masked.values[keep_slot] = row.event.anchors.values[keep_slot];
        }
        if (masked == row.event.anchors) continue;
        row.event.anchors = masked;
        row.features = compute_features(row.event, params, fcfg);
    }
    return rows;
}

std::string LfReport::to_json() const {
    json j;
    j["n_rows"] = n_rows;
    j["n_labeled"] = n_labeled;
    j["n_anomalous"] = n_anomalous;
    json lfs = json::array();
    for (std::size_t i = 0; i < lf_names.size(); ++i) {
        json entry;
        entry["name"] = lf_names[i];
        entry["coverage"] = coverage[i];
        entry["positive_rate"] = positive_rate[i];
        json ov = json::object(), cf = json::object();
        for (std::size_t k = 0; k < lf_names.size(); ++k) {
            if (k == i) continue;
            ov[lf_names[k]] = overlap[i][k];
            cf[lf_names[k]] = conflict[i][k];
        }
        entry["overlap"] = std::move(ov);
        entry["conflict"] = std::move(cf);
        lfs.push_back(std::move(entry));
    }
    j["labeling_functions"] = std::move(lfs);
    return j.dump(2);
}

TrainingSet build_training_set(std::span<const PriceEvent> events,
                               std::span<const LabelingFunction> lfs,
                               const SparsityProfile& profile, std::uint64_t seed,
                               int target_slot, const StandardizationParams& params,
                               const FeatureConfig& fcfg) {
    if (events.empty()) throw PipelineError("no events to label");
    if (lfs.empty()) throw PipelineError("labeling function list is empty");

    const std::size_t n_lfs = lfs.size();
    TrainingSet out;
    out.report.lf_names.reserve(n_lfs);
    for (const auto& lf : lfs) out.report.lf_names.push_back(lf.name);
    out.report.coverage.assign(n_lfs, 0.0);
    out.report.positive_rate.assign(n_lfs, 0.0);
    out.report.overlap.assign(n_lfs, std::vector<double>(n_lfs, 0.0));
    out.report.conflict.assign(n_lfs, std::vector<double>(n_lfs, 0.0));

    std::vector<LfVerdict> verdicts(n_lfs);
    std::vector<LabelingFunctionOutput> outputs(n_lfs);
    for (const auto& event : events) {
        if (!event.anchors.values[target_slot]) continue;
        out.report.n_rows += 1;
        FeatureBundle bundle = compute_features(event, params, fcfg);
        for (std::size_t i = 0; i < n_lfs; ++i) {
            verdicts[i] = lfs[i].evaluate(event, bundle);
            outputs[i] = LabelingFunctionOutput{verdicts[i], lfs[i].name};
            if (verdicts[i] != LfVerdict::Abstain) {
                out.report.coverage[i] += 1.0;
                if (verdicts[i] == LfVerdict::Anomalous) out.report.positive_rate[i] += 1.0;
            }
        }
        for (std::size_t i = 0; i < n_lfs; ++i) {
            if (verdicts[i] == LfVerdict::Abstain) continue;
            for (std::size_t k = 0; k < n_lfs; ++k) {
                if (k == i || verdicts[k] == LfVerdict::Abstain) continue;
                out.report.overlap[i][k] += 1.0;
                if (verdicts[i] != verdicts[k]) out.report.conflict[i][k] += 1.0;
            }
        }

        const ResolvedLabel label = resolve_labels(outputs);
        if (label == ResolvedLabel::Unlabeled) continue;
        LabeledRow row;
        row.event = event;
        row.features = std::move(bundle);
        row.label =
            label == ResolvedLabel::Anomalous ? BinaryLabel::Anomalous : BinaryLabel::Normal;
        row.source = LabelSource::LabelingFunction;
        out.rows.push_back(std::move(row));
    }

    if (out.report.n_rows > 0) {
        const double n = static_cast<double>(out.report.n_rows);
        for (std::size_t i = 0; i < n_lfs; ++i) {
            out.report.positive_rate[i] =
                out.report.coverage[i] > 0 ? out.report.positive_rate[i] / out.report.coverage[i]
                                           : 0.0;
            out.report.coverage[i] /= n;
            for (std::size_t k = 0; k < n_lfs; ++k) {
                out.report.conflict[i][k] = out.report.overlap[i][k] > 0
                                                ? out.report.conflict[i][k] / out.report.overlap[i][k]
                                                : 0.0;
                out.report.overlap[i][k] /= n;
            }
        }
    }
    if (out.rows.empty()) throw PipelineError("labeling produced zero labeled rows");

    MaskingOptions opts;
    opts.protected_slot = target_slot;
    out.rows = mask_anchors(std::move(out.rows), profile, seed, params, fcfg, opts);
    out.report.n_labeled = static_cast<std::int64_t>(out.rows.size());
    for (const auto& row : out.rows) {
        out.report.n_anomalous += row.label == BinaryLabel::Anomalous;
    }
    return out;
}

}  // namespace moatplus
