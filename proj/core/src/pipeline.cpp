#include "moatplus/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "moatplus/errors.hpp"
#include "moatplus/rng.hpp"

namespace moatplus {

using nlohmann::json;

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("unreadable train config: ") + e.what());
    }
    TrainConfig cfg;
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("monitored_slots")) {
        cfg.monitored_slots = j["monitored_slots"].get<std::vector<int>>();
    }
    if (j.contains("bandwidth")) cfg.features.bandwidth = j["bandwidth"].get<double>();
    if (j.contains("log_offset")) cfg.features.log_offset = j["log_offset"].get<double>();
    if (j.contains("aur_abs_percentile")) cfg.aur_abs_percentile = j["aur_abs_percentile"].get<double>();
    if (j.contains("rel_thresh")) cfg.rel_thresh = j["rel_thresh"].get<double>();
    if (j.contains("band_mult")) cfg.band_mult = j["band_mult"].get<double>();
    if (j.contains("masking_presence_rate")) {
        SparsityProfile profile;
        const auto v = j["masking_presence_rate"].get<std::vector<double>>();
        if (v.size() != kAnchorArity) throw ConfigError("masking_presence_rate must have 5 entries");
        std::copy(v.begin(), v.end(), profile.presence_rate.begin());
        cfg.masking_profile = profile;
    }
    if (j.contains("detector")) {
        const auto& d = j["detector"];
        if (d.contains("max_depth")) cfg.detector.tree.max_depth = d["max_depth"].get<int>();
        if (d.contains("min_leaf")) cfg.detector.tree.min_leaf = d["min_leaf"].get<int>();
        if (d.contains("validation_fraction")) {
            cfg.detector.validation_fraction = d["validation_fraction"].get<double>();
        }
    }
    if (j.contains("aggregator")) {
        const auto& a = j["aggregator"];
        if (a.contains("n_trees")) cfg.aggregator.forest.n_trees = a["n_trees"].get<int>();
        if (a.contains("max_depth")) cfg.aggregator.forest.max_depth = a["max_depth"].get<int>();
        if (a.contains("min_leaf")) cfg.aggregator.forest.min_leaf = a["min_leaf"].get<int>();
        if (a.contains("feature_subsample")) {
            cfg.aggregator.forest.feature_subsample = a["feature_subsample"].get<int>();
        }
        if (a.contains("bootstrap")) cfg.aggregator.forest.bootstrap = a["bootstrap"].get<bool>();
        if (a.contains("min_rows")) cfg.aggregator.min_rows = a["min_rows"].get<std::size_t>();
    }
    if (j.contains("pac_threshold")) cfg.pac_threshold = j["pac_threshold"].get<double>();
    if (j.contains("ceiling_multiplier")) cfg.ceiling_multiplier = j["ceiling_multiplier"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    return cfg;
}

std::string TrainConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["monitored_slots"] = monitored_slots;
    j["bandwidth"] = features.bandwidth;
    j["log_offset"] = features.log_offset;
    j["aur_abs_percentile"] = aur_abs_percentile;
    j["rel_thresh"] = rel_thresh;
    j["band_mult"] = band_mult;
    if (masking_profile) j["masking_presence_rate"] = masking_profile->presence_rate;
    j["detector"] = json{{"max_depth", detector.tree.max_depth},
                         {"min_leaf", detector.tree.min_leaf},
                         {"validation_fraction", detector.validation_fraction}};
    j["aggregator"] = json{{"n_trees", aggregator.forest.n_trees},
                           {"max_depth", aggregator.forest.max_depth},
                           {"min_leaf", aggregator.forest.min_leaf},
                           {"feature_subsample", aggregator.forest.feature_subsample},
                           {"bootstrap", aggregator.forest.bootstrap},
                           {"min_rows", aggregator.min_rows}};
    j["pac_threshold"] = pac_threshold;
    j["ceiling_multiplier"] = ceiling_multiplier;
    j["threads"] = threads;
    return j.dump(2);
}

// wall_seconds stays out of the document so retraining on identical inputs
// reproduces identical report bytes.
std::string TrainingReport::to_json() const {
    json j;
    j["aur_abs_threshold"] = aur_abs_threshold;
    json dets = json::array();
    for (std::size_t i = 0; i < detectors.size(); ++i) {
        const auto& d = detectors[i];
        json entry;
        entry["anchor"] = std::string(kAnchorNames[d.anchor_slot]);
        entry["threshold"] = d.threshold;
        entry["precision"] = d.precision;
        entry["recall"] = d.recall;
        entry["f1"] = d.f1;
        entry["pr_auc"] = d.pr_auc;
        entry["n_train"] = d.n_train;
        entry["n_validation"] = d.n_validation;
        entry["n_anomalous"] = d.n_anomalous;
        entry["inverted_scores"] = d.inverted_scores;
        if (i < lf_reports.size()) entry["labeling"] = json::parse(lf_reports[i].to_json());
        dets.push_back(std::move(entry));
    }
    j["detectors"] = std::move(dets);
    j["aggregator"] = json{{"n_train", aggregator.n_train},
                           {"n_validation", aggregator.n_validation},
                           {"validation_accuracy", aggregator.validation_accuracy},
                           {"class_counts", aggregator.class_counts}};
    if (aggregator.oob_estimate) j["aggregator"]["oob_estimate"] = *aggregator.oob_estimate;
    return j.dump(2);
}

namespace {

// |competitor - AUR| percentile over normal AUR-covered rows. Injection
// truth, when supplied, keeps corrupted rows out of the calibration sample.
double calibrate_aur_abs_threshold(std::span<const PriceEvent> events,
                                   std::span<const GroundTruth> truths, double percentile) {
    std::unordered_map<std::string_view, const GroundTruth*> by_id;
    by_id.reserve(truths.size());
    for (const auto& t : truths) by_id.emplace(t.item_id, &t);

    std::vector<double> distances;
    for (const auto& e : events) {
        const auto& cmp = e.anchors.values[0];
        if (!e.aur || !cmp) continue;
        if (!truths.empty()) {
            if (auto it = by_id.find(e.item_id); it != by_id.end()) {
                bool corrupted = false;
                for (const auto& [slot, kind] : it->second->injected) corrupted |= slot == 0;
                if (corrupted) continue;
            }
        }
        distances.push_back(std::abs(*cmp - *e.aur));
    }
    if (distances.empty()) {
        throw PipelineError("no AUR-covered rows to calibrate the distance threshold");
    }
    std::sort(distances.begin(), distances.end());
    return quantile_sorted(distances, percentile);
}

}  // namespace

LabelingOutcome run_labeling(std::span<const PriceEvent> events,
                             std::span<const GroundTruth> truths, const TrainConfig& cfg) {
    if (events.empty()) throw PipelineError("cannot label an empty corpus");

    LabelingOutcome out;
    for (const auto& e : events) out.max_ts = std::max(out.max_ts, e.ts);

    // Standardization over raw log-ratios of every scoreable event.
    {
        std::vector<std::array<std::optional<double>, kAnchorArity>> ratios;
        ratios.reserve(events.size());
        for (const auto& e : events) {
            if (!e.anchors.any_present()) continue;
            double base;
            if (!e.offers.empty()) {
                base = median(e.offers);
            } else {
                std::vector<double> present;
                for (const auto& v : e.anchors.values) {
                    if (v) present.push_back(*v);
                }
                base = median(std::move(present));
            }
            ratios.push_back(markup_ratios(e.anchors, base, cfg.features.log_offset));
        }
        char id[32];
        std::snprintf(id, sizeof(id), "corpus-%zu", events.size());
        out.standardization = fit_standardization(ratios, 100, id);
    }

    out.aur_abs_threshold = calibrate_aur_abs_threshold(events, truths, cfg.aur_abs_percentile);

    // Masking target defaults to the observed presence rates.
    if (cfg.masking_profile) {
        out.profile = *cfg.masking_profile;
    } else {
        std::array<double, kAnchorArity> observed{};
        for (const auto& e : events) {
            for (std::size_t j = 0; j < kAnchorArity; ++j) {
                observed[j] += e.anchors.values[j].has_value();
            }
        }
        for (std::size_t j = 0; j < kAnchorArity; ++j) {
            out.profile.presence_rate[j] = observed[j] / static_cast<double>(events.size());
        }
    }

    for (int slot : cfg.monitored_slots) {
        std::vector<LabelingFunction> lfs;
        const double abs_thresh = out.aur_abs_threshold;
        if (slot == 0) {
            lfs.push_back(LabelingFunction{
                "high_distance_from_aur",
                [abs_thresh](const PriceEvent& e, const FeatureBundle&) {
                    return lf_high_distance_from_aur(e, abs_thresh).verdict;
                }});
        }
        const double rel = cfg.rel_thresh;
        lfs.push_back(LabelingFunction{
            "relative_distance_" + std::string(kAnchorNames[slot]),
            [slot, rel](const PriceEvent& e, const FeatureBundle&) {
                return lf_relative_distance(e, slot, rel).verdict;
            }});
        const double band = cfg.band_mult;
        lfs.push_back(LabelingFunction{
            "history_band_" + std::string(kAnchorNames[slot]),
            [slot, band](const PriceEvent& e, const FeatureBundle& f) {
                return lf_history_band(e, f, slot, band).verdict;
            }});

        out.training_sets.push_back(build_training_set(events, lfs, out.profile, cfg.seed, slot,
                                                       out.standardization, cfg.features));
        out.slots.push_back(slot);
    }
    return out;
}

std::pair<ModelBundle, TrainingReport> train_bundle(std::span<const PriceEvent> events,
                                                    std::span<const GroundTruth> truths,
                                                    const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    LabelingOutcome labeling = run_labeling(events, truths, cfg);

    ModelBundle bundle;
    bundle.feature_config = cfg.features;
    bundle.pac_threshold = cfg.pac_threshold;
    bundle.ceiling_multiplier = cfg.ceiling_multiplier;
    bundle.monitored_slots = cfg.monitored_slots;
    bundle.seed = cfg.seed;
    bundle.trained_at = labeling.max_ts;
    bundle.standardization = labeling.standardization;

    TrainingReport report;
    report.aur_abs_threshold = labeling.aur_abs_threshold;

    for (std::size_t i = 0; i < labeling.slots.size(); ++i) {
        const int slot = labeling.slots[i];
        auto [detector, det_report] = train_detector(labeling.training_sets[i].rows, slot,
                                                     cfg.detector, cfg.seed, bundle.trained_at);
        bundle.detectors.detectors.emplace(slot, std::move(detector));
        report.detectors.push_back(det_report);
        report.lf_reports.push_back(std::move(labeling.training_sets[i].report));
    }

    AggregatorTrainConfig agg_cfg = cfg.aggregator;
    agg_cfg.threads = cfg.threads;
    auto [aggregator, agg_report] =
        train_aggregator(events, bundle.standardization, cfg.features, agg_cfg, cfg.seed);
    bundle.aggregator = std::move(aggregator);
    report.aggregator = std::move(agg_report);

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(bundle), std::move(report)};
}

}  // namespace moatplus
