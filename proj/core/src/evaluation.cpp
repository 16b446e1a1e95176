#include "moatplus/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "moatplus/errors.hpp"

namespace moatplus {

using nlohmann::json;

std::string_view to_string(ConfigurationId id) {
    switch (id) {
        case ConfigurationId::RuleBasedBaseline: return "rule_based_baseline";
        case ConfigurationId::ArithMeanNoDetector: return "arith_mean_no_detector";
        case ConfigurationId::AggregatorNoDetector: return "aggregator_no_detector";
        case ConfigurationId::ArithMeanWithDetector: return "arith_mean_with_detector";
        case ConfigurationId::MoatPlus: return "moatplus";
    }
    return "unknown";
}

EvalConfig EvalConfig::from_json(const std::string& text) {
    EvalConfig cfg;
    cfg.apply_json(text);
    return cfg;
}

void EvalConfig::apply_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("unreadable eval config: ") + e.what());
    }
    if (j.contains("pac_threshold")) pac_threshold = j["pac_threshold"].get<double>();
    if (j.contains("ceiling_multiplier")) {
        ceiling_multiplier = j["ceiling_multiplier"].get<double>();
    }
    if (j.contains("priority_order")) {
        const auto names = j["priority_order"].get<std::vector<std::string>>();
        if (names.size() != kAnchorArity) throw ConfigError("priority_order needs 5 anchors");
        for (std::size_t i = 0; i < kAnchorArity; ++i) {
            const int slot = anchor_slot(names[i]);
            if (slot < 0) throw ConfigError("unknown anchor in priority_order: " + names[i]);
            priority_order[i] = slot;
        }
    }
}

namespace {

constexpr std::size_t kConfigCount = 5;

std::optional<double> arith_mean(const AnchorVector& anchors,
                                 const std::array<bool, kAnchorArity>& exclude) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (!anchors.values[i] || exclude[i]) continue;
        sum += *anchors.values[i];
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::optional<double> priority_pick(const AnchorVector& anchors,
                                    const std::array<int, kAnchorArity>& order) {
    for (int slot : order) {
        if (anchors.values[slot]) return anchors.values[slot];
    }
    return std::nullopt;
}

std::optional<double> weighted_pick(const ModelBundle& bundle, const FeatureRow& agg_features,
                                    const AnchorVector& anchors,
                                    const std::array<bool, kAnchorArity>& flags) {
    const auto weighted = weight_anchors(bundle.aggregator, agg_features, anchors, flags);
    if (!weighted) return std::nullopt;
    return optimal_anchor(*weighted);
}

MetricReport metrics_over(std::span<const EvalRow> rows, ConfigurationId id,
                          const EvalConfig& cfg, std::string subset_name) {
    MetricReport report;
    report.subset_name = std::move(subset_name);
    report.pac_threshold = cfg.pac_threshold;
    report.n = static_cast<std::int64_t>(rows.size());
    if (rows.empty()) return report;

    const std::size_t c = static_cast<std::size_t>(id);
    std::vector<double> preds, refs;
    std::int64_t precise = 0;
    std::vector<int> flags, truth;
    for (const auto& row : rows) {
        const auto& outcome = row.outcomes[c];
        const double ref = row.truth->true_price;
        if (outcome.anchor) {
            preds.push_back(*outcome.anchor);
            refs.push_back(ref);
            precise += std::abs(*outcome.anchor - ref) / ref < cfg.pac_threshold;
        }
        if (row.event->offer_price) {
            const bool blocked = outcome.ceiling && *row.event->offer_price > *outcome.ceiling;
            flags.push_back(blocked ? 1 : 0);
            truth.push_back(row.truth->offer_anomalous ? 1 : 0);
        }
    }
    // Rows without a prediction count against PAC but cannot enter MeAPE.
    report.pac = static_cast<double>(precise) / static_cast<double>(rows.size());
    if (!preds.empty()) report.meape = meape(preds, refs);
    if (!flags.empty()) {
        const Prf prf = precision_recall_f1(flags, truth);
        report.precision = prf.precision;
        report.recall = prf.recall;
        report.f1 = prf.f1;
        report.classification_degenerate = prf.degenerate;
    }
    return report;
}

}  // namespace

std::vector<EvalRow> evaluate_corpus(std::span<const PriceEvent> events,
                                     std::span<const GroundTruth> truths,
                                     const ModelBundle& bundle, const EvalConfig& cfg) {
    std::unordered_map<std::string_view, const GroundTruth*> by_id;
    by_id.reserve(truths.size());
    for (const auto& t : truths) by_id.emplace(t.item_id, &t);

    std::vector<EvalRow> rows;
    rows.reserve(events.size());
    const std::array<bool, kAnchorArity> no_flags{};
    for (const auto& event : events) {
        if (!event.anchors.any_present()) continue;
        const auto it = by_id.find(event.item_id);
        if (it == by_id.end()) continue;

        EvalRow row;
        row.event = &event;
        row.truth = it->second;

        const FeatureBundle features =
            compute_features(event, bundle.standardization, bundle.feature_config);
        row.flags = detect(bundle.detectors, features);
        for (bool f : row.flags) row.any_flag |= f;
        const FeatureRow agg_features = aggregator_features(event, features);

        auto set = [&](ConfigurationId id, std::optional<double> anchor) {
            auto& outcome = row.outcomes[static_cast<std::size_t>(id)];
            outcome.anchor = anchor;
            if (anchor) outcome.ceiling = ceiling_price(*anchor, cfg.ceiling_multiplier);
        };
        set(ConfigurationId::RuleBasedBaseline,
            priority_pick(event.anchors, cfg.priority_order));
        set(ConfigurationId::ArithMeanNoDetector, arith_mean(event.anchors, no_flags));
        set(ConfigurationId::AggregatorNoDetector,
            weighted_pick(bundle, agg_features, event.anchors, no_flags));
        set(ConfigurationId::ArithMeanWithDetector, arith_mean(event.anchors, row.flags));
        set(ConfigurationId::MoatPlus,
            weighted_pick(bundle, agg_features, event.anchors, row.flags));

        rows.push_back(row);
    }
    if (rows.empty()) throw MetricError("no evaluation rows with ground truth");
    return rows;
}

std::map<ConfigurationId, MetricReport> run_configurations(std::span<const EvalRow> rows,
                                                            const EvalConfig& cfg) {
    std::map<ConfigurationId, MetricReport> out;
    for (std::size_t c = 0; c < kConfigCount; ++c) {
        const auto id = static_cast<ConfigurationId>(c);
        out.emplace(id, metrics_over(rows, id, cfg, "all_items"));
    }
    return out;
}

std::vector<SubsetRow> subset_report(std::span<const EvalRow> rows, const EvalConfig& cfg) {
    auto build = [&](std::string name, auto&& predicate) {
        std::vector<EvalRow> members;
        for (const auto& row : rows) {
            if (predicate(row)) members.push_back(row);
        }
        SubsetRow subset;
        subset.name = name;
        subset.n = static_cast<std::int64_t>(members.size());
        subset.existing = metrics_over(members, ConfigurationId::RuleBasedBaseline, cfg, name);
        subset.baseline = metrics_over(members, ConfigurationId::ArithMeanNoDetector, cfg, name);
        subset.moatplus = metrics_over(members, ConfigurationId::MoatPlus, cfg, name);
        return subset;
    };

    std::vector<SubsetRow> subsets;
    subsets.push_back(build("all_items", [](const EvalRow&) { return true; }));
    subsets.push_back(
        build("detector_flagged", [](const EvalRow& row) { return row.any_flag; }));
    subsets.push_back(build("any_anomalous_anchor",
                            [](const EvalRow& row) { return !row.truth->injected.empty(); }));
    subsets.push_back(build("rule_anchor_non_precise", [&](const EvalRow& row) {
        const auto& outcome =
            row.outcomes[static_cast<std::size_t>(ConfigurationId::RuleBasedBaseline)];
        if (!outcome.anchor) return true;
        const double e = std::abs(*outcome.anchor - row.truth->true_price) / row.truth->true_price;
        return e >= cfg.pac_threshold;
    }));
    return subsets;
}

EvaluationResult evaluate(std::span<const PriceEvent> events,
                          std::span<const GroundTruth> truths, const ModelBundle& bundle,
                          const EvalConfig& cfg) {
    const std::vector<EvalRow> rows = evaluate_corpus(events, truths, bundle, cfg);
    EvaluationResult result;
    result.pac_threshold = cfg.pac_threshold;
    result.n_events = static_cast<std::int64_t>(rows.size());
    for (const auto& row : rows) result.n_flagged += row.any_flag;
    result.configurations = run_configurations(rows, cfg);
    result.subsets = subset_report(rows, cfg);
    return result;
}

namespace {

json report_to_json(const MetricReport& r) {
    return json{{"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"meape", r.meape},
                {"pac", r.pac},
                {"n", r.n},
                {"pac_threshold", r.pac_threshold},
                {"degenerate", r.classification_degenerate}};
}

}  // namespace

std::string EvaluationResult::to_json() const {
    json j;
    j["pac_threshold"] = pac_threshold;
    j["n_events"] = n_events;
    j["n_flagged"] = n_flagged;
    json configs = json::object();
    for (const auto& [id, report] : configurations) {
        configs[std::string(to_string(id))] = report_to_json(report);
    }
    j["configurations"] = std::move(configs);
    json subs = json::array();
    for (const auto& s : subsets) {
        subs.push_back(json{{"name", s.name},
                            {"n", s.n},
                            {"existing", report_to_json(s.existing)},
                            {"baseline", report_to_json(s.baseline)},
                            {"moatplus", report_to_json(s.moatplus)}});
    }
    j["subsets"] = std::move(subs);
    return j.dump(2);
}

std::string EvaluationResult::to_table() const {
    std::ostringstream out;
    char line[160];
    out << "configuration comparison (n=" << n_events << ", flagged=" << n_flagged
        << ", t=" << pac_threshold << ")\n";
    std::snprintf(line, sizeof(line), "%-26s %9s %9s %9s %9s %9s\n", "configuration",
                  "precision", "recall", "f1", "meape", "pac");
    out << line;
    for (const auto& [id, r] : configurations) {
        std::snprintf(line, sizeof(line), "%-26s %9.4f %9.4f %9.4f %9.4f %9.4f\n",
                      std::string(to_string(id)).c_str(), r.precision, r.recall, r.f1, r.meape,
                      r.pac);
        out << line;
    }
    out << "\nsubsets (E=rule-based, B=arith mean, Mp=full system)\n";
    std::snprintf(line, sizeof(line), "%-26s %9s %8s %8s %8s %8s %8s %8s %8s %8s %8s\n",
                  "subset", "n", "f1_E", "f1_B", "f1_Mp", "meape_E", "meape_B", "meape_Mp",
                  "pac_E", "pac_B", "pac_Mp");
    out << line;
    for (const auto& s : subsets) {
        std::snprintf(line, sizeof(line),
                      "%-26s %9lld %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                      s.name.c_str(), static_cast<long long>(s.n), s.existing.f1, s.baseline.f1,
                      s.moatplus.f1, s.existing.meape, s.baseline.meape, s.moatplus.meape,
                      s.existing.pac, s.baseline.pac, s.moatplus.pac);
        out << line;
    }
    return std::move(out).str();
}

}  // namespace moatplus
