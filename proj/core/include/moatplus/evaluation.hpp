#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moatplus/bundle.hpp"
#include "moatplus/metrics.hpp"
#include "moatplus/synthetic.hpp"
#include "moatplus/types.hpp"

namespace moatplus {

/// The five comparison configurations: the fixed-priority stand-in for the
/// legacy rule-based pick, arithmetic means with/without the detector layer,
/// the aggregator alone, and the full system.
enum class ConfigurationId {
    RuleBasedBaseline,
    ArithMeanNoDetector,
    AggregatorNoDetector,
    ArithMeanWithDetector,
    MoatPlus,
};

std::string_view to_string(ConfigurationId id);

struct EvalConfig {
    double pac_threshold = 0.2;
    double ceiling_multiplier = 1.5;
    // Rule-based stand-in: first present anchor in this order wins.
    std::array<int, kAnchorArity> priority_order{0, 1, 2, 3, 4};

    static EvalConfig from_json(const std::string& text);

    /// Fields present in the document override this config in place; absent
    /// fields keep their current (e.g. bundle-derived) values.
    void apply_json(const std::string& text);
};

/// Per-event outcome of one configuration: the chosen/blended anchor and the
/// ceiling derived from it. No prediction (all anchors flagged) means no
/// ceiling, so no offer can be blocked for that event.
struct ConfigOutcome {
    std::optional<double> anchor;
    std::optional<double> ceiling;
};

/// One evaluation row: an event joined with its generator ground truth and
/// the detector flags the bundle produced for it.
struct EvalRow {
    const PriceEvent* event = nullptr;
    const GroundTruth* truth = nullptr;
    std::array<bool, kAnchorArity> flags{};
    bool any_flag = false;
    std::array<ConfigOutcome, 5> outcomes;  // indexed by ConfigurationId
};

/// Scores the corpus once and derives all five configuration outcomes per
/// event. Events without any anchor are skipped. Throws MetricError when no
/// event has ground truth.
std::vector<EvalRow> evaluate_corpus(std::span<const PriceEvent> events,
                                     std::span<const GroundTruth> truths,
                                     const ModelBundle& bundle, const EvalConfig& cfg);

/// Metrics per configuration over the given rows. PAC counts missing
/// predictions as non-precise; MeAPE is over rows with a prediction.
/// Precision/recall are event-level: an offer is flagged when it exceeds
/// the configuration's ceiling, truth comes from the injection log.
std::map<ConfigurationId, MetricReport> run_configurations(std::span<const EvalRow> rows,
                                                            const EvalConfig& cfg);

/// The vulnerability subsets with existing/baseline/full-system columns.
struct SubsetRow {
    std::string name;
    std::int64_t n = 0;
    MetricReport existing;   // rule-based stand-in
    MetricReport baseline;   // arithmetic mean, no detector
    MetricReport moatplus;   // full system
};

std::vector<SubsetRow> subset_report(std::span<const EvalRow> rows, const EvalConfig& cfg);

/// Full evaluation document: configurations plus subsets, as JSON and as an
/// aligned text table.
struct EvaluationResult {
    std::map<ConfigurationId, MetricReport> configurations;
    std::vector<SubsetRow> subsets;
    double pac_threshold = 0.2;
    std::int64_t n_events = 0;
    std::int64_t n_flagged = 0;

    std::string to_json() const;
    std::string to_table() const;
};

EvaluationResult evaluate(std::span<const PriceEvent> events,
                          std::span<const GroundTruth> truths, const ModelBundle& bundle,
                          const EvalConfig& cfg);

}  // namespace moatplus
