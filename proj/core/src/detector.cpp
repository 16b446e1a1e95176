#include "moatplus/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "moatplus/errors.hpp"
#include "moatplus/metrics.hpp"
#include "moatplus/rng.hpp"

namespace moatplus {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

double opt_cell(const std::optional<double>& v) { return v ? *v : kMissing; }

double f1_at(std::span<const double> probs, std::span<const int> labels, double threshold) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool flag = probs[i] >= threshold;
        tp += flag && labels[i] == 1;
        fp += flag && labels[i] == 0;
        fn += !flag && labels[i] == 1;
    }
    if (tp == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * p * r / (p + r);
}

}  // namespace

std::vector<std::string> detector_feature_schema() {
    return {"markup",       "density",    "anchor_count", "hist_min",
            "hist_median",  "hist_max",   "hist_std",     "hist_low_confidence",
            "offer_mean",   "offer_cv",   "offer_range",  "offer_count"};
}

FeatureRow detector_features(const FeatureBundle& bundle, int slot) {
    if (!bundle.markups.m[slot]) {
        throw FeatureError("detector features require the anchor at slot " +
                           std::to_string(slot));
    }
    const auto& hist = bundle.history[slot];
    FeatureRow row;
    row.reserve(12);
    row.push_back(*bundle.markups.m[slot]);
    row.push_back(opt_cell(bundle.density.density[slot]));
    row.push_back(static_cast<double>(bundle.density.anchor_count));
    row.push_back(opt_cell(hist.cleansed_min));
    row.push_back(opt_cell(hist.cleansed_median));
    row.push_back(opt_cell(hist.cleansed_max));
    row.push_back(opt_cell(hist.cleansed_std));
    row.push_back(hist.low_confidence ? 1.0 : 0.0);
    row.push_back(opt_cell(bundle.offers.mean));
    row.push_back(opt_cell(bundle.offers.cv));
    row.push_back(opt_cell(bundle.offers.range));
    row.push_back(static_cast<double>(bundle.offers.count));
    return row;
}

double select_threshold(std::span<const double> probs, std::span<const int> labels) {
    if (probs.empty() || probs.size() != labels.size()) {
        throw TrainError("threshold selection needs matching probs/labels");
    }
    bool has_pos = false, has_neg = false;
    for (int l : labels) {
        has_pos |= l == 1;
        has_neg |= l == 0;
    }
    if (!has_pos || !has_neg) {
        throw TrainError("threshold selection requires both classes");
    }

    std::vector<double> distinct(probs.begin(), probs.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    if (distinct.size() == 1) return distinct[0];  // degenerate scores: flag everything

    double best_threshold = 0.0, best_f1 = -1.0;
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        const double t = distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0;
        const double f1 = f1_at(probs, labels, t);
        if (f1 > best_f1) {  // strict: ties keep the lower threshold
            best_f1 = f1;
            best_threshold = t;
        }
    }
    return best_threshold;
}

std::pair<DetectorModel, DetectorReport> train_detector(std::span<const LabeledRow> rows,
                                                        int slot,
                                                        const DetectorTrainConfig& cfg,
                                                        std::uint64_t seed, Instant trained_at) {
    std::int64_t n_anomalous = 0;
    for (const auto& row : rows) n_anomalous += row.label == BinaryLabel::Anomalous;
    if (rows.empty() || n_anomalous == 0 ||
        n_anomalous == static_cast<std::int64_t>(rows.size())) {
        throw TrainError("detector training needs both classes for slot " + std::to_string(slot));
    }

    // Seeded shuffle, then an 80/20-style tail split for validation.
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(slot));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(cfg.validation_fraction * rows.size()));
    if (n_val == 0 || n_val >= rows.size()) {
        throw TrainError("validation split is empty for slot " + std::to_string(slot));
    }
    const std::size_t n_train = rows.size() - n_val;

    Dataset train;
    train.n_classes = 2;
    train.feature_names = detector_feature_schema();
    train.rows.reserve(n_train);
    train.labels.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        const auto& row = rows[order[i]];
        train.rows.push_back(detector_features(row.features, slot));
        train.labels.push_back(row.label == BinaryLabel::Anomalous ? 1 : 0);
    }
    bool train_has_pos = false, train_has_neg = false;
    for (int l : train.labels) {
        train_has_pos |= l == 1;
        train_has_neg |= l == 0;
    }
    if (!train_has_pos || !train_has_neg) {
        throw TrainError("training split single-class for slot " + std::to_string(slot));
    }

    TreeConfig tree_cfg = cfg.tree;
    if (tree_cfg.class_weights.empty()) {
        tree_cfg.class_weights = balanced_class_weights(train.labels, 2);
    }
    DecisionTree tree = train_decision_tree(train, tree_cfg, seed);

    std::vector<double> val_probs;
    std::vector<int> val_labels;
    val_probs.reserve(n_val);
    val_labels.reserve(n_val);
    for (std::size_t i = n_train; i < rows.size(); ++i) {
        const auto& row = rows[order[i]];
        val_probs.push_back(tree.predict_proba(detector_features(row.features, slot))[1]);
        val_labels.push_back(row.label == BinaryLabel::Anomalous ? 1 : 0);
    }
    const double threshold = select_threshold(val_probs, val_labels);

    DetectorModel model;
    model.anchor_slot = slot;
    model.model = Classifier(std::move(tree));
    model.threshold = threshold;
    model.feature_schema = detector_feature_schema();
    model.trained_at = trained_at;
    model.n_anomalous = n_anomalous;
    model.n_normal = static_cast<std::int64_t>(rows.size()) - n_anomalous;

    DetectorReport report;
    report.anchor_slot = slot;
    report.threshold = threshold;
    std::vector<int> val_flags(val_probs.size());
    for (std::size_t i = 0; i < val_probs.size(); ++i) val_flags[i] = val_probs[i] >= threshold;
    const Prf prf = precision_recall_f1(val_flags, val_labels);
    report.precision = prf.precision;
    report.recall = prf.recall;
    report.f1 = prf.f1;
    report.pr_auc = pr_auc(val_probs, val_labels);
    report.n_train = static_cast<std::int64_t>(n_train);
    report.n_validation = static_cast<std::int64_t>(n_val);
    report.n_anomalous = n_anomalous;
    report.inverted_scores = report.pr_auc <
        static_cast<double>(std::count(val_labels.begin(), val_labels.end(), 1)) /
            static_cast<double>(val_labels.size());
    return {std::move(model), report};
}

std::array<bool, kAnchorArity> detect(const DetectorRegistry& registry,
                                      const FeatureBundle& bundle) {
    std::array<bool, kAnchorArity> flags{};
    for (const auto& [slot, detector] : registry.detectors) {
        if (!bundle.markups.m[slot]) continue;  // absent anchors are never flagged
        if (detector.model.feature_names() != detector.feature_schema) {
            throw SchemaError("detector model schema drifted for slot " + std::to_string(slot));
        }
        const auto probs = detector.model.predict_proba(detector_features(bundle, slot));
        flags[slot] = probs[1] >= detector.threshold;
    }
    return flags;
}

}  // namespace moatplus
