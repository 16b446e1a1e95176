#include <doctest.h>

#include <sstream>

#include "moatplus/errors.hpp"
#include "moatplus/event_json.hpp"
#include "moatplus/rng.hpp"
#include "moatplus/synthetic.hpp"
#include "moatplus/weak_supervision.hpp"

#include "test_util.hpp"

using namespace moatplus;

namespace {

PriceEvent event_with(std::optional<double> cmp, std::optional<double> aur) {
    PriceEvent e = testutil::basic_event();
    e.anchors.values[0] = cmp;
    e.aur = aur;
    return e;
}

std::vector<LabeledRow> rows_with_full_anchors(int n, std::uint64_t seed) {
    std::vector<LabeledRow> rows;
    Rng rng(seed);
    const auto params = testutil::identity_params();
    for (int i = 0; i < n; ++i) {
        PriceEvent e = testutil::basic_event();
        e.item_id = "row-" + std::to_string(i);
        for (std::size_t s = 0; s < kAnchorArity; ++s) e.anchors.values[s] = rng.uniform(5, 50);
        LabeledRow row;
        row.event = e;
        row.features = compute_features(e, params, FeatureConfig{});
        row.label = BinaryLabel::Normal;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string masked_fingerprint(const std::vector<LabeledRow>& rows) {
    std::ostringstream ss;
    for (const auto& r : rows) ss << serialize_event(r.event) << '\n';
    return std::move(ss).str();
}

}  // namespace

TEST_SUITE("weak_supervision") {

TEST_CASE("absolute AUR distance labeling function") {
    CHECK(lf_high_distance_from_aur(event_with(100.0, 20.0), 50.0).verdict ==
          LfVerdict::Anomalous);
    CHECK(lf_high_distance_from_aur(event_with(20.0, 20.0), 50.0).verdict == LfVerdict::Normal);
    CHECK(lf_high_distance_from_aur(event_with(100.0, std::nullopt), 50.0).verdict ==
          LfVerdict::Abstain);
    CHECK(lf_high_distance_from_aur(event_with(std::nullopt, 20.0), 50.0).verdict ==
          LfVerdict::Abstain);
}

TEST_CASE("relative AUR distance labeling function") {
    PriceEvent e = testutil::basic_event();
    e.aur = 10.0;
    e.anchors.values[2] = 50.0;
    CHECK(lf_relative_distance(e, 2, 2.0).verdict == LfVerdict::Anomalous);  // ratio 4
    e.anchors.values[2] = 11.0;
    CHECK(lf_relative_distance(e, 2, 2.0).verdict == LfVerdict::Normal);  // ratio 0.1
    e.anchors.values[2] = std::nullopt;
    CHECK(lf_relative_distance(e, 2, 2.0).verdict == LfVerdict::Abstain);
}

TEST_CASE("history band labeling function") {
    PriceEvent e = testutil::basic_event();
    for (double p : {20.0, 19.5, 20.0, 19.8, 20.0}) {
        e.history[0].push_back({e.ts - 86400, p});
    }
    const auto params = testutil::identity_params();

    e.anchors.values[0] = 100.0;
    auto bundle = compute_features(e, params, FeatureConfig{});
    CHECK(lf_history_band(e, bundle, 0, 3.0).verdict == LfVerdict::Anomalous);  // 100 > 60

    e.anchors.values[0] = *bundle.history[0].cleansed_max;  // boundary stays inside the band
    bundle = compute_features(e, params, FeatureConfig{});
    CHECK(lf_history_band(e, bundle, 0, 3.0).verdict == LfVerdict::Normal);

    e.history[0].resize(2);  // low confidence
    bundle = compute_features(e, params, FeatureConfig{});
    CHECK(lf_history_band(e, bundle, 0, 3.0).verdict == LfVerdict::Abstain);
}

TEST_CASE("label resolution is an anomalous-wins union") {
    auto out = [](LfVerdict v) { return LabelingFunctionOutput{v, "lf"}; };
    std::vector<LabelingFunctionOutput> votes{out(LfVerdict::Anomalous), out(LfVerdict::Abstain)};
    CHECK(resolve_labels(votes) == ResolvedLabel::Anomalous);
    votes = {out(LfVerdict::Normal), out(LfVerdict::Normal)};
    CHECK(resolve_labels(votes) == ResolvedLabel::Normal);
    votes = {out(LfVerdict::Abstain), out(LfVerdict::Abstain)};
    CHECK(resolve_labels(votes) == ResolvedLabel::Unlabeled);
}

TEST_CASE("label resolution is monotone in anomalous votes") {
    auto out = [](LfVerdict v) { return LabelingFunctionOutput{v, "lf"}; };
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<LabelingFunctionOutput> votes;
        const int n = 1 + static_cast<int>(rng.below(5));
        for (int i = 0; i < n; ++i) {
            const auto pick = rng.below(3);
            votes.push_back(out(pick == 0   ? LfVerdict::Anomalous
                                : pick == 1 ? LfVerdict::Normal
                                            : LfVerdict::Abstain));
        }
        const auto before = resolve_labels(votes);
        votes.push_back(out(LfVerdict::Anomalous));
        CHECK(resolve_labels(votes) == ResolvedLabel::Anomalous);
        if (before == ResolvedLabel::Anomalous) {
            CHECK(resolve_labels(votes) == before);
        }
    }
}

TEST_CASE("masking at the observed rates is a no-op") {
    auto rows = rows_with_full_anchors(2000, 5);
    SparsityProfile profile;  // all ones == observed
    const auto before = masked_fingerprint(rows);
    const auto masked =
        mask_anchors(std::move(rows), profile, 11, testutil::identity_params(), FeatureConfig{});
    CHECK(masked_fingerprint(masked) == before);
}

TEST_CASE("masking converges to the target rates within one percent") {
    auto rows = rows_with_full_anchors(10000, 6);
    SparsityProfile profile;
    profile.presence_rate = {0.9, 0.4, 0.7, 0.55, 0.8};
    const auto masked =
        mask_anchors(std::move(rows), profile, 12, testutil::identity_params(), FeatureConfig{});
    std::array<double, kAnchorArity> realized{};
    for (const auto& r : masked) {
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            realized[s] += r.event.anchors.values[s].has_value();
        }
    }
    for (std::size_t s = 0; s < kAnchorArity; ++s) {
        realized[s] /= masked.size();
        CHECK(std::abs(realized[s] - profile.presence_rate[s]) < 0.01);
    }
}

TEST_CASE("masking never adds anchors and keeps at least one") {
    auto rows = rows_with_full_anchors(500, 7);
    Rng rng(7);
    for (auto& r : rows) {  // thin some anchors out first
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            if (rng.bernoulli(0.4)) r.event.anchors.values[s] = std::nullopt;
        }
        if (!r.event.anchors.any_present()) r.event.anchors.values[0] = 10.0;
        r.features = compute_features(r.event, testutil::identity_params(), FeatureConfig{});
    }
    const auto original = rows;
    SparsityProfile profile;
    profile.presence_rate = {0.3, 0.3, 0.3, 0.3, 0.3};
    const auto masked =
        mask_anchors(std::move(rows), profile, 13, testutil::identity_params(), FeatureConfig{});
    for (std::size_t i = 0; i < masked.size(); ++i) {
        CHECK(masked[i].event.anchors.any_present());
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            if (masked[i].event.anchors.values[s]) {
                CHECK(original[i].event.anchors.values[s].has_value());
            }
        }
        // Density features were recomputed from the surviving anchors.
        CHECK(masked[i].features.density.anchor_count ==
              masked[i].event.anchors.present_count());
    }
}

TEST_CASE("a row with a single present anchor is unchanged") {
    std::vector<LabeledRow> rows;
    PriceEvent e = testutil::basic_event();
    LabeledRow row;
    row.event = e;
    row.features = compute_features(e, testutil::identity_params(), FeatureConfig{});
    rows.push_back(row);
    SparsityProfile profile;
    profile.presence_rate = {0.01, 1, 1, 1, 1};
    const auto masked =
        mask_anchors(std::move(rows), profile, 21, testutil::identity_params(), FeatureConfig{});
    CHECK(masked[0].event.anchors.present_count() == 1);
    CHECK(*masked[0].event.anchors.values[0] == 10.0);
}

TEST_CASE("masking is deterministic per seed and protects the target slot") {
    auto rows = rows_with_full_anchors(300, 8);
    SparsityProfile profile;
    profile.presence_rate = {0.5, 0.5, 0.5, 0.5, 0.5};
    MaskingOptions opts;
    opts.protected_slot = 2;
    const auto a = mask_anchors(rows, profile, 31, testutil::identity_params(), FeatureConfig{},
                                opts);
    const auto b = mask_anchors(rows, profile, 31, testutil::identity_params(), FeatureConfig{},
                                opts);
    CHECK(masked_fingerprint(a) == masked_fingerprint(b));
    for (const auto& r : a) CHECK(r.event.anchors.values[2].has_value());

    const auto c = mask_anchors(rows, profile, 32, testutil::identity_params(), FeatureConfig{},
                                opts);
    CHECK(masked_fingerprint(a) != masked_fingerprint(c));
}

TEST_CASE("an unreachable profile raises MaskingError") {
    // Every slot observed at ~50%, every target above it: masking cannot add
    // anchors, so no slot can move toward the profile.
    auto rows = rows_with_full_anchors(200, 9);
    Rng rng(9);
    for (auto& r : rows) {
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            if (rng.bernoulli(0.5)) r.event.anchors.values[s] = std::nullopt;
        }
        if (!r.event.anchors.any_present()) r.event.anchors.values[1] = 5.0;
        r.features = compute_features(r.event, testutil::identity_params(), FeatureConfig{});
    }
    SparsityProfile profile;
    profile.presence_rate = {0.99, 0.99, 0.99, 0.99, 0.99};
    CHECK_THROWS_AS(mask_anchors(std::move(rows), profile, 41, testutil::identity_params(),
                                 FeatureConfig{}),
                    MaskingError);

    // A profile matching one slot's observed rate stays legal.
    auto rows2 = rows_with_full_anchors(50, 10);
    SparsityProfile mixed;
    mixed.presence_rate = {1.0, 0.99, 0.99, 0.99, 0.99};  // slot 0 at its observed rate
    CHECK_NOTHROW(mask_anchors(std::move(rows2), mixed, 42, testutil::identity_params(),
                               FeatureConfig{}));
}

TEST_CASE("training-set pipeline labels injected anomalies at roughly their rate") {
    GeneratorConfig cfg;
    cfg.n_items = 10000;
    cfg.n_categories = 6;
    cfg.seed = 77;
    cfg.anomaly_rate = {0.01, 0, 0, 0, 0};
    Catalog catalog = generate_catalog(cfg);
    inject_anomalies(catalog.events, catalog.truths, cfg);

    std::vector<std::array<std::optional<double>, kAnchorArity>> ratios;
    for (const auto& e : catalog.events) {
        if (!e.offers.empty() && e.anchors.any_present()) {
            ratios.push_back(markup_ratios(e.anchors, median(e.offers), 1.0));
        }
    }
    const auto params = fit_standardization(ratios, 100, "ws-test");

    std::vector<LabelingFunction> lfs;
    lfs.push_back({"relative_distance", [](const PriceEvent& e, const FeatureBundle&) {
                       return lf_relative_distance(e, 0, 2.0).verdict;
                   }});
    lfs.push_back({"history_band", [](const PriceEvent& e, const FeatureBundle& f) {
                       return lf_history_band(e, f, 0, 3.0).verdict;
                   }});

    SparsityProfile profile = cfg.presence_profile;
    const auto training =
        build_training_set(catalog.events, lfs, profile, 55, 0, params, FeatureConfig{});
    CHECK(training.rows.size() > 5000);
    const double rate =
        static_cast<double>(training.report.n_anomalous) / training.report.n_labeled;
    CHECK(rate >= 0.005);
    CHECK(rate <= 0.02);

    // Same seed and inputs -> byte-identical output.
    const auto again =
        build_training_set(catalog.events, lfs, profile, 55, 0, params, FeatureConfig{});
    CHECK(masked_fingerprint(training.rows) == masked_fingerprint(again.rows));

    // Report is well-formed JSON with both functions covered.
    const auto report_json = training.report.to_json();
    CHECK(report_json.find("relative_distance") != std::string::npos);
    CHECK(report_json.find("history_band") != std::string::npos);

    CHECK_THROWS_AS(build_training_set(catalog.events, {}, profile, 55, 0, params,
                                       FeatureConfig{}),
                    PipelineError);
}

}  // TEST_SUITE
