#include "moatplus/scoring.hpp"

#include <json.hpp>

#include "moatplus/errors.hpp"

namespace moatplus {

using nlohmann::json;

ScoreResult score(const PriceEvent& event, const ModelBundle& bundle) {
    ScoreResult result;
    if (validate_scoreable(event) == Scoreability::NoAnchors) {
        result.status = ScoreStatus::NoAnchors;
        return result;
    }

    const FeatureBundle features =
        compute_features(event, bundle.standardization, bundle.feature_config);
    result.anomaly_flags = detect(bundle.detectors, features);

    const FeatureRow agg_features = aggregator_features(event, features);
    const auto weighted =
        weight_anchors(bundle.aggregator, agg_features, event.anchors, result.anomaly_flags);
    if (!weighted) {
        result.status = ScoreStatus::NoReliableAnchor;
        return result;
    }

    for (const auto& w : *weighted) result.weights[w.slot] = w.weight;
    result.optimal_anchor = optimal_anchor(*weighted);
    result.ceiling_price = ceiling_price(*result.optimal_anchor, bundle.ceiling_multiplier);
    result.status = ScoreStatus::Ok;
    return result;
}

std::string score_result_to_json(const ScoreResult& result, const std::string& bundle_version,
                                 long long latency_micros) {
    json j;
    j["optimal_anchor"] = result.optimal_anchor ? json(*result.optimal_anchor) : json(nullptr);
    json weights = json::object(), flags = json::object();
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        weights[std::string(kAnchorNames[i])] = result.weights[i];
        flags[std::string(kAnchorNames[i])] = result.anomaly_flags[i];
    }
    j["weights"] = std::move(weights);
    j["anomaly_flags"] = std::move(flags);
    j["ceiling_price"] = result.ceiling_price ? json(*result.ceiling_price) : json(nullptr);
    j["status"] = std::string(to_string(result.status));
    if (!bundle_version.empty()) j["bundle_version"] = bundle_version;
    if (latency_micros > 0) j["latency_micros"] = latency_micros;
    return j.dump();
}

ScoreResult score_result_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed score result: ") + e.what());
    }
    ScoreResult result;
    if (!j.at("optimal_anchor").is_null()) result.optimal_anchor = j["optimal_anchor"].get<double>();
    if (!j.at("ceiling_price").is_null()) result.ceiling_price = j["ceiling_price"].get<double>();
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") result.status = ScoreStatus::Ok;
    else if (status == "no_reliable_anchor") result.status = ScoreStatus::NoReliableAnchor;
    else if (status == "no_anchors") result.status = ScoreStatus::NoAnchors;
    else throw ParseError("unknown score status '" + status + "'");
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        const std::string name(kAnchorNames[i]);
        result.weights[i] = j.at("weights").at(name).get<double>();
        result.anomaly_flags[i] = j.at("anomaly_flags").at(name).get<bool>();
    }
    return result;
}

}  // namespace moatplus
