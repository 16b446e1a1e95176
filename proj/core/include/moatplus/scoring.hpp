#pragma once

#include <string>

#include "moatplus/bundle.hpp"
#include "moatplus/types.hpp"

namespace moatplus {

/// Orchestrates feature derivation, per-anchor detection and anchor
/// weighting for one event against a loaded bundle. Pure: identical
/// (event, bundle) pairs produce identical results.
ScoreResult score(const PriceEvent& event, const ModelBundle& bundle);

/// ScoreResult as reported over the wire: weights and flags keyed by anchor
/// name; optional fields null when absent. latency_micros <= 0 is omitted.
std::string score_result_to_json(const ScoreResult& result, const std::string& bundle_version,
                                 long long latency_micros = 0);

ScoreResult score_result_from_json(const std::string& text);

}  // namespace moatplus
