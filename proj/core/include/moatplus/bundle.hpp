#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moatplus/aggregator.hpp"
#include "moatplus/detector.hpp"
#include "moatplus/features.hpp"
#include "moatplus/time.hpp"

namespace moatplus {

inline constexpr int kBundleSchemaVersion = 1;
inline constexpr const char* kEngineVersion = "0.1.0";

/// Everything the scoring path needs, persisted as a directory:
/// manifest.json, detectors/<anchor_name>.json, aggregator.json. The
/// manifest carries per-file checksums; load refuses partial or tampered
/// bundles. Immutable after load.
struct ModelBundle {
    int schema_version = kBundleSchemaVersion;
    std::string bundle_version;  // derived from content checksums
    StandardizationParams standardization;
    FeatureConfig feature_config;       // kernel bandwidth h, log offset c
    std::string kernel = "gaussian";
    double pac_threshold = 0.2;
    double ceiling_multiplier = 1.5;
    std::vector<int> monitored_slots;
    Instant trained_at = 0;
    std::uint64_t seed = 0;

    DetectorRegistry detectors;
    AggregatorModel aggregator;
};

/// Writes the bundle directory, computing checksums and the bundle version.
void save_bundle(ModelBundle& bundle, const std::string& dir);

/// Loads and verifies a bundle directory. Throws ModelBundleError naming the
/// offending file on checksum mismatch, truncation, or version skew.
ModelBundle load_bundle(const std::string& dir);

/// Human-readable manifest summary for `bundle inspect`.
std::string describe_bundle(const ModelBundle& bundle);

}  // namespace moatplus
