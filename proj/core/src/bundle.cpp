#include "moatplus/bundle.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "moatplus/errors.hpp"
#include "moatplus/rng.hpp"

namespace moatplus {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelBundleError("missing bundle file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write bundle file: " + path.string());
    out << bytes;
    if (!out) throw IoError("bundle file write failed: " + path.string());
}

std::string checksum_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return std::string(buf);
}

std::string detector_filename(int slot) {
    return "detectors/" + std::string(kAnchorNames[slot]) + ".json";
}

json detector_to_json(const DetectorModel& d) {
    json j;
    j["anchor_slot"] = d.anchor_slot;
    j["threshold"] = d.threshold;
    j["feature_schema"] = d.feature_schema;
    j["trained_at"] = format_iso8601(d.trained_at);
    j["n_normal"] = d.n_normal;
    j["n_anomalous"] = d.n_anomalous;
    j["model"] = json::parse(serialize_model(d.model));
    return j;
}

DetectorModel detector_from_json(const json& j) {
    DetectorModel d;
    try {
        d.anchor_slot = j.at("anchor_slot").get<int>();
        d.threshold = j.at("threshold").get<double>();
        d.feature_schema = j.at("feature_schema").get<std::vector<std::string>>();
        d.trained_at = parse_iso8601(j.at("trained_at").get<std::string>());
        d.n_normal = j.at("n_normal").get<std::int64_t>();
        d.n_anomalous = j.at("n_anomalous").get<std::int64_t>();
        d.model = deserialize_model(j.at("model").dump());
    } catch (const json::exception& e) {
        throw ModelBundleError(std::string("detector document malformed: ") + e.what());
    }
    if (!(d.threshold > 0.0) || !(d.threshold < 1.0)) {
        throw ModelBundleError("detector threshold must lie in (0, 1)");
    }
    bool has_density = false, has_count = false;
    for (const auto& f : d.feature_schema) {
        has_density |= f == "density";
        has_count |= f == "anchor_count";
    }
    if (!has_density || !has_count) {
        throw ModelBundleError("detector schema must pair density with anchor_count");
    }
    return d;
}

}  // namespace

void save_bundle(ModelBundle& bundle, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root / "detectors");

    std::map<std::string, std::string> files;  // relative path -> bytes
    for (const auto& [slot, detector] : bundle.detectors.detectors) {
        files[detector_filename(slot)] = detector_to_json(detector).dump(2);
    }
    files["aggregator.json"] =
        json{{"feature_schema", bundle.aggregator.feature_schema},
             {"model", json::parse(serialize_model(bundle.aggregator.forest))}}
            .dump(2);

    json manifest;
    manifest["schema_version"] = bundle.schema_version;
    manifest["engine_version"] = kEngineVersion;
    std::vector<std::string> names;
    for (auto n : kAnchorNames) names.emplace_back(n);
    manifest["anchor_names"] = names;
    manifest["kernel"] = bundle.kernel;
    manifest["bandwidth"] = bundle.feature_config.bandwidth;
    manifest["log_offset"] = bundle.feature_config.log_offset;
    manifest["pac_threshold"] = bundle.pac_threshold;
    manifest["ceiling_multiplier"] = bundle.ceiling_multiplier;
    manifest["monitored_slots"] = bundle.monitored_slots;
    manifest["trained_at"] = format_iso8601(bundle.trained_at);
    manifest["seed"] = bundle.seed;
    manifest["standardization"] = json{{"means", bundle.standardization.means},
                                       {"stds", bundle.standardization.stds},
                                       {"fitted_on", bundle.standardization.fitted_on}};
    json checksums = json::object();
    std::uint64_t combined = 0xCBF29CE484222325ULL;
    for (const auto& [name, bytes] : files) {
        checksums[name] = checksum_hex(bytes);
        combined = fnv1a64(std::string(name) + checksum_hex(bytes) +
                           std::to_string(combined));
    }
    manifest["checksums"] = std::move(checksums);
    char vbuf[17];
    std::snprintf(vbuf, sizeof(vbuf), "%016llx", static_cast<unsigned long long>(combined));
    bundle.bundle_version = vbuf;
    manifest["bundle_version"] = bundle.bundle_version;

    for (const auto& [name, bytes] : files) write_file(root / name, bytes);
    write_file(root / "manifest.json", manifest.dump(2));
}

ModelBundle load_bundle(const std::string& dir) {
    const fs::path root(dir);
    json manifest;
    try {
        manifest = json::parse(read_file(root / "manifest.json"));
    } catch (const json::exception& e) {
        throw ModelBundleError(std::string("manifest.json unreadable: ") + e.what());
    }

    ModelBundle bundle;
    try {
        bundle.schema_version = manifest.at("schema_version").get<int>();
        if (bundle.schema_version > kBundleSchemaVersion) {
            throw ModelBundleError("bundle schema version " +
                                   std::to_string(bundle.schema_version) +
                                   " is ahead of this engine");
        }
        bundle.bundle_version = manifest.at("bundle_version").get<std::string>();
        bundle.kernel = manifest.at("kernel").get<std::string>();
        bundle.feature_config.bandwidth = manifest.at("bandwidth").get<double>();
        bundle.feature_config.log_offset = manifest.at("log_offset").get<double>();
        bundle.pac_threshold = manifest.at("pac_threshold").get<double>();
        bundle.ceiling_multiplier = manifest.at("ceiling_multiplier").get<double>();
        bundle.monitored_slots = manifest.at("monitored_slots").get<std::vector<int>>();
        bundle.trained_at = parse_iso8601(manifest.at("trained_at").get<std::string>());
        bundle.seed = manifest.at("seed").get<std::uint64_t>();
        const auto& st = manifest.at("standardization");
        const auto means = st.at("means").get<std::vector<double>>();
        const auto stds = st.at("stds").get<std::vector<double>>();
        if (means.size() != kAnchorArity || stds.size() != kAnchorArity) {
            throw ModelBundleError("standardization arity mismatch");
        }
        std::copy(means.begin(), means.end(), bundle.standardization.means.begin());
        std::copy(stds.begin(), stds.end(), bundle.standardization.stds.begin());
        bundle.standardization.fitted_on = st.value("fitted_on", std::string{});
        for (double s : bundle.standardization.stds) {
            if (!(s > 0.0)) throw ModelBundleError("standardization stds must be positive");
        }

        const auto& checksums = manifest.at("checksums");
        for (const auto& [name, expected] : checksums.items()) {
            const std::string bytes = read_file(root / name);
            if (checksum_hex(bytes) != expected.get<std::string>()) {
                throw ModelBundleError("checksum mismatch for bundle file: " + name);
            }
            if (name == "aggregator.json") {
                const json agg = json::parse(bytes);
                bundle.aggregator.feature_schema =
                    agg.at("feature_schema").get<std::vector<std::string>>();
                bundle.aggregator.forest = deserialize_model(agg.at("model").dump());
            } else {
                DetectorModel d = detector_from_json(json::parse(bytes));
                bundle.detectors.detectors.emplace(d.anchor_slot, std::move(d));
            }
        }
    } catch (const json::exception& e) {
        throw ModelBundleError(std::string("manifest fields malformed: ") + e.what());
    }

    if (bundle.aggregator.feature_schema.empty()) {
        throw ModelBundleError("bundle is missing aggregator.json");
    }
    for (int slot : bundle.monitored_slots) {
        if (!bundle.detectors.detectors.contains(slot)) {
            throw ModelBundleError("bundle is missing detector for slot " + std::to_string(slot));
        }
    }
    return bundle;
}

std::string describe_bundle(const ModelBundle& bundle) {
    std::ostringstream out;
    out << "bundle_version: " << bundle.bundle_version << '\n'
        << "schema_version: " << bundle.schema_version << '\n'
        << "trained_at:     " << format_iso8601(bundle.trained_at) << '\n'
        << "seed:           " << bundle.seed << '\n'
        << "kernel:         " << bundle.kernel << " (h=" << bundle.feature_config.bandwidth
        << ", c=" << bundle.feature_config.log_offset << ")\n"
        << "pac_threshold:  " << bundle.pac_threshold << '\n'
        << "ceiling_mult:   " << bundle.ceiling_multiplier << '\n';
    out << "detectors:\n";
    for (const auto& [slot, d] : bundle.detectors.detectors) {
        out << "  " << kAnchorNames[slot] << " threshold=" << d.threshold
            << " n_normal=" << d.n_normal << " n_anomalous=" << d.n_anomalous << '\n';
    }
    out << "aggregator:     " << (bundle.aggregator.forest.is_forest()
                                      ? bundle.aggregator.forest.forest().trees.size()
                                      : 1)
        << " trees\n";
    return std::move(out).str();
}

}  // namespace moatplus
