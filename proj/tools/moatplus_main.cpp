// Operator CLI: corpus generation, weak labeling, training, evaluation,
// single-event scoring and the HTTP scoring service.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "moatplus/audit.hpp"
#include "moatplus/errors.hpp"
#include "moatplus/evaluation.hpp"
#include "moatplus/event_json.hpp"
#include "moatplus/pipeline.hpp"
#include "moatplus/scoring.hpp"
#include "moatplus/server.hpp"
#include "moatplus/synthetic.hpp"

namespace {

using namespace moatplus;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

GeneratorConfig load_generator_config(const std::string& path, std::uint64_t seed_override,
                                      bool has_seed) {
    GeneratorConfig cfg = path.empty() ? GeneratorConfig{} : GeneratorConfig::from_json(read_text_file(path));
    if (has_seed) cfg.seed = seed_override;
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path, std::uint64_t seed_override,
                              bool has_seed) {
    TrainConfig cfg = path.empty() ? TrainConfig{} : TrainConfig::from_json(read_text_file(path));
    if (has_seed) cfg.seed = seed_override;
    return cfg;
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 const std::string& truth_path, std::uint64_t seed, bool has_seed, double rate) {
    const GeneratorConfig cfg = load_generator_config(config_path, seed, has_seed);
    Catalog catalog = generate_catalog(cfg);
    inject_anomalies(catalog.events, catalog.truths, cfg);

    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write corpus: " + out_path);
    emit_event_stream(catalog.events, rate, out);
    if (!truth_path.empty()) write_truth_file(catalog.truths, truth_path);
    std::cerr << "generated " << catalog.events.size() << " events -> " << out_path << '\n';
    return 0;
}

int cmd_label(const std::string& corpus_path, const std::string& truth_path,
              const std::string& config_path, const std::string& out_path, std::uint64_t seed,
              bool has_seed) {
    const TrainConfig cfg = load_train_config(config_path, seed, has_seed);
    const auto events = read_event_file(corpus_path);
    std::vector<GroundTruth> truths;
    if (!truth_path.empty()) truths = read_truth_file(truth_path);

    const LabelingOutcome labeling = run_labeling(events, truths, cfg);

    nlohmann::json j;
    j["aur_abs_threshold"] = labeling.aur_abs_threshold;
    nlohmann::json slots = nlohmann::json::array();
    for (std::size_t i = 0; i < labeling.slots.size(); ++i) {
        nlohmann::json entry =
            nlohmann::json::parse(labeling.training_sets[i].report.to_json());
        entry["anchor"] = std::string(kAnchorNames[labeling.slots[i]]);
        slots.push_back(std::move(entry));
    }
    j["detector_slots"] = std::move(slots);
    write_text_file(out_path, j.dump(2) + "\n");
    std::cerr << "labeling report -> " << out_path << '\n';
    return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& truth_path,
              const std::string& config_path, const std::string& out_dir,
              const std::string& report_path, std::uint64_t seed, bool has_seed) {
    const TrainConfig cfg = load_train_config(config_path, seed, has_seed);
    const auto events = read_event_file(corpus_path);
    std::vector<GroundTruth> truths;
    if (!truth_path.empty()) truths = read_truth_file(truth_path);

    auto [bundle, report] = train_bundle(events, truths, cfg);
    save_bundle(bundle, out_dir);
    if (!report_path.empty()) write_text_file(report_path, report.to_json() + "\n");
    std::cerr << "bundle " << bundle.bundle_version << " -> " << out_dir << '\n';
    for (const auto& d : report.detectors) {
        std::cerr << "  detector " << kAnchorNames[d.anchor_slot] << ": f1=" << d.f1
                  << " threshold=" << d.threshold << '\n';
    }
    std::cerr << "  aggregator accuracy=" << report.aggregator.validation_accuracy << '\n';
    return 0;
}

int cmd_evaluate(const std::string& corpus_path, const std::string& truth_path,
                 const std::string& bundle_dir, const std::string& config_path,
                 const std::string& out_path) {
    const ModelBundle bundle = load_bundle(bundle_dir);
    EvalConfig cfg;
    cfg.pac_threshold = bundle.pac_threshold;
    cfg.ceiling_multiplier = bundle.ceiling_multiplier;
    if (!config_path.empty()) cfg.apply_json(read_text_file(config_path));
    const auto events = read_event_file(corpus_path);
    const auto truths = read_truth_file(truth_path);
    const EvaluationResult result = evaluate(events, truths, bundle, cfg);
    if (!out_path.empty()) write_text_file(out_path, result.to_json() + "\n");
    std::cout << result.to_table();
    return 0;
}

int cmd_score(const std::string& event_path, const std::string& bundle_dir,
              const std::string& audit_path) {
    const ModelBundle bundle = load_bundle(bundle_dir);
    std::string line;
    if (event_path.empty() || event_path == "-") {
        std::getline(std::cin, line);
    } else {
        line = read_text_file(event_path);
        if (const auto nl = line.find('\n'); nl != std::string::npos) line.resize(nl);
    }
    const PriceEvent event = parse_event(line);
    const ScoreResult result = score(event, bundle);
    std::cout << score_result_to_json(result, bundle.bundle_version) << '\n';
    if (!audit_path.empty()) {
        AuditQueue audit(std::make_unique<FileAuditSink>(audit_path));
        AuditRecord record;
        record.item_id = event.item_id;
        record.ts = event.ts;
        record.event_json = serialize_event(event);
        if (result.status != ScoreStatus::NoAnchors) {
            record.features_json = feature_bundle_to_json(
                compute_features(event, bundle.standardization, bundle.feature_config));
        }
        record.result_json = score_result_to_json(result, bundle.bundle_version);
        record.bundle_version = bundle.bundle_version;
        audit.push(std::move(record));
        audit.drain();
    }
    return 0;
}

int cmd_serve(const std::string& config_path, std::string bundle_dir, std::string bind,
              std::string audit_path) {
    std::size_t audit_capacity = 8192;
    if (!config_path.empty()) {
        const auto j = nlohmann::json::parse(read_text_file(config_path));
        if (bundle_dir.empty() && j.contains("bundle")) {
            bundle_dir = j["bundle"].get<std::string>();
        }
        if (bind.empty() && j.contains("bind")) bind = j["bind"].get<std::string>();
        if (audit_path.empty() && j.contains("audit")) {
            audit_path = j["audit"].get<std::string>();
        }
        if (j.contains("audit_capacity")) audit_capacity = j["audit_capacity"].get<std::size_t>();
    }
    if (bind.empty()) bind = "127.0.0.1:8080";
    // Environment beats both the config file and the flags.
    if (const char* env = std::getenv("MOATPLUS_BUNDLE")) bundle_dir = env;
    if (const char* env = std::getenv("MOATPLUS_BIND")) bind = env;
    if (bundle_dir.empty()) throw ConfigError("serve needs a bundle (flag, config or env)");

    ServerConfig cfg;
    cfg.bundle_path = bundle_dir;
    cfg.audit_path = audit_path;
    cfg.audit_capacity = audit_capacity;
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ConfigError("bind address must be host:port");
    cfg.bind_address = bind.substr(0, colon);
    cfg.port = std::stoi(bind.substr(colon + 1));

    ScoreService service(cfg);
    std::cerr << "serving bundle " << service.bundle_version() << " on " << bind << '\n';
    service.run();
    return 0;
}

int cmd_bundle_inspect(const std::string& bundle_dir) {
    std::cout << describe_bundle(load_bundle(bundle_dir));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"price-anomaly guardrail engine"};
    app.require_subcommand(1);

    std::string config_path, out_path, truth_path, corpus_path, bundle_dir, report_path,
        event_path, audit_path, bind;
    std::uint64_t seed = 0;
    double rate = 0.0;

    auto* generate = app.add_subcommand("generate", "generate a synthetic marketplace corpus");
    generate->add_option("--config", config_path, "generator config JSON");
    generate->add_option("--out", out_path, "corpus output (JSON lines)")->required();
    generate->add_option("--truth", truth_path, "ground-truth output (JSON lines)");
    auto* gen_seed = generate->add_option("--seed", seed, "override config seed");
    generate->add_option("--rate", rate, "paced emission in events/sec (0 = batch)");

    auto* label = app.add_subcommand("label", "run labeling functions, emit coverage report");
    label->add_option("--corpus", corpus_path, "event corpus")->required();
    label->add_option("--truth", truth_path, "generator truth (sharpens calibration)");
    label->add_option("--config", config_path, "train config JSON");
    label->add_option("--out", out_path, "labeling report JSON")->required();
    auto* label_seed = label->add_option("--seed", seed, "override config seed");

    auto* train = app.add_subcommand("train", "train detectors + aggregator into a bundle");
    train->add_option("--corpus", corpus_path, "event corpus")->required();
    train->add_option("--truth", truth_path, "generator truth (sharpens calibration)");
    train->add_option("--config", config_path, "train config JSON");
    train->add_option("--out", bundle_dir, "bundle output directory")->required();
    train->add_option("--report", report_path, "training report JSON");
    auto* train_seed = train->add_option("--seed", seed, "override config seed");

    auto* evaluate = app.add_subcommand("evaluate", "configuration + subset comparison");
    evaluate->add_option("--corpus", corpus_path, "event corpus")->required();
    evaluate->add_option("--truth", truth_path, "generator truth")->required();
    evaluate->add_option("--bundle", bundle_dir, "trained bundle directory")->required();
    evaluate->add_option("--config", config_path, "eval config JSON");
    evaluate->add_option("--out", out_path, "report JSON output");

    auto* score_cmd = app.add_subcommand("score", "score one event from file or stdin");
    score_cmd->add_option("--event", event_path, "event JSON file ('-' = stdin)");
    score_cmd->add_option("--bundle", bundle_dir, "trained bundle directory")->required();
    score_cmd->add_option("--audit", audit_path, "append an audit record here");

    auto* serve = app.add_subcommand("serve", "run the HTTP scoring service");
    serve->add_option("--config", config_path, "service config JSON");
    serve->add_option("--bundle", bundle_dir, "trained bundle directory");
    serve->add_option("--bind", bind, "host:port (default 127.0.0.1:8080)");
    serve->add_option("--audit", audit_path, "audit log path (JSON lines)");

    auto* bundle_cmd = app.add_subcommand("bundle", "bundle utilities");
    auto* inspect = bundle_cmd->add_subcommand("inspect", "print manifest summary");
    inspect->add_option("--bundle", bundle_dir, "bundle directory")->required();
    bundle_cmd->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(config_path, out_path, truth_path, seed, !gen_seed->empty(), rate);
        }
        if (label->parsed()) {
            return cmd_label(corpus_path, truth_path, config_path, out_path, seed,
                             !label_seed->empty());
        }
        if (train->parsed()) {
            return cmd_train(corpus_path, truth_path, config_path, bundle_dir, report_path, seed,
                             !train_seed->empty());
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(corpus_path, truth_path, bundle_dir, config_path, out_path);
        }
        if (score_cmd->parsed()) return cmd_score(event_path, bundle_dir, audit_path);
        if (serve->parsed()) return cmd_serve(config_path, bundle_dir, bind, audit_path);
        if (bundle_cmd->parsed() && inspect->parsed()) return cmd_bundle_inspect(bundle_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
