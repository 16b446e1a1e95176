#include "moatplus/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "moatplus/errors.hpp"
#include "moatplus/event_json.hpp"
#include "moatplus/rng.hpp"

namespace moatplus {

using nlohmann::json;

std::string_view to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::DigitShift10x: return "digit_shift_10x";
        case AnomalyKind::DigitShift100x: return "digit_shift_100x";
        case AnomalyKind::UniformFactor: return "uniform_factor";
    }
    return "unknown";
}

namespace {

AnomalyKind anomaly_kind_from_string(const std::string& s) {
    if (s == "digit_shift_10x") return AnomalyKind::DigitShift10x;
    if (s == "digit_shift_100x") return AnomalyKind::DigitShift100x;
    if (s == "uniform_factor") return AnomalyKind::UniformFactor;
    throw ParseError("unknown anomaly kind '" + s + "'");
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

template <std::size_t N>
void read_array_if(const json& j, const char* key, std::array<double, N>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        const auto v = it->get<std::vector<double>>();
        if (v.size() != N) {
            throw ConfigError(std::string("config field '") + key + "' must have " +
                              std::to_string(N) + " entries");
        }
        std::copy(v.begin(), v.end(), out.begin());
    }
}

}  // namespace

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("unreadable generator config: ") + e.what());
    }
    GeneratorConfig cfg;
    read_if(j, "n_items", cfg.n_items);
    read_if(j, "n_categories", cfg.n_categories);
    read_if(j, "seed", cfg.seed);
    read_if(j, "price_mu_lo", cfg.price_mu_lo);
    read_if(j, "price_mu_hi", cfg.price_mu_hi);
    read_if(j, "price_sigma", cfg.price_sigma);
    read_array_if(j, "anchor_bias", cfg.anchor_bias);
    read_array_if(j, "anchor_noise_sigma", cfg.anchor_noise_sigma);
    read_if(j, "reliable_noise_sigma", cfg.reliable_noise_sigma);
    read_if(j, "reliable_slot_pool", cfg.reliable_slot_pool);
    read_array_if(j, "presence_rate", cfg.presence_profile.presence_rate);
    read_if(j, "history_presence", cfg.history_presence);
    read_if(j, "history_days", cfg.history_days);
    read_if(j, "history_noise_sigma", cfg.history_noise_sigma);
    read_if(j, "history_drift", cfg.history_drift);
    read_if(j, "aur_coverage", cfg.aur_coverage);
    read_if(j, "aur_noise_sigma", cfg.aur_noise_sigma);
    read_if(j, "offers_min", cfg.offers_min);
    read_if(j, "offers_max", cfg.offers_max);
    read_if(j, "offer_noise_sigma", cfg.offer_noise_sigma);
    read_if(j, "offer_price_rate", cfg.offer_price_rate);
    read_if(j, "offer_price_noise_sigma", cfg.offer_price_noise_sigma);
    read_if(j, "offer_anomaly_rate", cfg.offer_anomaly_rate);
    read_if(j, "offer_anomaly_lo", cfg.offer_anomaly_lo);
    read_if(j, "offer_anomaly_hi", cfg.offer_anomaly_hi);
    read_array_if(j, "anomaly_rate", cfg.anomaly_rate);
    read_if(j, "anomaly_weight_shift10", cfg.anomaly_weight_shift10);
    read_if(j, "anomaly_weight_shift100", cfg.anomaly_weight_shift100);
    read_if(j, "anomaly_weight_uniform", cfg.anomaly_weight_uniform);
    read_if(j, "anomaly_uniform_lo", cfg.anomaly_uniform_lo);
    read_if(j, "anomaly_uniform_hi", cfg.anomaly_uniform_hi);
    if (auto it = j.find("base_ts"); it != j.end() && it->is_string()) {
        cfg.base_ts = parse_iso8601(it->get<std::string>());
    }
    cfg.validate();
    return cfg;
}

std::string GeneratorConfig::to_json() const {
    json j;
    j["n_items"] = n_items;
    j["n_categories"] = n_categories;
    j["seed"] = seed;
    j["price_mu_lo"] = price_mu_lo;
    j["price_mu_hi"] = price_mu_hi;
    j["price_sigma"] = price_sigma;
    j["anchor_bias"] = anchor_bias;
    j["anchor_noise_sigma"] = anchor_noise_sigma;
    j["reliable_noise_sigma"] = reliable_noise_sigma;
    j["reliable_slot_pool"] = reliable_slot_pool;
    j["presence_rate"] = presence_profile.presence_rate;
    j["history_presence"] = history_presence;
    j["history_days"] = history_days;
    j["history_noise_sigma"] = history_noise_sigma;
    j["history_drift"] = history_drift;
    j["aur_coverage"] = aur_coverage;
    j["aur_noise_sigma"] = aur_noise_sigma;
    j["offers_min"] = offers_min;
    j["offers_max"] = offers_max;
    j["offer_noise_sigma"] = offer_noise_sigma;
    j["offer_price_rate"] = offer_price_rate;
    j["offer_price_noise_sigma"] = offer_price_noise_sigma;
    j["offer_anomaly_rate"] = offer_anomaly_rate;
    j["offer_anomaly_lo"] = offer_anomaly_lo;
    j["offer_anomaly_hi"] = offer_anomaly_hi;
    j["anomaly_rate"] = anomaly_rate;
    j["anomaly_weight_shift10"] = anomaly_weight_shift10;
    j["anomaly_weight_shift100"] = anomaly_weight_shift100;
    j["anomaly_weight_uniform"] = anomaly_weight_uniform;
    j["anomaly_uniform_lo"] = anomaly_uniform_lo;
    j["anomaly_uniform_hi"] = anomaly_uniform_hi;
    j["base_ts"] = format_iso8601(base_ts);
    return j.dump(2);
}

void GeneratorConfig::validate() const {
    if (n_items <= 0) throw ConfigError("n_items must be positive");
    if (n_categories <= 0) throw ConfigError("n_categories must be positive");
    if (!(aur_coverage > 0.0) || aur_coverage > 0.1) {
        throw ConfigError("aur_coverage must lie in (0, 0.1]");
    }
    for (double b : anchor_bias) {
        if (!(b > 0.0)) throw ConfigError("anchor biases must be positive");
    }
    for (double r : presence_profile.presence_rate) {
        if (r < 0.0 || r > 1.0) throw ConfigError("presence rates must lie in [0, 1]");
    }
    for (double r : anomaly_rate) {
        if (r < 0.0 || r > 1.0) throw ConfigError("anomaly rates must lie in [0, 1]");
    }
    if (offers_min < 0 || offers_max < offers_min) throw ConfigError("bad offers range");
    const double wsum =
        anomaly_weight_shift10 + anomaly_weight_shift100 + anomaly_weight_uniform;
    if (!(wsum > 0.0)) throw ConfigError("anomaly kind weights must sum to a positive value");
    if (reliable_slot_pool.empty()) throw ConfigError("reliable_slot_pool must not be empty");
    for (int s : reliable_slot_pool) {
        if (s < 0 || s >= static_cast<int>(kAnchorArity)) {
            throw ConfigError("reliable_slot_pool entries must be valid slots");
        }
    }
}

std::string GroundTruth::to_json() const {
    json j;
    j["item_id"] = item_id;
    j["true_price"] = true_price;
    json inj = json::array();
    for (const auto& [slot, kind] : injected) {
        inj.push_back(json{{"slot", slot}, {"kind", std::string(to_string(kind))}});
    }
    j["injected"] = std::move(inj);
    j["aur_available"] = aur_available;
    j["reliable_slot"] = reliable_slot;
    j["offer_anomalous"] = offer_anomalous;
    return j.dump();
}

GroundTruth GroundTruth::from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed truth record: ") + e.what());
    }
    GroundTruth t;
    t.item_id = j.at("item_id").get<std::string>();
    t.true_price = j.at("true_price").get<double>();
    for (const auto& inj : j.at("injected")) {
        t.injected.emplace_back(inj.at("slot").get<int>(),
                                anomaly_kind_from_string(inj.at("kind").get<std::string>()));
    }
    t.aur_available = j.at("aur_available").get<bool>();
    t.reliable_slot = j.at("reliable_slot").get<int>();
    t.offer_anomalous = j.at("offer_anomalous").get<bool>();
    return t;
}

Catalog generate_catalog(const GeneratorConfig& cfg) {
    cfg.validate();
    Catalog catalog;
    catalog.events.reserve(cfg.n_items);
    catalog.truths.reserve(cfg.n_items);

    // Per-category parameters from a dedicated stream.
    std::vector<double> category_mu(cfg.n_categories);
    std::vector<int> category_reliable(cfg.n_categories);
    Rng cat_rng = Rng::derive(cfg.seed, 0xCA7ULL);
    for (int c = 0; c < cfg.n_categories; ++c) {
        category_mu[c] = cat_rng.uniform(cfg.price_mu_lo, cfg.price_mu_hi);
        category_reliable[c] =
            cfg.reliable_slot_pool[cat_rng.below(cfg.reliable_slot_pool.size())];
    }

    char item_buf[32];
    for (int i = 0; i < cfg.n_items; ++i) {
        Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(i) + 1);
        const int category = static_cast<int>(rng.below(cfg.n_categories));
        const double true_price = std::exp(category_mu[category] + cfg.price_sigma * rng.normal());
        const int reliable = category_reliable[category];

        PriceEvent event;
        std::snprintf(item_buf, sizeof(item_buf), "item-%08d", i);
        event.item_id = item_buf;
        event.ts = cfg.base_ts + static_cast<Instant>(i) * cfg.ts_step;
        event.category_id = "cat-" + std::to_string(category);

        GroundTruth truth;
        truth.item_id = event.item_id;
        truth.true_price = true_price;
        truth.reliable_slot = reliable;

        std::array<double, kAnchorArity> clean_anchor{};
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            const double sigma = static_cast<int>(s) == reliable ? cfg.reliable_noise_sigma
                                                                 : cfg.anchor_noise_sigma[s];
            clean_anchor[s] = true_price * cfg.anchor_bias[s] * std::exp(sigma * rng.normal());
            if (rng.bernoulli(cfg.presence_profile.presence_rate[s])) {
                event.anchors.values[s] = clean_anchor[s];
            }
        }

        const int n_offers =
            cfg.offers_min +
            static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.offers_max - cfg.offers_min + 1)));
        event.offers.reserve(n_offers);
        for (int o = 0; o < n_offers; ++o) {
            event.offers.push_back(true_price * std::exp(cfg.offer_noise_sigma * rng.normal()));
        }

        // History tracks the anchor's underlying process (bias x true price),
        // so today's draw can legitimately sit in its own history's tail.
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            if (!event.anchors.values[s]) continue;
            if (!rng.bernoulli(cfg.history_presence)) continue;
            const double base = true_price * cfg.anchor_bias[s];
            auto& series = event.history[s];
            series.reserve(cfg.history_days);
            for (int d = 0; d < cfg.history_days; ++d) {
                const double age = static_cast<double>(cfg.history_days - d);
                const double drift = -cfg.history_drift * age / cfg.history_days;
                PricePoint pp;
                pp.ts = event.ts - static_cast<Instant>(age) * 86400;
                pp.price = base * std::exp(drift + cfg.history_noise_sigma * rng.normal());
                series.push_back(pp);
            }
        }

        if (rng.bernoulli(cfg.aur_coverage)) {
            event.aur = true_price * std::exp(cfg.aur_noise_sigma * rng.normal());
            truth.aur_available = true;
        }

        if (rng.bernoulli(cfg.offer_price_rate)) {
            double offer = true_price * std::exp(cfg.offer_price_noise_sigma * rng.normal());
            if (rng.bernoulli(cfg.offer_anomaly_rate)) {
                offer *= rng.uniform(cfg.offer_anomaly_lo, cfg.offer_anomaly_hi);
                truth.offer_anomalous = true;
            }
            event.offer_price = offer;
        }

        catalog.events.push_back(std::move(event));
        catalog.truths.push_back(std::move(truth));
    }
    return catalog;
}

void inject_anomalies(std::vector<PriceEvent>& events, std::vector<GroundTruth>& truths,
                      const GeneratorConfig& cfg) {
    if (events.size() != truths.size()) throw ConfigError("events/truths size mismatch");
    const double w10 = cfg.anomaly_weight_shift10;
    const double w100 = cfg.anomaly_weight_shift100;
    const double total = w10 + w100 + cfg.anomaly_weight_uniform;

    for (std::size_t i = 0; i < events.size(); ++i) {
        Rng rng = Rng::derive(cfg.seed ^ 0x1BADF00DULL, static_cast<std::uint64_t>(i) + 1);
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            auto& anchor = events[i].anchors.values[s];
            if (!anchor || !rng.bernoulli(cfg.anomaly_rate[s])) continue;
            const double pick = rng.next_double() * total;
            AnomalyKind kind;
            double factor;
            if (pick < w10) {
                kind = AnomalyKind::DigitShift10x;
                factor = 10.0;
            } else if (pick < w10 + w100) {
                kind = AnomalyKind::DigitShift100x;
                factor = 100.0;
            } else {
                kind = AnomalyKind::UniformFactor;
                factor = rng.uniform(cfg.anomaly_uniform_lo, cfg.anomaly_uniform_hi);
            }
            anchor = *anchor * factor;
            truths[i].injected.emplace_back(static_cast<int>(s), kind);
        }
    }
}

void emit_event_stream(std::span<const PriceEvent> events, double rate, std::ostream& out) {
    if (rate <= 0.0) {
        for (const auto& e : events) out << serialize_event(e) << '\n';
        if (!out) throw IoError("event stream sink failed");
        return;
    }
    const auto start = std::chrono::steady_clock::now();
    const double interval_ns = 1e9 / rate;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto due =
            start + std::chrono::nanoseconds(static_cast<std::int64_t>(interval_ns * i));
        std::this_thread::sleep_until(due);
        out << serialize_event(events[i]) << '\n';
        if (!out) throw IoError("event stream sink failed");
    }
}

std::vector<GroundTruth> read_truth_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth file: " + path);
    std::vector<GroundTruth> truths;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) truths.push_back(GroundTruth::from_json(line));
    }
    return truths;
}

void write_truth_file(std::span<const GroundTruth> truths, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open truth file for writing: " + path);
    for (const auto& t : truths) out << t.to_json() << '\n';
    if (!out) throw IoError("truth file write failed");
}

}  // namespace moatplus
