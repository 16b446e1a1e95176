#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "moatplus/types.hpp"
#include "moatplus/weak_supervision.hpp"

namespace moatplus {

enum class AnomalyKind { DigitShift10x, DigitShift100x, UniformFactor };

std::string_view to_string(AnomalyKind k);

/// Seeded marketplace corpus description. Every distributional knob the
/// acceptance experiments depend on lives here, so runs are reproducible
/// from the config file alone.
struct GeneratorConfig {
    int n_items = 100000;
    int n_categories = 20;
    std::uint64_t seed = 1;

    // True item prices: lognormal with a per-category location drawn from
    // [price_mu_lo, price_mu_hi].
    double price_mu_lo = 1.6;   // ~ $5
    double price_mu_hi = 6.0;   // ~ $400
    double price_sigma = 0.6;

    // Multiplicative anchor biases and lognormal noise per slot. Competitor
    // matching is the noisiest source; store/marketplace feeds sit between.
    std::array<double, kAnchorArity> anchor_bias{1.02, 1.06, 0.99, 1.00, 1.00};
    std::array<double, kAnchorArity> anchor_noise_sigma{0.25, 0.07, 0.16, 0.10, 0.16};
    // Per category one slot is markedly more reliable (tighter noise);
    // plants the signal the aggregator is supposed to learn.
    double reliable_noise_sigma = 0.005;
    std::vector<int> reliable_slot_pool{2, 3, 4};

    SparsityProfile presence_profile{{0.92, 0.75, 0.85, 0.85, 0.85}, std::nullopt};

    // Per-anchor history series.
    double history_presence = 0.88;
    int history_days = 30;
    double history_noise_sigma = 0.04;
    double history_drift = 0.02;  // total log drift over the window

    double aur_coverage = 0.10;     // must stay in (0, 0.1]
    double aur_noise_sigma = 0.005;

    int offers_min = 1;
    int offers_max = 8;
    double offer_noise_sigma = 0.05;

    // Incoming offer under evaluation; a small fraction is egregiously high.
    double offer_price_rate = 0.90;
    double offer_price_noise_sigma = 0.05;
    double offer_anomaly_rate = 0.02;
    double offer_anomaly_lo = 3.0;
    double offer_anomaly_hi = 30.0;

    // High-side anchor corruption rates per slot and kind mix.
    std::array<double, kAnchorArity> anomaly_rate{0.01, 0.0, 0.01, 0.0, 0.01};
    double anomaly_weight_shift10 = 0.4;
    double anomaly_weight_shift100 = 0.2;
    double anomaly_weight_uniform = 0.4;  // factor ~ U[5, 100]
    double anomaly_uniform_lo = 5.0;
    double anomaly_uniform_hi = 100.0;

    Instant base_ts = 1735689600;  // 2025-01-01T00:00:00Z
    Instant ts_step = 1;           // virtual clock increment per item

    static GeneratorConfig from_json(const std::string& text);
    std::string to_json() const;
    void validate() const;  // throws ConfigError
};

/// Oracle bookkeeping per item: what the generator actually did.
struct GroundTruth {
    std::string item_id;
    double true_price = 0.0;
    std::vector<std::pair<int, AnomalyKind>> injected;  // (slot, kind)
    bool aur_available = false;
    int reliable_slot = -1;
    bool offer_anomalous = false;

    std::string to_json() const;
    static GroundTruth from_json(const std::string& line);
};

struct Catalog {
    std::vector<PriceEvent> events;
    std::vector<GroundTruth> truths;
};

/// Clean catalog: anchors, offers, history, sparse AUR; no anomalies yet.
/// Deterministic per seed.
Catalog generate_catalog(const GeneratorConfig& cfg);

/// Multiplies present anchors by 10/100/U[lo,hi] with the configured per-slot
/// rates; mutates events and records each injection in the truth log.
void inject_anomalies(std::vector<PriceEvent>& events, std::vector<GroundTruth>& truths,
                      const GeneratorConfig& cfg);

/// Writes events as JSON lines. rate <= 0 emits unpaced (batch mode);
/// otherwise pacing targets `rate` events per second of wall time.
void emit_event_stream(std::span<const PriceEvent> events, double rate, std::ostream& out);

std::vector<GroundTruth> read_truth_file(const std::string& path);
void write_truth_file(std::span<const GroundTruth> truths, const std::string& path);

}  // namespace moatplus
