#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moatplus/time.hpp"

namespace moatplus {

/// Fixed anchor arity. Adding a sixth anchor is a schema-version bump; no
/// other module hard-codes slot meaning beyond this table.
inline constexpr std::size_t kAnchorArity = 5;

inline constexpr std::array<std::string_view, kAnchorArity> kAnchorNames = {
    "competitor_price", "msrp", "store_price", "first_party_price", "mp_median_price",
};

/// Slot index for a known anchor name, or -1.
int anchor_slot(std::string_view name);

/// Up to five optional reference prices for one item. Absent slots are real
/// absences, never sentinel numbers.
struct AnchorVector {
    std::array<std::optional<double>, kAnchorArity> values{};

    int present_count() const {
        int n = 0;
        for (const auto& v : values) n += v.has_value();
        return n;
    }
    bool any_present() const { return present_count() > 0; }
    std::array<bool, kAnchorArity> present_mask() const {
        std::array<bool, kAnchorArity> m{};
        for (std::size_t i = 0; i < kAnchorArity; ++i) m[i] = values[i].has_value();
        return m;
    }

    bool operator==(const AnchorVector&) const = default;
};

struct PricePoint {
    Instant ts = 0;
    double price = 0.0;

    bool operator==(const PricePoint&) const = default;
};

/// One pricing/anchor update event. Immutable after parse; safe to share
/// across concurrent scoring requests.
struct PriceEvent {
    std::string item_id;
    Instant ts = 0;
    AnchorVector anchors;
    std::vector<double> offers;                              // competing offer prices, may be empty
    std::array<std::vector<PricePoint>, kAnchorArity> history;  // per-anchor, ts nondecreasing
    std::optional<double> aur;                               // absent for most of the catalog
    std::string category_id;
    std::optional<double> offer_price;                       // incoming offer under evaluation

    bool operator==(const PriceEvent&) const = default;
};

enum class ScoreStatus { Ok, NoReliableAnchor, NoAnchors };

std::string_view to_string(ScoreStatus s);

/// Output triple (optimal anchor, weights, flags) plus the derived ceiling.
struct ScoreResult {
    std::optional<double> optimal_anchor;
    std::array<double, kAnchorArity> weights{};       // zero for absent/flagged slots
    std::array<bool, kAnchorArity> anomaly_flags{};
    std::optional<double> ceiling_price;
    ScoreStatus status = ScoreStatus::NoAnchors;

    bool operator==(const ScoreResult&) const = default;
};

enum class Scoreability { Scoreable, NoAnchors };

/// NoAnchors iff all five anchors are absent. Pure.
inline Scoreability validate_scoreable(const PriceEvent& e) {
    return e.anchors.any_present() ? Scoreability::Scoreable : Scoreability::NoAnchors;
}

enum class BinaryLabel { Normal, Anomalous };
enum class LabelSource { LabelingFunction, Derived, Manual };

}  // namespace moatplus
