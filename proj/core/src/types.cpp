#include "moatplus/types.hpp"

namespace moatplus {

int anchor_slot(std::string_view name) {
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (kAnchorNames[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::string_view to_string(ScoreStatus s) {
    switch (s) {
        case ScoreStatus::Ok: return "ok";
        case ScoreStatus::NoReliableAnchor: return "no_reliable_anchor";
        case ScoreStatus::NoAnchors: return "no_anchors";
    }
    return "unknown";
}

}  // namespace moatplus
