#include "moatplus/event_json.hpp"

#include <fstream>

#include <json.hpp>

#include "moatplus/errors.hpp"

namespace moatplus {

using nlohmann::json;

namespace {

double positive_price(const json& v, const char* field) {
    if (!v.is_number()) throw ParseError(std::string("non-numeric price in ") + field);
    const double p = v.get<double>();
    if (!(p > 0.0)) throw ValidationError(std::string("nonpositive price in ") + field);
    return p;
}

int known_slot(const std::string& name, const char* where) {
    const int slot = anchor_slot(name);
    if (slot < 0) throw SchemaError("unknown anchor name '" + name + "' in " + where);
    return slot;
}

}  // namespace

PriceEvent parse_event(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed event record: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("event record is not a JSON object");

    PriceEvent e;
    try {
        e.item_id = j.at("item_id").get<std::string>();
        e.ts = parse_iso8601(j.at("ts").get<std::string>());
        e.category_id = j.value("category_id", std::string{});
    } catch (const json::exception& ex) {
        throw ParseError(std::string("missing or mistyped required field: ") + ex.what());
    }

    if (auto it = j.find("anchors"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError("'anchors' must be an object");
        for (const auto& [name, v] : it->items()) {
            e.anchors.values[known_slot(name, "anchors")] = positive_price(v, "anchors");
        }
    }

    if (auto it = j.find("offers"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError("'offers' must be an array");
        e.offers.reserve(it->size());
        for (const auto& v : *it) e.offers.push_back(positive_price(v, "offers"));
    }

    if (auto it = j.find("history"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError("'history' must be an object");
        for (const auto& [name, series] : it->items()) {
            const int slot = known_slot(name, "history");
            if (!series.is_array()) throw ParseError("history series must be an array");
            auto& out = e.history[slot];
            out.reserve(series.size());
            for (const auto& pair : series) {
                if (!pair.is_array() || pair.size() != 2) {
                    throw ParseError("history entry must be [ts, price]");
                }
                PricePoint pp;
                pp.ts = parse_iso8601(pair[0].get<std::string>());
                pp.price = positive_price(pair[1], "history");
                if (!out.empty() && pp.ts < out.back().ts) {
                    throw ValidationError("history timestamps must be nondecreasing for '" +
                                          name + "'");
                }
                out.push_back(pp);
            }
        }
    }

    if (auto it = j.find("aur"); it != j.end() && !it->is_null()) {
        e.aur = positive_price(*it, "aur");
    }
    if (auto it = j.find("offer_price"); it != j.end() && !it->is_null()) {
        e.offer_price = positive_price(*it, "offer_price");
    }
    return e;
}

std::string serialize_event(const PriceEvent& e) {
    json j;
    j["item_id"] = e.item_id;
    j["ts"] = format_iso8601(e.ts);
    j["category_id"] = e.category_id;

    json anchors = json::object();
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (e.anchors.values[i]) anchors[std::string(kAnchorNames[i])] = *e.anchors.values[i];
    }
    j["anchors"] = std::move(anchors);

    j["offers"] = e.offers;

    json history = json::object();
    for (std::size_t i = 0; i < kAnchorArity; ++i) {
        if (e.history[i].empty()) continue;
        json series = json::array();
        for (const auto& pp : e.history[i]) {
            series.push_back(json::array({format_iso8601(pp.ts), pp.price}));
        }
        history[std::string(kAnchorNames[i])] = std::move(series);
    }
    j["history"] = std::move(history);

    j["aur"] = e.aur ? json(*e.aur) : json(nullptr);
    j["offer_price"] = e.offer_price ? json(*e.offer_price) : json(nullptr);
    return j.dump();
}

std::vector<PriceEvent> read_event_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event file: " + path);
    std::vector<PriceEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        events.push_back(parse_event(line));
    }
    return events;
}

}  // namespace moatplus
