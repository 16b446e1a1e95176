#pragma once

#include <string>
#include <vector>

#include "moatplus/types.hpp"

namespace moatplus {

/// Parses one JSON-lines event record.
///
/// Schema: item_id (string), ts (ISO-8601), anchors (object anchor-name ->
/// number; absent keys mean missing), offers (array of numbers), history
/// (object anchor-name -> array of [ts, price]), aur (number or null),
/// category_id (string), offer_price (number or null).
///
/// Errors: malformed record -> ParseError; nonpositive price ->
/// ValidationError; unknown anchor name -> SchemaError.
PriceEvent parse_event(const std::string& line);

/// Inverse of parse_event; parse(serialize(e)) == e field-for-field.
std::string serialize_event(const PriceEvent& e);

/// Reads a whole JSON-lines corpus (one event per line, blank lines skipped).
std::vector<PriceEvent> read_event_file(const std::string& path);

}  // namespace moatplus
