#pragma once

#include <cstdint>
#include <string>

namespace moatplus {

// UTC instant, seconds since the Unix epoch. All event and history
// timestamps use this resolution; fractional seconds in input are rejected
// rather than silently truncated so round-trips stay exact.
using Instant = std::int64_t;

// Parses "YYYY-MM-DDTHH:MM:SSZ". Throws ParseError on anything else.
Instant parse_iso8601(const std::string& text);

std::string format_iso8601(Instant t);

}  // namespace moatplus
