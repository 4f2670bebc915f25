#pragma once

#include <string>
#include <string_view>

namespace seqal {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Strict parse of a full decimal string; throws MalformedLine on garbage.
double parse_double(std::string_view text);

}  // namespace seqal
