#include "seqal/format.hpp"

#include "seqal/error.hpp"

#include <charconv>
#include <system_error>

namespace seqal {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::MalformedLine, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace seqal
