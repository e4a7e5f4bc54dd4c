#include "dielink/core.hpp"

#include <cstdio>

namespace dielink {

namespace {

std::string join_items(const std::string& message,
                       const std::vector<std::string>& items) {
  std::string out = message;
  for (const auto& item : items) {
    out += "\n  - ";
    out += item;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::string message,
                                 std::vector<std::string> items)
    : Error(join_items(message, items)), items_(std::move(items)) {}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace dielink
