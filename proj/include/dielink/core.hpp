#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dielink {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller-supplied data violates a precondition (bad image, bad parameter).
struct InvalidInputError : Error {
  using Error::Error;
};

// A model could not be estimated (degenerate geometry, too few inliers).
struct EstimationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Itemized failure list for manifests and configs.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string message,
                           std::vector<std::string> items = {});
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
};

struct Point2d {
  double x = 0.0;
  double y = 0.0;
};

// FNV-1a, used for config fingerprints and per-pair RNG seeds.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 14695981039346656037ull);

std::string to_hex(std::uint64_t v);

// Shortest text form that round-trips a double exactly.
std::string format_double(double v);

}  // namespace dielink
