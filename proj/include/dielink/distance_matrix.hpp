#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dielink/core.hpp"

namespace dielink::distance {

// Symmetric pairwise dissimilarities with zero diagonal.
struct DistanceMatrix {
  std::vector<std::string> ids;
  std::vector<double> values;  // n*n row-major
  std::string method;          // "ssim" | "procrustes"
  bool normalized = false;
  std::uint64_t seed = 0;
  std::string fingerprint;  // hex digest of the generating parameters
  std::string config_json;  // full config echo, embedded in the sidecar

  std::size_t size() const { return ids.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * ids.size() + j]; }
  double at(std::size_t i, std::size_t j) const {
    return values[i * ids.size() + j];
  }

  void set_pair(std::size_t i, std::size_t j, double v) {
    at(i, j) = v;
    at(j, i) = v;
  }

  // Checks symmetry, zero diagonal, finiteness, id uniqueness.
  void validate() const;

  std::size_t index_of(const std::string& id) const;  // throws if absent
  DistanceMatrix subset(const std::vector<std::string>& keep) const;

  // Off-diagonal upper-triangle values in (i<j) order.
  std::vector<double> upper_values() const;

  // Square CSV with an id header row/column plus a "<path>.meta.json"
  // sidecar carrying method/normalized/seed/fingerprint/config.
  void save(const std::string& csv_path) const;
  static DistanceMatrix load(const std::string& csv_path);
};

}  // namespace dielink::distance
