#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "dielink/distance.hpp"

namespace dielink::config {

// Everything a run depends on, serializable and echoed into every output.
struct RunConfig {
  std::string method = "ssim";  // "ssim" | "procrustes" | "both"
  std::uint64_t seed = 42;
  int workers = 1;
  std::string cache_dir;   // empty = no caching
  std::string output_dir = ".";
  int histogram_bins = 30;
  distance::SsimPipelineParams ssim_pipeline;
  distance::ProcrustesPipelineParams proc_pipeline;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);

  // Digest of the parameters that determine a method's raw distances
  // (stable under key reordering; excludes paths/workers/output knobs).
  std::string fingerprint(const std::string& method_name) const;

  bool wants(const std::string& method_name) const {
    return method == method_name || method == "both";
  }
};

}  // namespace dielink::config
