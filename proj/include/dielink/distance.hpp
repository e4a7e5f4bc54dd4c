#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dielink/distance_matrix.hpp"
#include "dielink/features.hpp"
#include "dielink/geometry.hpp"
#include "dielink/imgproc.hpp"
#include "dielink/manifest.hpp"
#include "dielink/ssim.hpp"

namespace dielink::distance {

struct SsimPipelineParams {
  imgproc::SsimPreprocParams preproc;
  features::SiftParams sift;
  double match_ratio = 0.75;
  int min_matches = 5;  // estimate a transform only when matches > 4
  double scale_gate_tol = 0.25;
  bool robust_similarity = true;  // trimmed refit; sub-pixel registration
  ssim::SsimParams ssim;
};

struct ProcrustesPipelineParams {
  imgproc::ProcrustesPreprocParams preproc;
  features::SiftParams detector;
  geometry::RansacParams ransac;
  double log_floor = 1e-12;  // clamp for log(P) when P -> 0
};

struct PairDiagnostics {
  std::string id_a, id_b;
  std::string method;
  int n_matches = 0;
  bool gate_triggered = false;
  bool estimation_failed = false;
  bool incomparable = false;  // sentinel raw value (baseline failures)
  int n_in = 0;               // RANSAC inliers (baseline only)
  double raw_value = 0.0;
  geometry::SimilarityTransform transform;  // ssim method
  bool has_homography = false;
  std::array<double, 9> homography{1, 0, 0, 0, 1, 0, 0, 0, 1};
  double procrustes_value = 0.0;  // P before the log
  std::uint64_t pair_seed = 0;

  std::string to_json_line() const;
};

// Per-image artifacts computed once and shared across all pairs.
struct SsimPrecomp {
  GrayImage pre{1, 1};
  features::FeatureSet feats;
};

struct ProcrustesPrecomp {
  features::FeatureSet orb;  // keypoints re-synced to descriptor rows
};

SsimPrecomp precompute_ssim(const RgbImage& img,
                            const SsimPipelineParams& params);
ProcrustesPrecomp precompute_procrustes(const RgbImage& img,
                                        const ProcrustesPipelineParams& params);

// Alignment + structural dissimilarity of a preprocessed pair.
// Total: every failure path falls back to the identity transform.
double ssim_pair(const SsimPrecomp& a, const SsimPrecomp& b,
                 const SsimPipelineParams& params,
                 PairDiagnostics* diag = nullptr);

// Baseline raw value log(P) + 1/n_in; +infinity marks incomparable pairs.
double procrustes_pair(const ProcrustesPrecomp& a, const ProcrustesPrecomp& b,
                       const ProcrustesPipelineParams& params,
                       std::uint64_t pair_seed,
                       PairDiagnostics* diag = nullptr);

// Whole-pipeline single-pair runs from image files.
std::pair<double, PairDiagnostics> ssim_distance(
    const std::string& image_a, const std::string& image_b,
    const SsimPipelineParams& params = {});
std::pair<double, PairDiagnostics> procrustes_based_distance(
    const std::string& image_a, const std::string& image_b,
    const ProcrustesPipelineParams& params = {},
    std::uint64_t pair_seed = 42);

std::uint64_t pair_seed(const std::string& id_a, const std::string& id_b,
                        std::uint64_t global_seed);

struct MatrixJob {
  manifest::Manifest dataset;
  std::string method;  // "ssim" | "procrustes"
  SsimPipelineParams ssim_params;
  ProcrustesPipelineParams proc_params;
  std::uint64_t global_seed = 42;
  int workers = 1;
  std::string cache_path;    // empty = caching disabled
  std::string fingerprint;   // parameter digest for cache keying
  std::string config_json;   // echoed into the matrix sidecar
};

// All n(n-1)/2 pairs, parallel, resumable, scheduling-independent.
DistanceMatrix compute_distance_matrix(
    const MatrixJob& job, std::vector<PairDiagnostics>* diagnostics = nullptr);

// Rescale a raw baseline matrix so off-diagonal values span [0,1]
// (sentinel/infinite entries map to 1). Exposed for tests.
void normalize_baseline_matrix(DistanceMatrix& m);

}  // namespace dielink::distance
