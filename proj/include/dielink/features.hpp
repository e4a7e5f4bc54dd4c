#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dielink/image.hpp"

namespace dielink::features {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double size = 0.0;
  double angle = -1.0;     // degrees, -1 = undefined
  double response = 0.0;
  int octave = 0;
};

enum class DescriptorKind { kReal, kBinary };

struct DescriptorSet {
  DescriptorKind kind = DescriptorKind::kReal;
  int dim = 0;  // floats per row (real) or bytes per row (binary)
  std::vector<float> real_data;
  std::vector<std::uint8_t> binary_data;

  std::size_t count() const {
    if (dim == 0) return 0;
    return kind == DescriptorKind::kReal ? real_data.size() / std::size_t(dim)
                                         : binary_data.size() / std::size_t(dim);
  }
  const float* real_row(std::size_t i) const {
    return real_data.data() + i * std::size_t(dim);
  }
  const std::uint8_t* binary_row(std::size_t i) const {
    return binary_data.data() + i * std::size_t(dim);
  }
};

struct FeatureSet {
  std::vector<Keypoint> keypoints;
  DescriptorSet descriptors;
};

struct Match {
  int index_a = -1;
  int index_b = -1;
  double distance = 0.0;
};

struct SiftParams {
  int max_features = 0;  // 0 = unlimited
  int octave_layers = 3;
  double contrast_threshold = 0.02;  // dense keypoints; registration accuracy grows with match count
  double edge_threshold = 10.0;
  double sigma = 1.6;
};

// Scale-space extrema with 128-dim gradient-histogram descriptors.
// Keypoints are returned in a canonical order (response desc, then y, x).
FeatureSet sift_detect_describe(const GrayImage& img, const SiftParams& params = {});

// Detector-only variant used by the baseline pipeline.
std::vector<Keypoint> detect_keypoints_baseline(const GrayImage& img,
                                                const SiftParams& params = {});

// 256-bit binary descriptors at the given keypoints. Keypoints too close to
// the border are dropped; the returned keypoint list is the surviving subset,
// index-aligned with the descriptor rows.
FeatureSet orb_describe(const GrayImage& img, const std::vector<Keypoint>& kps);

// Lowe ratio test: for each row of a, its nearest neighbor in b is kept iff
// d1 < ratio * d2. One match per descriptor on either side (best distance
// wins, then lowest index).
std::vector<Match> match_ratio_test(const DescriptorSet& a,
                                    const DescriptorSet& b, double ratio = 0.75);

// Mutual nearest neighbors; ties broken by lowest index.
std::vector<Match> match_cross_check(const DescriptorSet& a,
                                     const DescriptorSet& b);

// Debug overlay export: one "id x y size angle" line per keypoint.
void export_keypoints(const std::vector<Keypoint>& kps, const std::string& path);

}  // namespace dielink::features
