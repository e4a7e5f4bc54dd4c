#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dielink/core.hpp"
#include "dielink/image.hpp"

namespace dielink::geometry {

// x' = s * R(theta) * x + (tx, ty)
struct SimilarityTransform {
  double s = 1.0;
  double theta = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;

  Point2d apply(const Point2d& p) const;
  SimilarityTransform inverse() const;
  bool is_identity() const {
    return s == 1.0 && theta == 0.0 && tx == 0.0 && ty == 0.0;
  }
};

struct Homography {
  // row-major 3x3, normalized so h[8] == 1 when nonzero
  std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};
  int n_in = 0;
  std::vector<bool> inlier_mask;

  Point2d apply(const Point2d& p) const;  // throws if mapped to infinity
};

struct StandardizedPoints {
  std::vector<Point2d> pts;  // zero column means, unit Frobenius norm
};

struct RansacParams {
  double reproj_threshold = 3.0;  // px
  int max_iters = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 42;
};

// Least-squares similarity (closed form: centroids + SVD of the 2x2
// cross-covariance). robust=true runs iterative residual trimming first.
SimilarityTransform estimate_similarity(const std::vector<Point2d>& src,
                                        const std::vector<Point2d>& dst,
                                        bool robust = false);

// Bilinear resampling of img under t onto a same-size canvas; out-of-bounds
// samples are 0.
GrayImage apply_similarity(const GrayImage& img, const SimilarityTransform& t);

// Identity iff |s - 1| > tol; *gated reports whether the gate fired.
SimilarityTransform scale_gate(const SimilarityTransform& t, double tol = 0.25,
                               bool* gated = nullptr);

Homography estimate_homography_ransac(const std::vector<Point2d>& src,
                                      const std::vector<Point2d>& dst,
                                      const RansacParams& params = {});

std::vector<Point2d> apply_homography(const std::vector<Point2d>& pts,
                                      const Homography& H);

StandardizedPoints standardize(const std::vector<Point2d>& pts);

// min over T = s*Q (Q orthogonal incl. reflections, s real) of
// ||std(A) * T - std(B)||_F^2, in closed form via the SVD of std(A)^T std(B).
double procrustes_distance(const std::vector<Point2d>& a,
                           const std::vector<Point2d>& b);

}  // namespace dielink::geometry
