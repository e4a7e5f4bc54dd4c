#include "dielink/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace dielink::geometry {

namespace {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

void check_pairs(const std::vector<Point2d>& a, const std::vector<Point2d>& b,
                 std::size_t min_n, const char* who) {
  if (a.size() != b.size()) {
    throw InvalidInputError(std::string(who) + ": point lists differ in length");
  }
  if (a.size() < min_n) {
    throw InvalidInputError(std::string(who) + ": need at least " +
                            std::to_string(min_n) + " point pairs");
  }
  for (const auto* v : {&a, &b}) {
    for (const auto& p : *v) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw InvalidInputError(std::string(who) + ": non-finite coordinate");
      }
    }
  }
}

Point2d centroid(const std::vector<Point2d>& pts) {
  double sx = 0.0, sy = 0.0;
  for (const auto& p : pts) {
    sx += p.x;
    sy += p.y;
  }
  return {sx / double(pts.size()), sy / double(pts.size())};
}

SimilarityTransform fit_similarity(const std::vector<Point2d>& src,
                                   const std::vector<Point2d>& dst) {
  const std::size_t n = src.size();
  const Point2d ca = centroid(src), cb = centroid(dst);

  Mat2 cov = Mat2::Zero();  // dst-centered * src-centered^T
  double var_src = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d x(src[i].x - ca.x, src[i].y - ca.y);
    const Eigen::Vector2d y(dst[i].x - cb.x, dst[i].y - cb.y);
    cov += y * x.transpose();
    var_src += x.squaredNorm();
  }
  cov /= double(n);
  var_src /= double(n);

  if (var_src <= 0.0) {
    throw EstimationError("estimate_similarity: source points are coincident");
  }

  Eigen::JacobiSVD<Mat2> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector2d d = svd.singularValues();
  if (!(d(1) > 1e-12 * std::max(d(0), 1e-300))) {
    throw EstimationError("estimate_similarity: degenerate (collinear) points");
  }
  Eigen::Vector2d sign(1.0, 1.0);
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    sign(1) = -1.0;
  }
  const Mat2 R =
      svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  const double scale = (d(0) * sign(0) + d(1) * sign(1)) / var_src;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw EstimationError("estimate_similarity: non-positive scale");
  }

  SimilarityTransform t;
  t.s = scale;
  t.theta = std::atan2(R(1, 0), R(0, 0));
  const Point2d rot_ca{R(0, 0) * ca.x + R(0, 1) * ca.y,
                       R(1, 0) * ca.x + R(1, 1) * ca.y};
  t.tx = cb.x - scale * rot_ca.x;
  t.ty = cb.y - scale * rot_ca.y;
  return t;
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    m = 0.5 * (m + v[n / 2 - 1]);
  }
  return m;
}

bool collinear(const Point2d& a, const Point2d& b, const Point2d& c,
               double scale2) {
  const double area =
      (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return std::abs(area) <= 1e-9 * std::max(scale2, 1.0);
}

// Normalized DLT homography fit; returns false when the system is degenerate.
bool fit_homography_dlt(const std::vector<Point2d>& src,
                        const std::vector<Point2d>& dst,
                        const std::vector<int>& idx, Mat3& out) {
  const std::size_t n = idx.size();
  auto normalizer = [](const std::vector<Point2d>& pts,
                       const std::vector<int>& ix, Mat3& T) {
    double mx = 0.0, my = 0.0;
    for (int i : ix) {
      mx += pts[i].x;
      my += pts[i].y;
    }
    mx /= double(ix.size());
    my /= double(ix.size());
    double md = 0.0;
    for (int i : ix) {
      md += std::hypot(pts[i].x - mx, pts[i].y - my);
    }
    md /= double(ix.size());
    if (md <= 0.0) return false;
    const double s = std::sqrt(2.0) / md;
    T << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
    return true;
  };

  Mat3 Ta, Tb;
  if (!normalizer(src, idx, Ta) || !normalizer(dst, idx, Tb)) return false;

  Eigen::MatrixXd A(2 * n, 9);
  for (std::size_t r = 0; r < n; ++r) {
    const int i = idx[r];
    const double x = Ta(0, 0) * src[i].x + Ta(0, 2);
    const double y = Ta(1, 1) * src[i].y + Ta(1, 2);
    const double u = Tb(0, 0) * dst[i].x + Tb(0, 2);
    const double v = Tb(1, 1) * dst[i].y + Tb(1, 2);
    A.row(2 * r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  out = Tb.inverse() * Hn * Ta;
  if (!out.allFinite()) return false;
  if (std::abs(out(2, 2)) > 1e-12) out /= out(2, 2);
  return true;
}

double reproj_error(const Mat3& H, const Point2d& a, const Point2d& b) {
  const double w = H(2, 0) * a.x + H(2, 1) * a.y + H(2, 2);
  if (std::abs(w) < 1e-12) return std::numeric_limits<double>::infinity();
  const double x = (H(0, 0) * a.x + H(0, 1) * a.y + H(0, 2)) / w;
  const double y = (H(1, 0) * a.x + H(1, 1) * a.y + H(1, 2)) / w;
  return std::hypot(x - b.x, y - b.y);
}

// Deterministic bounded draw (modulo; bias immaterial at these sizes and,
// unlike std distributions, identical across standard libraries).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

}  // namespace

Point2d SimilarityTransform::apply(const Point2d& p) const {
  const double c = std::cos(theta), sn = std::sin(theta);
  return {s * (c * p.x - sn * p.y) + tx, s * (sn * p.x + c * p.y) + ty};
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.s = 1.0 / s;
  inv.theta = -theta;
  const double c = std::cos(theta), sn = std::sin(theta);
  // x = (1/s) R(-theta) (x' - t)
  inv.tx = -(c * tx + sn * ty) / s;
  inv.ty = -(-sn * tx + c * ty) / s;
  return inv;
}

Point2d Homography::apply(const Point2d& p) const {
  const double w = h[6] * p.x + h[7] * p.y + h[8];
  if (std::abs(w) < 1e-12) {
    throw EstimationError("apply_homography: point mapped to infinity");
  }
  return {(h[0] * p.x + h[1] * p.y + h[2]) / w,
          (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

SimilarityTransform estimate_similarity(const std::vector<Point2d>& src,
                                        const std::vector<Point2d>& dst,
                                        bool robust) {
  check_pairs(src, dst, 3, "estimate_similarity");
  if (!robust) return fit_similarity(src, dst);

  // Trimmed refits: drop points whose residual exceeds a multiple of the
  // median residual, until the active set is stable.
  const std::size_t n = src.size();
  std::vector<int> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = int(i);

  double spread = 0.0;
  const Point2d cb = centroid(dst);
  for (const auto& p : dst) spread += std::hypot(p.x - cb.x, p.y - cb.y);
  spread /= double(n);
  const double floor = 1e-8 * std::max(1.0, spread);

  SimilarityTransform t = fit_similarity(src, dst);
  for (int pass = 0; pass < 20; ++pass) {
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Point2d m = t.apply(src[i]);
      res[i] = std::hypot(m.x - dst[i].x, m.y - dst[i].y);
    }
    std::vector<double> active_res;
    active_res.reserve(active.size());
    for (int i : active) active_res.push_back(res[i]);
    const double cutoff = std::max(floor, 3.0 * median_of(active_res));

    std::vector<int> next;
    for (std::size_t i = 0; i < n; ++i) {
      if (res[i] <= cutoff) next.push_back(int(i));
    }
    if (next.size() < 3) {
      // keep the three smallest residuals
      std::vector<int> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = int(i);
      std::sort(order.begin(), order.end(),
                [&](int x, int y) { return res[x] < res[y]; });
      next.assign(order.begin(), order.begin() + 3);
      std::sort(next.begin(), next.end());
    }
    if (next == active) break;
    active = std::move(next);
    std::vector<Point2d> sa, sb;
    sa.reserve(active.size());
    sb.reserve(active.size());
    for (int i : active) {
      sa.push_back(src[i]);
      sb.push_back(dst[i]);
    }
    t = fit_similarity(sa, sb);
  }
  return t;
}

GrayImage apply_similarity(const GrayImage& img, const SimilarityTransform& t) {
  img.validate("apply_similarity");
  if (!(t.s > 0.0) || !std::isfinite(t.s) || !std::isfinite(t.theta) ||
      !std::isfinite(t.tx) || !std::isfinite(t.ty)) {
    throw InvalidInputError("apply_similarity: invalid transform");
  }
  const SimilarityTransform inv = t.inverse();
  GrayImage out(img.width, img.height, 0.0f, img.range);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      Point2d s = inv.apply({double(x), double(y)});
      // Snap to the pixel grid against FP jitter so a numerically-identity
      // transform reproduces the input bit for bit.
      if (std::abs(s.x - std::round(s.x)) < 1e-9) s.x = std::round(s.x);
      if (std::abs(s.y - std::round(s.y)) < 1e-9) s.y = std::round(s.y);
      const int x0 = int(std::floor(s.x));
      const int y0 = int(std::floor(s.y));
      const double fx = s.x - x0, fy = s.y - y0;
      auto sample = [&](int yy, int xx) -> double {
        if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) return 0.0;
        return img.at(yy, xx);
      };
      const double v = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                       fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
      out.at(y, x) = static_cast<float>(std::clamp(v, 0.0, double(img.range)));
    }
  }
  return out;
}

SimilarityTransform scale_gate(const SimilarityTransform& t, double tol,
                               bool* gated) {
  const bool fire = std::abs(t.s - 1.0) > tol;
  if (gated) *gated = fire;
  return fire ? SimilarityTransform{} : t;
}

Homography estimate_homography_ransac(const std::vector<Point2d>& src,
                                      const std::vector<Point2d>& dst,
                                      const RansacParams& params) {
  check_pairs(src, dst, 4, "estimate_homography_ransac");
  const std::size_t n = src.size();

  double scale2 = 0.0;
  for (const auto& p : src) scale2 = std::max(scale2, p.x * p.x + p.y * p.y);

  std::mt19937_64 rng(params.seed);
  std::vector<int> best_inliers;
  Mat3 best_H = Mat3::Identity();

  long long iters = params.max_iters;
  for (long long it = 0; it < iters; ++it) {
    int pick[4];
    pick[0] = int(bounded(rng, n));
    for (int k = 1; k < 4; ++k) {
      int v;
      do {
        v = int(bounded(rng, n));
      } while ([&] {
        for (int j = 0; j < k; ++j)
          if (pick[j] == v) return true;
        return false;
      }());
      pick[k] = v;
    }
    std::vector<int> sample(pick, pick + 4);

    bool degenerate = false;
    for (int a = 0; a < 4 && !degenerate; ++a)
      for (int b = a + 1; b < 4 && !degenerate; ++b)
        for (int c = b + 1; c < 4; ++c) {
          if (collinear(src[sample[a]], src[sample[b]], src[sample[c]], scale2) ||
              collinear(dst[sample[a]], dst[sample[b]], dst[sample[c]], scale2)) {
            degenerate = true;
            break;
          }
        }
    if (degenerate) continue;

    Mat3 H;
    if (!fit_homography_dlt(src, dst, sample, H)) continue;

    std::vector<int> inliers;
    for (std::size_t i = 0; i < n; ++i) {
      if (reproj_error(H, src[i], dst[i]) <= params.reproj_threshold) {
        inliers.push_back(int(i));
      }
    }
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_H = H;
      const double w = double(best_inliers.size()) / double(n);
      const double denom = std::log(std::max(1e-12, 1.0 - std::pow(w, 4)));
      if (denom < 0.0) {
        const double need = std::log(1.0 - params.confidence) / denom;
        iters = std::min<long long>(params.max_iters,
                                    (long long)std::ceil(need));
        iters = std::max<long long>(iters, it + 1);
      }
    }
  }

  if (best_inliers.size() < 4) {
    throw EstimationError("estimate_homography_ransac: no consensus model");
  }

  Mat3 refit;
  if (fit_homography_dlt(src, dst, best_inliers, refit)) {
    std::vector<int> refit_inliers;
    for (std::size_t i = 0; i < n; ++i) {
      if (reproj_error(refit, src[i], dst[i]) <= params.reproj_threshold) {
        refit_inliers.push_back(int(i));
      }
    }
    if (refit_inliers.size() >= best_inliers.size()) {
      best_H = refit;
      best_inliers = std::move(refit_inliers);
    }
  }

  Homography out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.h[r * 3 + c] = best_H(r, c);
  out.inlier_mask.assign(n, false);
  for (int i : best_inliers) out.inlier_mask[i] = true;
  out.n_in = int(best_inliers.size());
  return out;
}

std::vector<Point2d> apply_homography(const std::vector<Point2d>& pts,
                                      const Homography& H) {
  std::vector<Point2d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(H.apply(p));
  return out;
}

StandardizedPoints standardize(const std::vector<Point2d>& pts) {
  if (pts.size() < 2) {
    throw InvalidInputError("standardize: need at least 2 points");
  }
  const Point2d c = centroid(pts);
  double norm2 = 0.0;
  StandardizedPoints out;
  out.pts.reserve(pts.size());
  for (const auto& p : pts) {
    const double dx = p.x - c.x, dy = p.y - c.y;
    out.pts.push_back({dx, dy});
    norm2 += dx * dx + dy * dy;
  }
  const double norm = std::sqrt(norm2);
  if (!(norm > 0.0)) {
    throw EstimationError("standardize: all points coincide (zero norm)");
  }
  for (auto& p : out.pts) {
    p.x /= norm;
    p.y /= norm;
  }
  return out;
}

double procrustes_distance(const std::vector<Point2d>& a,
                           const std::vector<Point2d>& b) {
  check_pairs(a, b, 2, "procrustes_distance");
  const StandardizedPoints sa = standardize(a);
  const StandardizedPoints sb = standardize(b);

  // M = std(A)^T std(B); optimum over s*Q leaves 1 - (nuclear norm of M)^2.
  double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;
  for (std::size_t i = 0; i < sa.pts.size(); ++i) {
    m00 += sa.pts[i].x * sb.pts[i].x;
    m01 += sa.pts[i].x * sb.pts[i].y;
    m10 += sa.pts[i].y * sb.pts[i].x;
    m11 += sa.pts[i].y * sb.pts[i].y;
  }
  const double frob2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
  const double det = m00 * m11 - m01 * m10;
  const double nuclear2 = frob2 + 2.0 * std::abs(det);  // (s1 + s2)^2
  return std::clamp(1.0 - nuclear2, 0.0, 2.0);
}

}  // namespace dielink::geometry
