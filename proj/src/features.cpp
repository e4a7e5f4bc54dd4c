#include "dielink/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>

#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>

#include "dielink/core.hpp"

namespace dielink::features {

namespace {

// OpenCV's internal parallelism is disabled once, process-wide: detection
// must not depend on scheduling.
void force_single_thread() {
  static std::once_flag flag;
  std::call_once(flag, [] { cv::setNumThreads(1); });
}

cv::Mat to_mat8u(const GrayImage& img) {
  img.validate("features");
  cv::Mat m(img.height, img.width, CV_8UC1);
  const double scale = 255.0 / img.range;
  for (int y = 0; y < img.height; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      row[x] = cv::saturate_cast<std::uint8_t>(std::lround(img.at(y, x) * scale));
    }
  }
  return m;
}

bool keypoint_order(const cv::KeyPoint& a, const cv::KeyPoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.pt.y != b.pt.y) return a.pt.y < b.pt.y;
  if (a.pt.x != b.pt.x) return a.pt.x < b.pt.x;
  if (a.size != b.size) return a.size < b.size;
  if (a.angle != b.angle) return a.angle < b.angle;
  return a.octave < b.octave;
}

std::vector<cv::KeyPoint> detect_sorted(const cv::Mat& m, const SiftParams& p) {
  auto sift = cv::SIFT::create(p.max_features, p.octave_layers,
                               p.contrast_threshold, p.edge_threshold, p.sigma);
  std::vector<cv::KeyPoint> kps;
  sift->detect(m, kps);
  // In-bounds filter, then canonical order independent of detector internals.
  std::erase_if(kps, [&](const cv::KeyPoint& k) {
    return !(k.pt.x >= 0 && k.pt.x < m.cols && k.pt.y >= 0 && k.pt.y < m.rows) ||
           !std::isfinite(k.pt.x) || !std::isfinite(k.pt.y);
  });
  std::sort(kps.begin(), kps.end(), keypoint_order);
  return kps;
}

Keypoint from_cv(const cv::KeyPoint& k) {
  return {double(k.pt.x), double(k.pt.y), double(k.size),
          double(k.angle), double(k.response), k.octave};
}

double l2_distance_sq(const float* a, const float* b, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc;
}

int hamming_distance(const std::uint8_t* a, const std::uint8_t* b, int bytes) {
  int acc = 0;
  for (int i = 0; i < bytes; ++i) {
    acc += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
  }
  return acc;
}

void check_compatible(const DescriptorSet& a, const DescriptorSet& b) {
  if (a.count() == 0 || b.count() == 0) return;
  if (a.kind != b.kind || a.dim != b.dim) {
    throw InvalidInputError("match: descriptor sets are not comparable");
  }
}

// Nearest and second-nearest rows of b for row i of a.
struct TwoNearest {
  int best = -1;
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();
};

TwoNearest two_nearest(const DescriptorSet& a, std::size_t i,
                       const DescriptorSet& b) {
  TwoNearest r;
  const std::size_t nb = b.count();
  for (std::size_t j = 0; j < nb; ++j) {
    double d;
    if (a.kind == DescriptorKind::kReal) {
      d = l2_distance_sq(a.real_row(i), b.real_row(j), a.dim);
    } else {
      d = hamming_distance(a.binary_row(i), b.binary_row(j), a.dim);
    }
    if (d < r.d1) {
      r.d2 = r.d1;
      r.d1 = d;
      r.best = int(j);
    } else if (d < r.d2) {
      r.d2 = d;
    }
  }
  return r;
}

double reported_distance(const DescriptorSet& a, double d) {
  return a.kind == DescriptorKind::kReal ? std::sqrt(d) : d;
}

}  // namespace

FeatureSet sift_detect_describe(const GrayImage& img, const SiftParams& params) {
  force_single_thread();
  cv::Mat m = to_mat8u(img);
  auto kps = detect_sorted(m, params);

  FeatureSet out;
  out.descriptors.kind = DescriptorKind::kReal;
  out.descriptors.dim = 128;
  if (kps.empty()) return out;

  auto sift = cv::SIFT::create(params.max_features, params.octave_layers,
                               params.contrast_threshold,
                               params.edge_threshold, params.sigma);
  cv::Mat desc;
  sift->compute(m, kps, desc);
  if (desc.rows != int(kps.size())) {
    throw EstimationError("sift: descriptor count does not match keypoints");
  }
  out.keypoints.reserve(kps.size());
  for (const auto& k : kps) out.keypoints.push_back(from_cv(k));
  out.descriptors.real_data.assign(desc.ptr<float>(0),
                                   desc.ptr<float>(0) + desc.total());
  return out;
}

std::vector<Keypoint> detect_keypoints_baseline(const GrayImage& img,
                                                const SiftParams& params) {
  force_single_thread();
  cv::Mat m = to_mat8u(img);
  auto kps = detect_sorted(m, params);
  std::vector<Keypoint> out;
  out.reserve(kps.size());
  for (const auto& k : kps) out.push_back(from_cv(k));
  return out;
}

FeatureSet orb_describe(const GrayImage& img, const std::vector<Keypoint>& kps) {
  force_single_thread();
  FeatureSet out;
  out.descriptors.kind = DescriptorKind::kBinary;
  out.descriptors.dim = 32;
  if (kps.empty()) return out;

  cv::Mat m = to_mat8u(img);
  // ORB interprets octave as its own pyramid level, so keypoints from other
  // detectors are described at the base scale with a fixed patch size.
  std::vector<cv::KeyPoint> cv_kps;
  cv_kps.reserve(kps.size());
  for (const auto& k : kps) {
    cv::KeyPoint ck(float(k.x), float(k.y), 31.0f, float(k.angle),
                    float(k.response), 0);
    cv_kps.push_back(ck);
  }
  auto orb = cv::ORB::create();
  cv::Mat desc;
  orb->compute(m, cv_kps, desc);  // drops border keypoints, re-syncs cv_kps
  if (desc.rows != int(cv_kps.size())) {
    throw EstimationError("orb: descriptor count does not match keypoints");
  }
  out.keypoints.reserve(cv_kps.size());
  for (const auto& k : cv_kps) out.keypoints.push_back(from_cv(k));
  out.descriptors.binary_data.assign(desc.ptr<std::uint8_t>(0),
                                     desc.ptr<std::uint8_t>(0) + desc.total());
  return out;
}

std::vector<Match> match_ratio_test(const DescriptorSet& a,
                                    const DescriptorSet& b, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidInputError("match_ratio_test: ratio must be in (0,1)");
  }
  check_compatible(a, b);
  std::vector<Match> out;
  if (a.count() == 0 || b.count() < 2) return out;

  // Squared/Hamming distances compare the same way as true distances.
  const double ratio_cmp =
      a.kind == DescriptorKind::kReal ? ratio * ratio : ratio;
  std::vector<Match> candidates;
  for (std::size_t i = 0; i < a.count(); ++i) {
    const TwoNearest nn = two_nearest(a, i, b);
    if (nn.best >= 0 && nn.d1 < ratio_cmp * nn.d2) {
      candidates.push_back({int(i), nn.best, nn.d1});
    }
  }
  // One match per b-index: best distance wins, ties to the lowest a-index.
  std::vector<int> winner(b.count(), -1);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    int& w = winner[candidates[c].index_b];
    if (w < 0 || candidates[c].distance < candidates[w].distance) {
      w = int(c);
    }
  }
  for (std::size_t j = 0; j < winner.size(); ++j) {
    if (winner[j] >= 0) {
      Match mt = candidates[winner[j]];
      mt.distance = reported_distance(a, mt.distance);
      out.push_back(mt);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Match& x, const Match& y) { return x.index_a < y.index_a; });
  return out;
}

std::vector<Match> match_cross_check(const DescriptorSet& a,
                                     const DescriptorSet& b) {
  check_compatible(a, b);
  std::vector<Match> out;
  const std::size_t na = a.count(), nb = b.count();
  if (na == 0 || nb == 0) return out;

  std::vector<TwoNearest> a_to_b(na);
  for (std::size_t i = 0; i < na; ++i) a_to_b[i] = two_nearest(a, i, b);
  std::vector<TwoNearest> b_to_a(nb);
  for (std::size_t j = 0; j < nb; ++j) b_to_a[j] = two_nearest(b, j, a);

  for (std::size_t i = 0; i < na; ++i) {
    const int j = a_to_b[i].best;
    if (j >= 0 && b_to_a[j].best == int(i)) {
      out.push_back({int(i), j, reported_distance(a, a_to_b[i].d1)});
    }
  }
  return out;
}

void export_keypoints(const std::vector<Keypoint>& kps, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("export_keypoints: cannot open " + path);
  for (std::size_t i = 0; i < kps.size(); ++i) {
    f << i << ' ' << format_double(kps[i].x) << ' ' << format_double(kps[i].y)
      << ' ' << format_double(kps[i].size) << ' ' << format_double(kps[i].angle)
      << '\n';
  }
}

}  // namespace dielink::features
