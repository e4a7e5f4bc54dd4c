#pragma once

#include <vector>

#include "dielink/image.hpp"

namespace dielink::ssim {

enum class WindowKind { kGaussian, kUniform };

struct SsimParams {
  WindowKind window = WindowKind::kGaussian;
  int window_size = 11;     // odd support width
  double sigma = 1.5;       // gaussian std (ignored for uniform)
  double k1 = 0.01;
  double k2 = 0.03;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
};

// Per-pixel weighted local moments. sigma_a/sigma_b are standard
// deviations; sigma_ab is the covariance (may be negative).
struct LocalStatsMaps {
  int width = 0;
  int height = 0;
  std::vector<double> mu_a, mu_b;
  std::vector<double> sigma_a, sigma_b;
  std::vector<double> sigma_ab;
};

struct ComponentMaps {
  int width = 0;
  int height = 0;
  std::vector<double> l, c, s;
};

LocalStatsMaps local_stats(const GrayImage& a, const GrayImage& b,
                           const SsimParams& params);

ComponentMaps ssim_components(const GrayImage& a, const GrayImage& b,
                              const SsimParams& params);

// S_ij = l^alpha * c^beta * s^gamma
std::vector<double> ssim_map(const GrayImage& a, const GrayImage& b,
                             const SsimParams& params);

double mssim(const GrayImage& a, const GrayImage& b, const SsimParams& params);

// M_ij = sqrt(max(0, 2 - l - s*c)); a pointwise distance in [0, sqrt(3)]
std::vector<double> ssim_metric_map(const GrayImage& a, const GrayImage& b,
                                    const SsimParams& params);

double ssim_metric(const GrayImage& a, const GrayImage& b,
                   const SsimParams& params);

// Normalized window weights for the given params (row-major size*size).
std::vector<double> window_weights(const SsimParams& params);

}  // namespace dielink::ssim
