#include "dielink/ssim.hpp"

#include <cmath>
#include <stdexcept>

namespace dielink::ssim {

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i = ((i % period) + period) % period;
  return i < n ? i : period - 1 - i;
}

void check_pair(const GrayImage& a, const GrayImage& b,
                const SsimParams& params) {
  a.validate("ssim");
  b.validate("ssim");
  if (!a.same_shape(b)) {
    throw InvalidInputError("ssim: image dimensions differ");
  }
  if (a.range != b.range) {
    throw InvalidInputError("ssim: dynamic ranges differ");
  }
  if (params.window_size < 3 || params.window_size % 2 == 0) {
    throw InvalidInputError("ssim: window_size must be odd and >= 3");
  }
  if (!(params.k1 > 0.0) || !(params.k2 > 0.0)) {
    throw InvalidInputError("ssim: K1 and K2 must be > 0");
  }
}

// Raw second moments kept as variances; converting to standard deviations
// only at the API boundary preserves the exact self-similarity identities.
struct RawStats {
  int width = 0, height = 0;
  std::vector<double> mu_a, mu_b, var_a, var_b, cov_ab;
};

RawStats raw_stats(const GrayImage& a, const GrayImage& b,
                   const SsimParams& params) {
  const std::vector<double> w = window_weights(params);
  const int size = params.window_size;
  const int r = size / 2;
  const int width = a.width, height = a.height;

  RawStats st;
  st.width = width;
  st.height = height;
  const std::size_t n = a.pixel_count();
  st.mu_a.resize(n);
  st.mu_b.resize(n);
  st.var_a.resize(n);
  st.var_b.resize(n);
  st.cov_ab.resize(n);

  std::vector<int> col_lut(std::size_t(width) * size), row_lut(std::size_t(height) * size);
  for (int x = 0; x < width; ++x)
    for (int k = 0; k < size; ++k)
      col_lut[std::size_t(x) * size + k] = reflect_index(x + k - r, width);
  for (int y = 0; y < height; ++y)
    for (int k = 0; k < size; ++k)
      row_lut[std::size_t(y) * size + k] = reflect_index(y + k - r, height);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = std::size_t(y) * width + x;
      double mu_a = 0.0, mu_b = 0.0;
      for (int ky = 0; ky < size; ++ky) {
        const int sy = row_lut[std::size_t(y) * size + ky];
        for (int kx = 0; kx < size; ++kx) {
          const int sx = col_lut[std::size_t(x) * size + kx];
          const double wk = w[std::size_t(ky) * size + kx];
          mu_a += wk * a.at(sy, sx);
          mu_b += wk * b.at(sy, sx);
        }
      }
      // Centered second pass: guarantees var >= 0 and, for bit-identical
      // inputs, cov == var bitwise.
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int ky = 0; ky < size; ++ky) {
        const int sy = row_lut[std::size_t(y) * size + ky];
        for (int kx = 0; kx < size; ++kx) {
          const int sx = col_lut[std::size_t(x) * size + kx];
          const double wk = w[std::size_t(ky) * size + kx];
          const double da = a.at(sy, sx) - mu_a;
          const double db = b.at(sy, sx) - mu_b;
          var_a += wk * (da * da);
          var_b += wk * (db * db);
          cov += wk * (da * db);
        }
      }
      st.mu_a[i] = mu_a;
      st.mu_b[i] = mu_b;
      st.var_a[i] = var_a;
      st.var_b[i] = var_b;
      st.cov_ab[i] = cov;
    }
  }
  return st;
}

ComponentMaps components_from(const RawStats& st, double range,
                              const SsimParams& params) {
  const double c1 = (params.k1 * range) * (params.k1 * range);
  const double c2 = (params.k2 * range) * (params.k2 * range);
  const double c3 = c2 / 2.0;

  ComponentMaps out;
  out.width = st.width;
  out.height = st.height;
  const std::size_t n = st.mu_a.size();
  out.l.resize(n);
  out.c.resize(n);
  out.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu_a = st.mu_a[i], mu_b = st.mu_b[i];
    const double var_a = st.var_a[i], var_b = st.var_b[i];
    const double sigma_prod = std::sqrt(var_a * var_b);
    out.l[i] = (2.0 * (mu_a * mu_b) + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
    out.c[i] = (2.0 * sigma_prod + c2) / (var_a + var_b + c2);
    out.s[i] = (st.cov_ab[i] + c3) / (sigma_prod + c3);
  }
  return out;
}

double pow_or_identity(double base, double exponent) {
  return exponent == 1.0 ? base : std::pow(base, exponent);
}

}  // namespace

std::vector<double> window_weights(const SsimParams& params) {
  const int size = params.window_size;
  std::vector<double> w(std::size_t(size) * size);
  if (params.window == WindowKind::kUniform) {
    const double v = 1.0 / (double(size) * size);
    for (double& x : w) x = v;
    return w;
  }
  if (!(params.sigma > 0.0)) {
    throw InvalidInputError("ssim: gaussian window requires sigma > 0");
  }
  const int r = size / 2;
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - r, dy = y - r;
      const double v =
          std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma * params.sigma));
      w[std::size_t(y) * size + x] = v;
      sum += v;
    }
  }
  for (double& x : w) x /= sum;
  return w;
}

LocalStatsMaps local_stats(const GrayImage& a, const GrayImage& b,
                           const SsimParams& params) {
  check_pair(a, b, params);
  RawStats st = raw_stats(a, b, params);
  LocalStatsMaps maps;
  maps.width = st.width;
  maps.height = st.height;
  maps.mu_a = std::move(st.mu_a);
  maps.mu_b = std::move(st.mu_b);
  maps.sigma_ab = std::move(st.cov_ab);
  maps.sigma_a.resize(st.var_a.size());
  maps.sigma_b.resize(st.var_b.size());
  for (std::size_t i = 0; i < st.var_a.size(); ++i) {
    maps.sigma_a[i] = std::sqrt(st.var_a[i]);
    maps.sigma_b[i] = std::sqrt(st.var_b[i]);
  }
  return maps;
}

ComponentMaps ssim_components(const GrayImage& a, const GrayImage& b,
                              const SsimParams& params) {
  check_pair(a, b, params);
  return components_from(raw_stats(a, b, params), a.range, params);
}

std::vector<double> ssim_map(const GrayImage& a, const GrayImage& b,
                             const SsimParams& params) {
  const ComponentMaps cm = ssim_components(a, b, params);
  std::vector<double> out(cm.l.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = pow_or_identity(cm.l[i], params.alpha) *
             pow_or_identity(cm.c[i], params.beta) *
             pow_or_identity(cm.s[i], params.gamma);
  }
  return out;
}

double mssim(const GrayImage& a, const GrayImage& b, const SsimParams& params) {
  const std::vector<double> map = ssim_map(a, b, params);
  double sum = 0.0;
  for (double v : map) sum += v;
  return sum / double(map.size());
}

std::vector<double> ssim_metric_map(const GrayImage& a, const GrayImage& b,
                                    const SsimParams& params) {
  const ComponentMaps cm = ssim_components(a, b, params);
  std::vector<double> out(cm.l.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(std::max(0.0, 2.0 - cm.l[i] - cm.s[i] * cm.c[i]));
  }
  return out;
}

double ssim_metric(const GrayImage& a, const GrayImage& b,
                   const SsimParams& params) {
  const std::vector<double> map = ssim_metric_map(a, b, params);
  double sum = 0.0;
  for (double v : map) sum += v;
  return sum / double(map.size());
}

}  // namespace dielink::ssim
