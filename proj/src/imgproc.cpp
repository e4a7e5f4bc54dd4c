#include "dielink/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dielink::imgproc {

namespace {

// Symmetric reflection (half-sample): a b c -> b a | a b c | c b
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i = ((i % period) + period) % period;
  return i < n ? i : period - 1 - i;
}

float clamp_range(double v, float range) {
  return static_cast<float>(std::clamp(v, 0.0, double(range)));
}

}  // namespace

GrayImage to_grayscale(const RgbImage& rgb) {
  rgb.validate("to_grayscale");
  GrayImage out(rgb.width, rgb.height, 0.0f, rgb.range);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      double v = 0.299 * rgb.at(y, x, 0) + 0.587 * rgb.at(y, x, 1) +
                 0.114 * rgb.at(y, x, 2);
      out.at(y, x) = clamp_range(v, rgb.range);
    }
  }
  return out;
}

GrayImage circular_crop(const GrayImage& img, const CropSpec& spec,
                        PreprocDiagnostics* diag) {
  img.validate("circular_crop");
  if (spec.radius > 0.0 &&
      spec.radius > 0.5 * std::min(img.width, img.height)) {
    throw InvalidInputError("circular_crop: radius exceeds min(w,h)/2");
  }

  double cx = 0.5 * (img.width - 1);
  double cy = 0.5 * (img.height - 1);
  if (spec.center_mode == CenterMode::kMassCenter) {
    double sum = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const double w = img.at(y, x);
        sum += w;
        sx += w * x;
        sy += w * y;
      }
    }
    if (sum > 0.0) {
      cx = sx / sum;
      cy = sy / sum;
    } else if (diag) {
      diag->mass_center_fallback = true;
    }
  }

  double radius = spec.radius;
  if (radius <= 0.0) {
    // largest disk inscribed about the chosen center
    radius = std::min(std::min(cx, img.width - 1 - cx),
                      std::min(cy, img.height - 1 - cy));
    radius = std::max(radius, 1.0);
  }

  GrayImage out(img.width, img.height, spec.fill_value, img.range);
  const double r2 = radius * radius;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      out.at(y, x) = (dx * dx + dy * dy <= r2) ? img.at(y, x) : spec.fill_value;
    }
  }
  return out;
}

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  img.validate("clahe");
  if (params.tiles_x <= 0 || params.tiles_y <= 0 || params.bins < 2) {
    throw InvalidInputError("clahe: bad tile grid or bin count");
  }
  const int tx = std::min(params.tiles_x, img.width);
  const int ty = std::min(params.tiles_y, img.height);
  const int bins = params.bins;
  const double range = img.range;
  const double to_bin = (bins - 1) / range;
  const double from_bin = range / (bins - 1);

  const double tile_w = double(img.width) / tx;
  const double tile_h = double(img.height) / ty;

  // Per-tile lookup tables bin -> output intensity.
  std::vector<std::vector<double>> luts(std::size_t(tx) * ty);
  for (int tj = 0; tj < ty; ++tj) {
    const int y0 = int(std::floor(tj * tile_h));
    const int y1 = (tj == ty - 1) ? img.height : int(std::floor((tj + 1) * tile_h));
    for (int ti = 0; ti < tx; ++ti) {
      const int x0 = int(std::floor(ti * tile_w));
      const int x1 = (ti == tx - 1) ? img.width : int(std::floor((ti + 1) * tile_w));

      std::vector<double> hist(bins, 0.0);
      const double n_pixels = double(x1 - x0) * (y1 - y0);
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          int b = int(std::lround(img.at(y, x) * to_bin));
          hist[std::clamp(b, 0, bins - 1)] += 1.0;
        }
      }

      // Clip and spread the excess uniformly.
      const double clip = std::max(1.0, params.clip_limit * n_pixels / bins);
      double excess = 0.0;
      for (double& h : hist) {
        if (h > clip) {
          excess += h - clip;
          h = clip;
        }
      }
      if (excess > 0.0) {
        const double add = excess / bins;
        for (double& h : hist) h += add;
      }

      std::vector<double> lut(bins, 0.0);
      double cdf = 0.0;
      double cdf_min = -1.0;
      for (int b = 0; b < bins; ++b) {
        cdf += hist[b];
        if (cdf_min < 0.0 && hist[b] > 0.0) cdf_min = cdf;
        lut[b] = cdf;
      }
      if (cdf_min < 0.0 || n_pixels - cdf_min <= 0.0) {
        // Single occupied bin and nothing redistributed: keep values as-is.
        for (int b = 0; b < bins; ++b) lut[b] = b * from_bin;
      } else {
        const double denom = n_pixels - cdf_min;
        for (int b = 0; b < bins; ++b) {
          lut[b] = std::clamp((lut[b] - cdf_min) / denom, 0.0, 1.0) * range;
        }
      }
      luts[std::size_t(tj) * tx + ti] = std::move(lut);
    }
  }

  // Bilinear interpolation between the four neighboring tile mappings.
  GrayImage out(img.width, img.height, 0.0f, img.range);
  for (int y = 0; y < img.height; ++y) {
    const double fy = (y + 0.5) / tile_h - 0.5;
    int j0 = int(std::floor(fy));
    const double wy = fy - j0;
    int j1 = std::clamp(j0 + 1, 0, ty - 1);
    j0 = std::clamp(j0, 0, ty - 1);
    for (int x = 0; x < img.width; ++x) {
      const double fx = (x + 0.5) / tile_w - 0.5;
      int i0 = int(std::floor(fx));
      const double wx = fx - i0;
      int i1 = std::clamp(i0 + 1, 0, tx - 1);
      i0 = std::clamp(i0, 0, tx - 1);

      // Interpolate within the bin as well: a nearest-bin lookup would turn
      // the mapping into a staircase whose steps (amplified by the
      // equalization gain) imprint a quantization texture on the output.
      const double fb =
          std::clamp(double(img.at(y, x)) * to_bin, 0.0, double(bins - 1));
      const int b0 = std::min(int(fb), bins - 2);
      const double wb = fb - b0;
      auto lerp_lut = [&](const std::vector<double>& lut) {
        return (1.0 - wb) * lut[b0] + wb * lut[b0 + 1];
      };
      const double v00 = lerp_lut(luts[std::size_t(j0) * tx + i0]);
      const double v01 = lerp_lut(luts[std::size_t(j0) * tx + i1]);
      const double v10 = lerp_lut(luts[std::size_t(j1) * tx + i0]);
      const double v11 = lerp_lut(luts[std::size_t(j1) * tx + i1]);
      const double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                       wy * ((1 - wx) * v10 + wx * v11);
      out.at(y, x) = clamp_range(v, img.range);
    }
  }
  return out;
}

GrayImage nl_means_denoise(const GrayImage& img, const NlMeansParams& params) {
  img.validate("nl_means_denoise");
  const int pr = params.patch_size / 2;
  const int sr = params.search_window / 2;
  if (params.patch_size < 1 || params.patch_size % 2 == 0 ||
      params.search_window <= params.patch_size ||
      params.search_window % 2 == 0 ||
      params.search_window >= std::min(img.width, img.height)) {
    throw InvalidInputError(
        "nl_means_denoise: need odd patch_size < search_window < min(w,h)");
  }

  const int w = img.width, h = img.height;
  const int pad = sr + pr;
  const int pw = w + 2 * pad, ph = h + 2 * pad;
  std::vector<double> padded(std::size_t(pw) * ph);
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect_index(y - pad, h);
    for (int x = 0; x < pw; ++x) {
      padded[std::size_t(y) * pw + x] = img.at(sy, reflect_index(x - pad, w));
    }
  }

  const double strength = params.filter_strength * img.range / 255.0;
  const double h2 = strength * strength;
  const double patch_area = double(params.patch_size) * params.patch_size;
  const bool exact_only = !(h2 > 0.0);

  std::vector<double> acc(std::size_t(w) * h, 0.0);
  std::vector<double> wsum(std::size_t(w) * h, 0.0);
  // Integral image of the squared shifted difference, one offset at a time;
  // box sums give patchwise SSDs in O(1) per pixel.
  std::vector<double> integral(std::size_t(pw + 1) * (ph + 1), 0.0);

  for (int dy = -sr; dy <= sr; ++dy) {
    for (int dx = -sr; dx <= sr; ++dx) {
      for (int y = 0; y < ph; ++y) {
        const int ys = std::clamp(y + dy, 0, ph - 1);
        double row_sum = 0.0;
        for (int x = 0; x < pw; ++x) {
          const int xs = std::clamp(x + dx, 0, pw - 1);
          const double d =
              padded[std::size_t(y) * pw + x] - padded[std::size_t(ys) * pw + xs];
          row_sum += d * d;
          integral[std::size_t(y + 1) * (pw + 1) + (x + 1)] =
              integral[std::size_t(y) * (pw + 1) + (x + 1)] + row_sum;
        }
      }
      for (int y = 0; y < h; ++y) {
        const int py = y + pad;
        for (int x = 0; x < w; ++x) {
          const int px = x + pad;
          const int y0 = py - pr, y1 = py + pr + 1;
          const int x0 = px - pr, x1 = px + pr + 1;
          const double ssd =
              integral[std::size_t(y1) * (pw + 1) + x1] -
              integral[std::size_t(y0) * (pw + 1) + x1] -
              integral[std::size_t(y1) * (pw + 1) + x0] +
              integral[std::size_t(y0) * (pw + 1) + x0];
          const double d2 = std::max(0.0, ssd) / patch_area;
          double weight;
          if (exact_only) {
            weight = d2 == 0.0 ? 1.0 : 0.0;
          } else {
            weight = std::exp(-d2 / h2);
          }
          acc[std::size_t(y) * w + x] +=
              weight * padded[std::size_t(py + dy) * pw + (px + dx)];
          wsum[std::size_t(y) * w + x] += weight;
        }
      }
    }
  }

  GrayImage out(w, h, 0.0f, img.range);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * w + x;
      out.at(y, x) = clamp_range(acc[i] / wsum[i], img.range);
    }
  }
  return out;
}

double total_variation(const GrayImage& img) {
  double tv = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double gx = (x + 1 < img.width) ? img.at(y, x + 1) - img.at(y, x) : 0.0;
      const double gy = (y + 1 < img.height) ? img.at(y + 1, x) - img.at(y, x) : 0.0;
      tv += std::sqrt(gx * gx + gy * gy);
    }
  }
  return tv;
}

GrayImage tv_denoise(const GrayImage& img, const TvParams& params,
                     PreprocDiagnostics* diag) {
  img.validate("tv_denoise");
  if (!(params.weight > 0.0)) {
    throw InvalidInputError("tv_denoise: weight must be > 0");
  }
  const int w = img.width, h = img.height;
  const std::size_t n = img.pixel_count();
  const double weight = params.weight * img.range;

  // Chambolle's dual projection scheme for the ROF model.
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = img.data[i];
  std::vector<double> px(n, 0.0), py(n, 0.0), out(f), gx(n), gy(n), d(n, 0.0);

  const double tau = 0.25;
  double e_init = 0.0, e_prev = 0.0;
  bool converged = false;
  int iter = 0;
  for (; iter < params.max_iters; ++iter) {
    if (iter > 0) {
      // d = divergence of p (adjoint of the forward-difference gradient)
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = std::size_t(y) * w + x;
          double div = 0.0;
          if (x < w - 1) div += px[i];
          if (x > 0) div -= px[i - 1];
          if (y < h - 1) div += py[i];
          if (y > 0) div -= py[i - w];
          d[i] = div;
          out[i] = f[i] + div;
        }
      }
    }

    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += d[i] * d[i];

    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = std::size_t(y) * w + x;
        gx[i] = (x < w - 1) ? out[i + 1] - out[i] : 0.0;
        gy[i] = (y < h - 1) ? out[i + w] - out[i] : 0.0;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double norm = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
      energy += weight * norm;
      const double denom = 1.0 + tau / weight * norm;
      px[i] = (px[i] - tau * gx[i]) / denom;
      py[i] = (py[i] - tau * gy[i]) / denom;
    }
    energy /= double(n);

    if (iter == 0) {
      e_init = energy;
      e_prev = energy;
    } else {
      if (std::abs(e_prev - energy) < params.tol * e_init) {
        converged = true;
        ++iter;
        break;
      }
      e_prev = energy;
    }
  }
  if (diag) {
    diag->tv_converged = converged;
    diag->tv_iterations = iter;
  }

  GrayImage result(w, h, 0.0f, img.range);
  for (std::size_t i = 0; i < n; ++i) {
    result.data[i] = clamp_range(out[i], img.range);
  }
  return result;
}

GrayImage sobel(const GrayImage& img) {
  img.validate("sobel");
  if (img.width < 3 || img.height < 3) {
    throw InvalidInputError("sobel: image must be at least 3x3");
  }
  const int w = img.width, h = img.height;
  std::vector<double> mag(std::size_t(w) * h);
  double max_mag = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto px = [&](int yy, int xx) {
        return double(img.at(reflect_index(yy, h), reflect_index(xx, w)));
      };
      const double gx = -px(y - 1, x - 1) + px(y - 1, x + 1) -
                        2 * px(y, x - 1) + 2 * px(y, x + 1) -
                        px(y + 1, x - 1) + px(y + 1, x + 1);
      const double gy = -px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1) +
                        px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1);
      const double m = std::sqrt(gx * gx + gy * gy);
      mag[std::size_t(y) * w + x] = m;
      max_mag = std::max(max_mag, m);
    }
  }
  GrayImage out(w, h, 0.0f, img.range);
  if (max_mag > 0.0) {
    const double scale = img.range / max_mag;
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
      out.data[i] = clamp_range(mag[i] * scale, img.range);
    }
  }
  return out;
}

namespace {

void observe(const StageObserver& obs, int index, const std::string& name,
             const GrayImage& img) {
  if (obs) obs(index, name, img);
}

}  // namespace

GrayImage preproc_ssim(const RgbImage& rgb, const SsimPreprocParams& params,
                       PreprocDiagnostics* diag, const StageObserver& observer) {
  GrayImage g = to_grayscale(rgb);
  observe(observer, 0, "grayscale", g);
  CropSpec crop = params.crop;
  crop.center_mode = CenterMode::kMassCenter;
  g = circular_crop(g, crop, diag);
  observe(observer, 1, "crop", g);
  g = clahe(g, params.clahe);
  observe(observer, 2, "clahe", g);
  g = nl_means_denoise(g, params.nlm);
  observe(observer, 3, "denoise", g);
  return g;
}

GrayImage preproc_procrustes(const RgbImage& rgb,
                             const ProcrustesPreprocParams& params,
                             PreprocDiagnostics* diag,
                             const StageObserver& observer) {
  GrayImage g = to_grayscale(rgb);
  observe(observer, 0, "grayscale", g);
  CropSpec crop = params.crop;
  crop.center_mode = CenterMode::kGeometricCenter;
  g = circular_crop(g, crop, diag);
  observe(observer, 1, "crop", g);
  g = tv_denoise(g, params.tv, diag);
  observe(observer, 2, "tv1", g);
  g = clahe(g, params.clahe);
  observe(observer, 3, "clahe", g);
  g = tv_denoise(g, params.tv, diag);
  observe(observer, 4, "tv2", g);
  g = sobel(g);
  observe(observer, 5, "sobel", g);
  g = circular_crop(g, crop, diag);
  observe(observer, 6, "crop2", g);
  return g;
}

}  // namespace dielink::imgproc
