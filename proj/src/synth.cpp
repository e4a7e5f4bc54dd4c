#include "dielink/synth.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "dielink/geometry.hpp"
#include "dielink/image.hpp"

namespace dielink::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller; avoids std::normal_distribution so streams are identical
// across standard libraries.
double gaussian(std::mt19937_64& rng) {
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Band-limited relief: random values on an n x n lattice, bilinearly
// interpolated across the image. Summing a few octaves gives every part of
// the coin face die-specific structure at several scales, which is what
// keypoint detection and windowed statistics both need.
struct ValueNoise {
  int cells;
  std::vector<double> lattice;  // (cells+1)^2

  ValueNoise(int n, std::mt19937_64& rng) : cells(n), lattice((n + 1) * (n + 1)) {
    for (auto& v : lattice) v = uniform(rng, -1.0, 1.0);
  }

  double at(double fx, double fy) const {  // fx, fy in [0, 1]
    const double gx = fx * cells, gy = fy * cells;
    const int x0 = std::clamp(int(gx), 0, cells - 1);
    const int y0 = std::clamp(int(gy), 0, cells - 1);
    const double ax = gx - x0, ay = gy - y0;
    const int w = cells + 1;
    const double v00 = lattice[y0 * w + x0], v01 = lattice[y0 * w + x0 + 1];
    const double v10 = lattice[(y0 + 1) * w + x0], v11 = lattice[(y0 + 1) * w + x0 + 1];
    return (v00 * (1 - ax) + v01 * ax) * (1 - ay) +
           (v10 * (1 - ax) + v11 * ax) * ay;
  }
};

// Die relief only — the coin blank (disk, rim, background) is composited at
// render time so the impression can sit off-center on the blank, the way a
// real strike does. Wavelengths scale with the image so relief elements stay
// registration-friendly (die detail spans many pixels, like a macro
// photograph).
GrayImage blur3(const GrayImage& img);

GrayImage make_die_texture(int size, std::mt19937_64& rng) {
  GrayImage img(size, size, 0.0f, 255.0f);
  const double c = 0.5 * (size - 1);

  const ValueNoise coarse(5, rng), medium(6, rng), fine(8, rng);

  // Heterogeneous devices rather than one repeated blob shape: descriptor
  // matching lives off locally *unique* structure, and a die covered in
  // near-identical bumps fails Lowe's ratio test almost everywhere. Mixing
  // anisotropic ridges, rings, and round bosses of widely varying size keeps
  // hundreds of matches per linked pair, which is what pins down the scale
  // and angle of the alignment accurately enough for the SSIM stage.
  struct Device {
    int kind;                  // 0 = boss, 1 = ridge, 2 = annulet
    double x, y;               // center
    double sigma;              // width scale
    double amp;                // signed relief height
    double cos_a, sin_a;       // ridge orientation
    double aspect;             // ridge elongation
    double ring_r;             // annulet radius
  };
  std::vector<Device> devices;
  const int n_devices = 70;
  devices.reserve(n_devices);
  for (int k = 0; k < n_devices; ++k) {
    const double ang = uniform(rng, 0.0, 2.0 * kPi);
    const double rad = 0.34 * size * std::sqrt(uniform01(rng));
    Device d{};
    d.kind = int(uniform(rng, 0.0, 3.0)) % 3;
    d.x = c + rad * std::cos(ang);
    d.y = c + rad * std::sin(ang);
    d.sigma = uniform(rng, size / 36.0, size / 14.0);
    d.amp = uniform(rng, 30.0, 70.0) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
    const double o = uniform(rng, 0.0, kPi);
    d.cos_a = std::cos(o);
    d.sin_a = std::sin(o);
    d.aspect = uniform(rng, 2.0, 5.0);
    d.ring_r = uniform(rng, 2.0, 4.0) * d.sigma;
    devices.push_back(d);
  }
  // A second, sparse population of small sharp bosses ("pellets"). The broad
  // relief above is too smooth to localize precisely — keypoints on it
  // wander by a pixel, and twenty matches with pixel-level noise leave the
  // fitted scale off by enough to misplace the rim. Pellets a few pixels
  // wide localize to a fraction of a pixel and pin the fit down. They are
  // kept sparse and above ~12 px wavelength so the area paying extra
  // resampling tax stays small.
  const int n_pellets = 48;
  for (int k = 0; k < n_pellets; ++k) {
    const double ang = uniform(rng, 0.0, 2.0 * kPi);
    const double rad = 0.34 * size * std::sqrt(uniform01(rng));
    Device d{};
    d.kind = 0;
    d.x = c + rad * std::cos(ang);
    d.y = c + rad * std::sin(ang);
    d.sigma = uniform(rng, 2.5, 4.5);
    d.amp = uniform(rng, 35.0, 55.0) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
    d.cos_a = 1.0;
    d.sin_a = 0.0;
    d.aspect = 1.0;
    d.ring_r = 3.0 * d.sigma;
    devices.push_back(d);
  }

  // Deliberately no fine "metal grain": the contrast equalizer in the
  // comparison pipeline renormalizes local amplitude, so the only thing the
  // generator really controls is the spatial scale of the relief — and
  // structure much below ~6 px wavelength ends up in the band that a
  // half-pixel bilinear warp attenuates hardest. Since only one image of
  // each pair is warped during alignment, that attenuation is asymmetric
  // and puts a floor under every noise-free linked-pair distance.

  // Compose the background relief, then remove its best-fit plane over the
  // coin area. The low-octave noise routinely leaves one side of the die
  // brighter than the other; that tilt drags the brightness centroid away
  // from the geometric center, and the centroid is what the comparison
  // pipeline crops around. Shift it far enough and the crop disk amputates a
  // crescent of the coin — by a different amount for every impression —
  // which becomes an irremovable difference between coins of the same die.
  // Removing the plane costs nothing perceptually (the pipeline's contrast
  // equalizer flattens broad gradients anyway) and keeps the centroid within
  // a few pixels of center, far inside the crop margin.
  GrayImage field(size, size, 0.0f, 255.0f);
  const double bal_r = 0.41 * size;
  double sxx = 0, syy = 0, sxv = 0, syv = 0, sv = 0, sn = 0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double fx = x / double(size - 1), fy = y / double(size - 1);
      const double t = 26.0 * coarse.at(fx, fy) + 20.0 * medium.at(fx, fy) +
                       16.0 * fine.at(fx, fy);
      field.at(y, x) = static_cast<float>(t);
      const double dx = x - c, dy = y - c;
      if (dx * dx + dy * dy <= bal_r * bal_r) {
        sxx += dx * dx;
        syy += dy * dy;
        sxv += t * dx;
        syv += t * dy;
        sv += t;
        sn += 1.0;
      }
    }
  }
  const double plane_a = sxv / sxx, plane_b = syv / syy, plane_m = sv / sn;

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - c, dy = y - c;
      double v = 110.0 + double(field.at(y, x)) - plane_m - plane_a * dx -
                 plane_b * dy;
      for (const auto& d : devices) {
        const double dx = x - d.x, dy = y - d.y;
        double q;
        switch (d.kind) {
          case 1: {  // ridge: elongated along its orientation
            const double u = (dx * d.cos_a + dy * d.sin_a) / d.aspect;
            const double w = -dx * d.sin_a + dy * d.cos_a;
            q = (u * u + w * w) / (d.sigma * d.sigma);
            break;
          }
          case 2: {  // annulet: raised circle of radius ring_r
            const double rr = std::sqrt(dx * dx + dy * dy) - d.ring_r;
            q = rr * rr / (d.sigma * d.sigma);
            break;
          }
          default:  // boss: round bump
            q = (dx * dx + dy * dy) / (d.sigma * d.sigma);
        }
        // Each device is relief ringed by a shallow moat, tuned so its
        // integral is exactly zero. This matters more than it looks: a die
        // ends up with dozens of devices, and if their signed masses don't
        // cancel, the surplus drags the die's brightness centroid off
        // center — annulets alone integrate to several times a boss's mass,
        // and one lopsided die shifts its centroid by tens of pixels. The
        // comparison pipeline crops around that centroid, and once the crop
        // disk bites into the coin it removes a different crescent from
        // every impression — an artificial difference between same-die
        // coins. Zero-mass devices keep the centroid pinned no matter how
        // the amplitude signs come out.
        if (q < 25.0) {
          const double lam2 = 2.56;  // moat lobe: sigma scaled by 1.6
          const double moat = (d.kind == 2)
                                  ? std::exp(-0.5 * q / lam2) / 1.6
                                  : std::exp(-0.5 * q / lam2) / lam2;
          v += d.amp * (std::exp(-0.5 * q) - moat);
        }
      }
      // Soft-compress instead of clamping: a hard clamp would cut ledges
      // into overlapping device cores, and — more important — leave no
      // headroom for the per-coin illumination gradient. Any pixel that
      // saturates under one coin's lighting but not its sibling's becomes a
      // genuine structural difference that no alignment can remove.
      img.at(y, x) = static_cast<float>(110.0 + 95.0 * std::tanh((v - 110.0) / 95.0));
    }
  }

  // Band-limit the relief before it is ever resampled: the lattice creases
  // and clamp ledges carry broadband energy that decorrelates under the
  // sub-pixel warps downstream, while the structure that registration keys
  // on is wider than this kernel.
  return blur3(blur3(img));
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const int r = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) {
    k[t + r] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += k[t + r];
  }
  for (double& w : k) w /= sum;

  GrayImage tmp(img.width, img.height, 0.0f, img.range);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double v = 0.0;
      for (int t = -r; t <= r; ++t) {
        const int xx = std::clamp(x + t, 0, img.width - 1);
        v += k[t + r] * img.at(y, xx);
      }
      tmp.at(y, x) = float(v);
    }
  }
  GrayImage out(img.width, img.height, 0.0f, img.range);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double v = 0.0;
      for (int t = -r; t <= r; ++t) {
        const int yy = std::clamp(y + t, 0, img.height - 1);
        v += k[t + r] * tmp.at(yy, x);
      }
      out.at(y, x) = float(v);
    }
  }
  return out;
}

GrayImage blur3(const GrayImage& img) { return gaussian_blur(img, 0.7); }

// A coin = the struck blank (disk + raised rim + die relief, on a black
// background) seen through a small whole-scene similarity, an illumination
// gradient, optical blur, and sensor noise. The black background matters:
// the mass-center crop later lands its circle in zero-valued background for
// every coin, so crops of linked coins stay comparable.
GrayImage render_coin(const GrayImage& die, const SynthParams& p,
                      std::mt19937_64& rng) {
  const int size = die.width;
  const double c = 0.5 * (size - 1);
  const double blank_r = 0.41 * size;
  const double rim_r = 0.37 * size;

  GrayImage struck(size, size, 0.0f, 255.0f);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double r = std::hypot(x - c, y - c);
      // Smoothstep rolloff: the flan edge is the strongest gradient in the
      // scene, and a hard ramp there dominates the resampling error budget
      // of every later sub-pixel warp. Registration never keys on it (a
      // circle is rotation-ambiguous), so a soft edge costs nothing.
      const double u = std::clamp((blank_r - r) / 10.0, 0.0, 1.0);
      const double inside = u * u * (3.0 - 2.0 * u);
      if (inside == 0.0) continue;
      // Budgeted so that die (<= 205) + rim stays below 255 even after the
      // strongest illumination gradient: saturation must never depend on
      // which way a particular coin happened to be lit.
      const double rim = (r - rim_r) / 7.0;
      const double v = die.at(y, x) + 30.0 * std::exp(-0.5 * rim * rim);
      struck.at(y, x) = static_cast<float>(std::clamp(inside * v, 0.0, 255.0));
    }
  }

  geometry::SimilarityTransform t;
  t.theta = uniform(rng, -p.max_rotation_deg, p.max_rotation_deg) * kPi / 180.0;
  t.s = 1.0 + uniform(rng, -p.max_scale_jitter, p.max_scale_jitter);
  const double cosT = std::cos(t.theta), sinT = std::sin(t.theta);
  const double shift_x = uniform(rng, -p.max_translation, p.max_translation);
  const double shift_y = uniform(rng, -p.max_translation, p.max_translation);
  t.tx = c - t.s * (cosT * c - sinT * c) + shift_x;
  t.ty = c - t.s * (sinT * c + cosT * c) + shift_y;

  GrayImage out = geometry::apply_similarity(struck, t);

  const double light_dir = uniform(rng, 0.0, 2.0 * kPi);
  const double g = uniform(rng, 0.3, 1.0) * p.illumination;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double proj = ((x - c) * std::cos(light_dir) +
                           (y - c) * std::sin(light_dir)) /
                          double(size);
      out.at(y, x) = static_cast<float>(
          std::clamp(double(out.at(y, x)) * (1.0 + 2.0 * g * proj), 0.0, 255.0));
    }
  }

  // Optical blur. This sets the minimum edge width in the final image, and
  // edge width is what the alignment warp taxes: when one image of a pair
  // is bilinearly resampled at a fractional offset, an edge loses contrast
  // in proportion to how steep it is, and the contrast equalizer in the
  // comparison pipeline can renormalize amplitude but cannot re-narrow an
  // edge. Detection still works: the keypoint scale space starts blurrier
  // than this.
  out = gaussian_blur(out, 1.0);

  if (p.noise_level > 0.0) {
    const double sigma = p.noise_level * 255.0;
    for (auto& v : out.data) {
      v = static_cast<float>(
          std::clamp(double(v) + sigma * gaussian(rng), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace

manifest::Manifest generate(const SynthParams& params,
                            const std::string& out_dir,
                            const std::string& dataset_id) {
  if (params.n_dies < 1 || params.coins_per_die < 1 || params.image_size < 64) {
    throw InvalidInputError("synth: need n_dies>=1, coins_per_die>=1, size>=64");
  }
  std::filesystem::create_directories(out_dir);

  manifest::Manifest m;
  m.dataset_id = dataset_id;
  std::mt19937_64 rng(params.seed);
  for (int die = 0; die < params.n_dies; ++die) {
    const GrayImage texture = make_die_texture(params.image_size, rng);
    if (std::getenv("DIELINK_SYNTH_DEBUG")) {
      write_image_gray(texture,
                       (std::filesystem::path(out_dir) /
                        ("debug_die" + std::to_string(die) + ".png"))
                           .string(),
                       16);
    }
    for (int k = 0; k < params.coins_per_die; ++k) {
      const GrayImage coin = render_coin(texture, params, rng);
      manifest::CoinRecord rec;
      rec.coin_id = dataset_id + "_d" + std::to_string(die) + "_c" + std::to_string(k);
      rec.die_label = "die" + std::to_string(die);
      rec.dataset_id = dataset_id;
      rec.image_path =
          (std::filesystem::path(out_dir) / (rec.coin_id + ".png")).string();
      // 16-bit output: 8-bit rounding would stamp each coin with its own
      // quantization texture, which puts a floor under the noise-free
      // distance of linked pairs.
      write_image_gray(coin, rec.image_path, 16);
      m.entries.push_back(std::move(rec));
    }
  }
  return m;
}

}  // namespace dielink::synth
