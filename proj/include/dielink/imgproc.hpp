#pragma once

#include <functional>
#include <string>

#include "dielink/image.hpp"

namespace dielink::imgproc {

enum class CenterMode { kMassCenter, kGeometricCenter };

struct CropSpec {
  CenterMode center_mode = CenterMode::kMassCenter;
  // radius in pixels; <= 0 selects the largest disk inscribed about the
  // chosen center. An explicit radius must satisfy 0 < r <= min(w,h)/2.
  double radius = 0.0;
  float fill_value = 0.0f;
};

struct ClaheParams {
  double clip_limit = 2.0;  // relative to the uniform bin count per tile
  int tiles_x = 8;
  int tiles_y = 8;
  int bins = 256;
};

struct NlMeansParams {
  int patch_size = 7;       // odd
  int search_window = 21;   // odd, > patch_size
  double filter_strength = 10.0;  // on a [0,255] scale; rescaled to the image range
};

struct TvParams {
  double weight = 0.1;  // relative to the dynamic range
  int max_iters = 200;
  double tol = 1e-4;
};

// Per-call flags surfaced by stages with fallback/convergence behavior.
struct PreprocDiagnostics {
  bool mass_center_fallback = false;  // all-zero image, geometric center used
  bool tv_converged = true;
  int tv_iterations = 0;
};

// Optional sink for intermediate pipeline stages (debug image dumps).
using StageObserver =
    std::function<void(int stage_index, const std::string& stage_name,
                       const GrayImage& stage_output)>;

// ITU-R BT.601 luminance: 0.299 r + 0.587 g + 0.114 b.
GrayImage to_grayscale(const RgbImage& rgb);

GrayImage circular_crop(const GrayImage& img, const CropSpec& spec,
                        PreprocDiagnostics* diag = nullptr);

GrayImage clahe(const GrayImage& img, const ClaheParams& params);

GrayImage nl_means_denoise(const GrayImage& img, const NlMeansParams& params);

GrayImage tv_denoise(const GrayImage& img, const TvParams& params,
                     PreprocDiagnostics* diag = nullptr);

// Gradient magnitude of the 3x3 Sobel pair, rescaled so the maximum hits the
// dynamic range (a constant image maps to all zeros).
GrayImage sobel(const GrayImage& img);

// Isotropic total variation with forward differences.
double total_variation(const GrayImage& img);

struct SsimPreprocParams {
  CropSpec crop{CenterMode::kMassCenter, 0.0, 0.0f};
  ClaheParams clahe;
  NlMeansParams nlm;
};

struct ProcrustesPreprocParams {
  CropSpec crop{CenterMode::kGeometricCenter, 0.0, 0.0f};
  TvParams tv;
  ClaheParams clahe;
};

// grayscale -> mass-center circular crop -> CLAHE -> NL-means
GrayImage preproc_ssim(const RgbImage& rgb, const SsimPreprocParams& params,
                       PreprocDiagnostics* diag = nullptr,
                       const StageObserver& observer = {});

// grayscale -> centered crop -> TV -> CLAHE -> TV -> Sobel -> centered crop
GrayImage preproc_procrustes(const RgbImage& rgb,
                             const ProcrustesPreprocParams& params,
                             PreprocDiagnostics* diag = nullptr,
                             const StageObserver& observer = {});

}  // namespace dielink::imgproc
