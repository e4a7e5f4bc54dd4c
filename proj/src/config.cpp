#include "dielink/config.hpp"

#include <fstream>

namespace dielink::config {

namespace {

using nlohmann::json;

json crop_json(const imgproc::CropSpec& c) {
  return {{"radius", c.radius}, {"fill_value", c.fill_value}};
}

void crop_from(const json& j, imgproc::CropSpec& c) {
  c.radius = j.value("radius", c.radius);
  c.fill_value = j.value("fill_value", c.fill_value);
}

json clahe_json(const imgproc::ClaheParams& p) {
  return {{"clip_limit", p.clip_limit},
          {"tiles_x", p.tiles_x},
          {"tiles_y", p.tiles_y},
          {"bins", p.bins}};
}

void clahe_from(const json& j, imgproc::ClaheParams& p) {
  p.clip_limit = j.value("clip_limit", p.clip_limit);
  p.tiles_x = j.value("tiles_x", p.tiles_x);
  p.tiles_y = j.value("tiles_y", p.tiles_y);
  p.bins = j.value("bins", p.bins);
}

json nlm_json(const imgproc::NlMeansParams& p) {
  return {{"patch_size", p.patch_size},
          {"search_window", p.search_window},
          {"filter_strength", p.filter_strength}};
}

void nlm_from(const json& j, imgproc::NlMeansParams& p) {
  p.patch_size = j.value("patch_size", p.patch_size);
  p.search_window = j.value("search_window", p.search_window);
  p.filter_strength = j.value("filter_strength", p.filter_strength);
}

json tv_json(const imgproc::TvParams& p) {
  return {{"weight", p.weight}, {"max_iters", p.max_iters}, {"tol", p.tol}};
}

void tv_from(const json& j, imgproc::TvParams& p) {
  p.weight = j.value("weight", p.weight);
  p.max_iters = j.value("max_iters", p.max_iters);
  p.tol = j.value("tol", p.tol);
}

json sift_json(const features::SiftParams& p) {
  return {{"max_features", p.max_features},
          {"octave_layers", p.octave_layers},
          {"contrast_threshold", p.contrast_threshold},
          {"edge_threshold", p.edge_threshold},
          {"sigma", p.sigma}};
}

void sift_from(const json& j, features::SiftParams& p) {
  p.max_features = j.value("max_features", p.max_features);
  p.octave_layers = j.value("octave_layers", p.octave_layers);
  p.contrast_threshold = j.value("contrast_threshold", p.contrast_threshold);
  p.edge_threshold = j.value("edge_threshold", p.edge_threshold);
  p.sigma = j.value("sigma", p.sigma);
}

json ssim_json(const ssim::SsimParams& p) {
  return {{"window", p.window == ssim::WindowKind::kGaussian ? "gaussian" : "uniform"},
          {"window_size", p.window_size},
          {"sigma", p.sigma},
          {"k1", p.k1},
          {"k2", p.k2},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"gamma", p.gamma}};
}

void ssim_from(const json& j, ssim::SsimParams& p) {
  const std::string w =
      j.value("window", p.window == ssim::WindowKind::kGaussian ? "gaussian"
                                                                : "uniform");
  if (w == "gaussian") {
    p.window = ssim::WindowKind::kGaussian;
  } else if (w == "uniform") {
    p.window = ssim::WindowKind::kUniform;
  } else {
    throw InvalidInputError("config: unknown ssim window '" + w + "'");
  }
  p.window_size = j.value("window_size", p.window_size);
  p.sigma = j.value("sigma", p.sigma);
  p.k1 = j.value("k1", p.k1);
  p.k2 = j.value("k2", p.k2);
  p.alpha = j.value("alpha", p.alpha);
  p.beta = j.value("beta", p.beta);
  p.gamma = j.value("gamma", p.gamma);
}

json ransac_json(const geometry::RansacParams& p) {
  return {{"reproj_threshold", p.reproj_threshold},
          {"max_iters", p.max_iters},
          {"confidence", p.confidence}};
}

void ransac_from(const json& j, geometry::RansacParams& p) {
  p.reproj_threshold = j.value("reproj_threshold", p.reproj_threshold);
  p.max_iters = j.value("max_iters", p.max_iters);
  p.confidence = j.value("confidence", p.confidence);
}

json ssim_pipeline_json(const distance::SsimPipelineParams& p) {
  return {{"crop", crop_json(p.preproc.crop)},
          {"clahe", clahe_json(p.preproc.clahe)},
          {"nl_means", nlm_json(p.preproc.nlm)},
          {"sift", sift_json(p.sift)},
          {"match_ratio", p.match_ratio},
          {"min_matches", p.min_matches},
          {"scale_gate_tol", p.scale_gate_tol},
          {"robust_similarity", p.robust_similarity},
          {"ssim", ssim_json(p.ssim)}};
}

void ssim_pipeline_from(const json& j, distance::SsimPipelineParams& p) {
  if (j.contains("crop")) crop_from(j["crop"], p.preproc.crop);
  if (j.contains("clahe")) clahe_from(j["clahe"], p.preproc.clahe);
  if (j.contains("nl_means")) nlm_from(j["nl_means"], p.preproc.nlm);
  if (j.contains("sift")) sift_from(j["sift"], p.sift);
  p.match_ratio = j.value("match_ratio", p.match_ratio);
  p.min_matches = j.value("min_matches", p.min_matches);
  p.scale_gate_tol = j.value("scale_gate_tol", p.scale_gate_tol);
  p.robust_similarity = j.value("robust_similarity", p.robust_similarity);
  if (j.contains("ssim")) ssim_from(j["ssim"], p.ssim);
}

json proc_pipeline_json(const distance::ProcrustesPipelineParams& p) {
  return {{"crop", crop_json(p.preproc.crop)},
          {"tv", tv_json(p.preproc.tv)},
          {"clahe", clahe_json(p.preproc.clahe)},
          {"detector", sift_json(p.detector)},
          {"ransac", ransac_json(p.ransac)},
          {"log_floor", p.log_floor}};
}

void proc_pipeline_from(const json& j, distance::ProcrustesPipelineParams& p) {
  if (j.contains("crop")) crop_from(j["crop"], p.preproc.crop);
  if (j.contains("tv")) tv_from(j["tv"], p.preproc.tv);
  if (j.contains("clahe")) clahe_from(j["clahe"], p.preproc.clahe);
  if (j.contains("detector")) sift_from(j["detector"], p.detector);
  if (j.contains("ransac")) ransac_from(j["ransac"], p.ransac);
  p.log_floor = j.value("log_floor", p.log_floor);
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  json j;
  j["method"] = method;
  j["seed"] = seed;
  j["workers"] = workers;
  j["cache_dir"] = cache_dir;
  j["output_dir"] = output_dir;
  j["histogram_bins"] = histogram_bins;
  j["ssim_pipeline"] = ssim_pipeline_json(ssim_pipeline);
  j["procrustes_pipeline"] = proc_pipeline_json(proc_pipeline);
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.method = j.value("method", c.method);
  if (c.method != "ssim" && c.method != "procrustes" && c.method != "both") {
    throw InvalidInputError("config: method must be ssim|procrustes|both");
  }
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  if (c.workers < 1) throw InvalidInputError("config: workers must be >= 1");
  c.cache_dir = j.value("cache_dir", c.cache_dir);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
  if (j.contains("ssim_pipeline")) {
    ssim_pipeline_from(j["ssim_pipeline"], c.ssim_pipeline);
  }
  if (j.contains("procrustes_pipeline")) {
    proc_pipeline_from(j["procrustes_pipeline"], c.proc_pipeline);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("config: cannot read " + path);
  json j;
  try {
    j = json::parse(f, nullptr, true, true);  // comments allowed
  } catch (const json::exception& e) {
    throw InvalidInputError("config: parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::fingerprint(const std::string& method_name) const {
  json j;
  j["method"] = method_name;
  j["seed"] = seed;
  if (method_name == "ssim") {
    j["pipeline"] = ssim_pipeline_json(ssim_pipeline);
  } else if (method_name == "procrustes") {
    j["pipeline"] = proc_pipeline_json(proc_pipeline);
  } else {
    throw InvalidInputError("fingerprint: unknown method '" + method_name + "'");
  }
  return to_hex(fnv1a64(j.dump()));
}

}  // namespace dielink::config
