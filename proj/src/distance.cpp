#include "dielink/distance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dielink::distance {

namespace {

constexpr double kSentinel = std::numeric_limits<double>::infinity();

nlohmann::json transform_json(const geometry::SimilarityTransform& t) {
  return {{"s", t.s}, {"theta", t.theta}, {"tx", t.tx}, {"ty", t.ty}};
}

}  // namespace

std::string PairDiagnostics::to_json_line() const {
  nlohmann::json j;
  j["id_a"] = id_a;
  j["id_b"] = id_b;
  j["method"] = method;
  j["n_matches"] = n_matches;
  j["raw_value"] = std::isfinite(raw_value) ? nlohmann::json(raw_value)
                                            : nlohmann::json("inf");
  if (method == "ssim") {
    j["gate_triggered"] = gate_triggered;
    j["estimation_failed"] = estimation_failed;
    j["transform"] = transform_json(transform);
  } else {
    j["incomparable"] = incomparable;
    j["n_in"] = n_in;
    j["procrustes_value"] = procrustes_value;
    j["pair_seed"] = pair_seed;
    if (has_homography) j["homography"] = homography;
  }
  return j.dump();
}

SsimPrecomp precompute_ssim(const RgbImage& img,
                            const SsimPipelineParams& params) {
  SsimPrecomp out;
  out.pre = imgproc::preproc_ssim(img, params.preproc);
  out.feats = features::sift_detect_describe(out.pre, params.sift);
  return out;
}

ProcrustesPrecomp precompute_procrustes(const RgbImage& img,
                                        const ProcrustesPipelineParams& params) {
  ProcrustesPrecomp out;
  const GrayImage pre = imgproc::preproc_procrustes(img, params.preproc);
  const auto kps = features::detect_keypoints_baseline(pre, params.detector);
  out.orb = features::orb_describe(pre, kps);
  return out;
}

double ssim_pair(const SsimPrecomp& a, const SsimPrecomp& b,
                 const SsimPipelineParams& params, PairDiagnostics* diag) {
  PairDiagnostics local;
  PairDiagnostics& d = diag ? *diag : local;
  d.method = "ssim";

  const auto matches = features::match_ratio_test(
      a.feats.descriptors, b.feats.descriptors, params.match_ratio);
  d.n_matches = int(matches.size());

  geometry::SimilarityTransform t;  // identity fallback
  if (int(matches.size()) >= params.min_matches) {
    std::vector<Point2d> src, dst;
    src.reserve(matches.size());
    dst.reserve(matches.size());
    for (const auto& m : matches) {
      src.push_back({a.feats.keypoints[m.index_a].x,
                     a.feats.keypoints[m.index_a].y});
      dst.push_back({b.feats.keypoints[m.index_b].x,
                     b.feats.keypoints[m.index_b].y});
    }
    try {
      const auto est = geometry::estimate_similarity(src, dst,
                                                     params.robust_similarity);
      t = geometry::scale_gate(est, params.scale_gate_tol, &d.gate_triggered);
    } catch (const EstimationError&) {
      d.estimation_failed = true;
    }
  }
  d.transform = t;

  const GrayImage warped =
      t.is_identity() ? a.pre : geometry::apply_similarity(a.pre, t);
  d.raw_value = ssim::ssim_metric(warped, b.pre, params.ssim);
  return d.raw_value;
}

double procrustes_pair(const ProcrustesPrecomp& a, const ProcrustesPrecomp& b,
                       const ProcrustesPipelineParams& params,
                       std::uint64_t seed, PairDiagnostics* diag) {
  PairDiagnostics local;
  PairDiagnostics& d = diag ? *diag : local;
  d.method = "procrustes";
  d.pair_seed = seed;
  d.raw_value = kSentinel;
  d.incomparable = true;

  const auto matches =
      features::match_cross_check(a.orb.descriptors, b.orb.descriptors);
  d.n_matches = int(matches.size());
  if (matches.size() < 4) return d.raw_value;

  std::vector<Point2d> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const auto& m : matches) {
    src.push_back({a.orb.keypoints[m.index_a].x, a.orb.keypoints[m.index_a].y});
    dst.push_back({b.orb.keypoints[m.index_b].x, b.orb.keypoints[m.index_b].y});
  }

  try {
    geometry::RansacParams rp = params.ransac;
    rp.seed = seed;
    const geometry::Homography H = geometry::estimate_homography_ransac(src, dst, rp);
    d.has_homography = true;
    d.homography = H.h;
    d.n_in = H.n_in;
    if (H.n_in == 0) return d.raw_value;

    const auto moved = geometry::apply_homography(src, H);
    const double p = geometry::procrustes_distance(moved, dst);
    d.procrustes_value = p;
    d.raw_value = std::log(std::max(p, params.log_floor)) + 1.0 / double(H.n_in);
    d.incomparable = false;
  } catch (const EstimationError&) {
    // sentinel already in place
  }
  return d.raw_value;
}

std::pair<double, PairDiagnostics> ssim_distance(const std::string& image_a,
                                                 const std::string& image_b,
                                                 const SsimPipelineParams& params) {
  const SsimPrecomp a = precompute_ssim(read_image_rgb(image_a), params);
  const SsimPrecomp b = precompute_ssim(read_image_rgb(image_b), params);
  PairDiagnostics diag;
  diag.id_a = image_a;
  diag.id_b = image_b;
  const double v = ssim_pair(a, b, params, &diag);
  return {v, diag};
}

std::pair<double, PairDiagnostics> procrustes_based_distance(
    const std::string& image_a, const std::string& image_b,
    const ProcrustesPipelineParams& params, std::uint64_t seed) {
  const ProcrustesPrecomp a =
      precompute_procrustes(read_image_rgb(image_a), params);
  const ProcrustesPrecomp b =
      precompute_procrustes(read_image_rgb(image_b), params);
  PairDiagnostics diag;
  diag.id_a = image_a;
  diag.id_b = image_b;
  const double v = procrustes_pair(a, b, params, seed, &diag);
  return {v, diag};
}

std::uint64_t pair_seed(const std::string& id_a, const std::string& id_b,
                        std::uint64_t global_seed) {
  std::uint64_t h = fnv1a64(id_a);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(id_b, h);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(to_hex(global_seed), h);
  return h;
}

void normalize_baseline_matrix(DistanceMatrix& m) {
  const std::size_t n = m.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = m.at(i, j);
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = m.at(i, j);
      double norm;
      if (!std::isfinite(v)) {
        norm = 1.0;  // incomparable pairs are "as far as anything observed"
      } else if (hi > lo) {
        norm = (v - lo) / (hi - lo);
      } else {
        norm = 1.0;  // all finite values equal (or a single pair)
      }
      m.set_pair(i, j, norm);
    }
  }
  m.normalized = true;
}

namespace {

struct CacheRow {
  double raw;
};

std::string cache_key(const std::string& a, const std::string& b) {
  return a + '\x1f' + b;
}

std::map<std::string, CacheRow> load_cache(const std::string& path,
                                           const std::string& method,
                                           const std::string& fingerprint) {
  std::map<std::string, CacheRow> out;
  std::ifstream f(path, std::ios::binary);
  if (!f) return out;
  std::string line;
  if (!std::getline(f, line)) return out;  // header
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = manifest::split_csv_row(line);
    if (fields.size() != 6) continue;
    if (fields[4] != method || fields[5] != fingerprint) continue;
    try {
      out[cache_key(fields[0], fields[1])] = {std::stod(fields[2])};
    } catch (const std::exception&) {
      // unreadable row: recompute that pair
    }
  }
  return out;
}

void run_parallel(std::size_t task_count, int workers,
                  const std::function<void(std::size_t)>& task) {
  if (workers <= 1 || task_count <= 1) {
    for (std::size_t k = 0; k < task_count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= task_count || failed.load()) break;
      try {
        task(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = int(std::min<std::size_t>(workers, task_count));
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

const char* kCacheHeader = "id_a,id_b,raw,normalized,method,fingerprint";

}  // namespace

DistanceMatrix compute_distance_matrix(const MatrixJob& job,
                                       std::vector<PairDiagnostics>* diagnostics) {
  const manifest::Manifest& ds = job.dataset;
  if (ds.size() < 2) {
    throw InvalidInputError("distance_matrix: need at least 2 coins");
  }
  if (job.method != "ssim" && job.method != "procrustes") {
    throw InvalidInputError("distance_matrix: unknown method '" + job.method + "'");
  }
  manifest::check_image_files(ds);

  const std::size_t n = ds.size();
  const bool is_ssim = job.method == "ssim";

  // Per-image artifacts, computed once each.
  std::vector<SsimPrecomp> ssim_pre(is_ssim ? n : 0);
  std::vector<ProcrustesPrecomp> proc_pre(is_ssim ? 0 : n);
  run_parallel(n, job.workers, [&](std::size_t k) {
    const RgbImage img = read_image_rgb(ds.entries[k].image_path);
    if (is_ssim) {
      ssim_pre[k] = precompute_ssim(img, job.ssim_params);
    } else {
      proc_pre[k] = precompute_procrustes(img, job.proc_params);
    }
  });

  struct PairTask {
    std::size_t i, j;
  };
  std::vector<PairTask> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
  }

  std::map<std::string, CacheRow> cached;
  if (!job.cache_path.empty()) {
    cached = load_cache(job.cache_path, job.method, job.fingerprint);
  }

  std::vector<double> raw(pairs.size(),
                          std::numeric_limits<double>::quiet_NaN());
  std::vector<PairDiagnostics> diags(pairs.size());
  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& e_a = ds.entries[pairs[k].i];
    const auto& e_b = ds.entries[pairs[k].j];
    const auto it = cached.find(cache_key(e_a.coin_id, e_b.coin_id));
    if (it != cached.end()) {
      raw[k] = it->second.raw;
    } else {
      pending.push_back(k);
    }
  }

  std::ofstream cache_append;
  std::mutex cache_mu;
  if (!job.cache_path.empty() && !pending.empty()) {
    const bool fresh = !std::filesystem::exists(job.cache_path);
    if (const auto dir = std::filesystem::path(job.cache_path).parent_path();
        !dir.empty()) {
      std::filesystem::create_directories(dir);
    }
    cache_append.open(job.cache_path, std::ios::binary | std::ios::app);
    if (!cache_append) {
      throw IoError("distance_matrix: cannot open cache " + job.cache_path);
    }
    if (fresh) cache_append << kCacheHeader << '\n';
  }

  run_parallel(pending.size(), job.workers, [&](std::size_t t) {
    const std::size_t k = pending[t];
    const auto& e_a = ds.entries[pairs[k].i];
    const auto& e_b = ds.entries[pairs[k].j];
    PairDiagnostics& d = diags[k];
    d.id_a = e_a.coin_id;
    d.id_b = e_b.coin_id;
    if (is_ssim) {
      raw[k] = ssim_pair(ssim_pre[pairs[k].i], ssim_pre[pairs[k].j],
                         job.ssim_params, &d);
    } else {
      raw[k] = procrustes_pair(
          proc_pre[pairs[k].i], proc_pre[pairs[k].j], job.proc_params,
          pair_seed(e_a.coin_id, e_b.coin_id, job.global_seed), &d);
    }
    if (cache_append.is_open()) {
      std::lock_guard<std::mutex> lock(cache_mu);
      cache_append << manifest::join_csv_row(
                          {e_a.coin_id, e_b.coin_id, format_double(raw[k]), "",
                           job.method, job.fingerprint})
                   << '\n';
      cache_append.flush();
    }
  });
  if (cache_append.is_open()) cache_append.close();

  DistanceMatrix m;
  m.ids = ds.ids();
  m.values.assign(n * n, 0.0);
  m.method = job.method;
  m.seed = job.global_seed;
  m.fingerprint = job.fingerprint;
  m.config_json = job.config_json;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    m.set_pair(pairs[k].i, pairs[k].j, raw[k]);
  }
  if (!is_ssim) {
    normalize_baseline_matrix(m);
  }
  m.validate();

  // Final cache file: canonical pair order, normalized column filled in,
  // atomically replacing whatever the incremental appends left behind.
  if (!job.cache_path.empty()) {
    const std::string tmp = job.cache_path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw IoError("distance_matrix: cannot write " + tmp);
      f << kCacheHeader << '\n';
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& e_a = ds.entries[pairs[k].i];
        const auto& e_b = ds.entries[pairs[k].j];
        f << manifest::join_csv_row(
                 {e_a.coin_id, e_b.coin_id, format_double(raw[k]),
                  format_double(m.at(pairs[k].i, pairs[k].j)), job.method,
                  job.fingerprint})
          << '\n';
      }
      if (!f) throw IoError("distance_matrix: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, job.cache_path);
  }

  if (diagnostics) {
    diagnostics->clear();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (!diags[k].id_a.empty()) diagnostics->push_back(std::move(diags[k]));
    }
  }
  return m;
}

}  // namespace dielink::distance
