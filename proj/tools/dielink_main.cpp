// dielink — batch analysis of die links between coin photographs.
//
// Subcommands: ingest | synth | distance | cluster | eval | report.
// Exit codes: 0 success, 1 validation/input error, 2 computation error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dielink/cluster.hpp"
#include "dielink/config.hpp"
#include "dielink/core.hpp"
#include "dielink/distance.hpp"
#include "dielink/evalx.hpp"
#include "dielink/manifest.hpp"
#include "dielink/report.hpp"
#include "dielink/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dielink;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string method;
  std::string cache_dir;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 0;
};

// Flags override the config file; the cache root additionally falls back to
// $DIELINK_CACHE_DIR when neither flag nor config names one.
config::RunConfig resolve_config(const CLI::App* cmd, const CommonFlags& f) {
  config::RunConfig cfg;
  if (!f.config_path.empty()) cfg = config::RunConfig::load(f.config_path);
  if (cmd->count("--method")) cfg.method = f.method;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--workers")) cfg.workers = f.workers;
  if (cmd->count("--out")) cfg.output_dir = f.out_dir;
  if (cmd->count("--cache-dir")) {
    cfg.cache_dir = f.cache_dir;
  } else if (cfg.cache_dir.empty()) {
    if (const char* env = std::getenv("DIELINK_CACHE_DIR")) cfg.cache_dir = env;
  }
  if (cfg.workers < 1) throw InvalidInputError("workers must be >= 1");
  return cfg;
}

int cmd_ingest(const std::string& manifest_path, bool skip_files) {
  const auto datasets = manifest::load_manifests(manifest_path);
  std::cout << "dataset        coins  labeled    pairs    links  dies\n";
  for (const auto& ds : datasets) {
    if (!skip_files) manifest::check_image_files(ds);
    std::printf("%-12s %7zu %8zu %8zu %8zu %5zu\n", ds.dataset_id.c_str(),
                ds.size(), ds.labeled_ids().size(), ds.pair_count(),
                ds.link_count(), ds.groups().size());
  }
  std::cout << datasets.size() << " dataset(s) valid\n";
  return 0;
}

int cmd_synth(const std::string& out_dir, const std::string& dataset_id,
              const synth::SynthParams& params) {
  const fs::path image_dir = fs::path(out_dir) / dataset_id;
  fs::create_directories(image_dir);
  const manifest::Manifest ds =
      synth::generate(params, image_dir.string(), dataset_id);

  // Merge into the shared manifest, replacing a previous run of the same id.
  const fs::path manifest_path = fs::path(out_dir) / "manifest.csv";
  std::vector<manifest::Manifest> all;
  if (fs::exists(manifest_path)) {
    all = manifest::load_manifests(manifest_path.string());
    std::erase_if(all, [&](const auto& m) { return m.dataset_id == dataset_id; });
  }
  all.push_back(ds);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; });
  manifest::save_manifest(all, manifest_path.string());

  std::cout << "generated " << ds.size() << " coins (" << ds.groups().size()
            << " dies) under " << image_dir.string() << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

int cmd_distance(const CLI::App* cmd, const std::string& manifest_path,
                 const CommonFlags& flags) {
  const config::RunConfig cfg = resolve_config(cmd, flags);
  const auto datasets = manifest::load_manifests(manifest_path);
  fs::create_directories(cfg.output_dir);
  if (!cfg.cache_dir.empty()) fs::create_directories(cfg.cache_dir);

  std::ofstream log((fs::path(cfg.output_dir) / "run.log").string(),
                    std::ios::binary);
  log << "config:\n" << cfg.to_json().dump(2) << "\n";

  const std::vector<std::string> methods = {"ssim", "procrustes"};
  for (const auto& ds : datasets) {
    for (const auto& method : methods) {
      if (!cfg.wants(method)) continue;
      const std::string fp = cfg.fingerprint(method);
      distance::MatrixJob job;
      job.dataset = ds;
      job.method = method;
      job.ssim_params = cfg.ssim_pipeline;
      job.proc_params = cfg.proc_pipeline;
      job.global_seed = cfg.seed;
      job.workers = cfg.workers;
      job.fingerprint = fp;
      job.config_json = cfg.to_json().dump();
      if (!cfg.cache_dir.empty()) {
        job.cache_path = (fs::path(cfg.cache_dir) /
                          ("pairs_" + ds.dataset_id + "_" + method + "_" + fp +
                           ".csv"))
                             .string();
      }

      std::cout << ds.dataset_id << " " << method << ": " << ds.pair_count()
                << " pairs (fingerprint " << fp << ")" << std::endl;
      std::vector<distance::PairDiagnostics> diags;
      const distance::DistanceMatrix M =
          distance::compute_distance_matrix(job, &diags);

      const std::string tag = ds.dataset_id + "_" + method;
      const fs::path matrix_path =
          fs::path(cfg.output_dir) / ("matrix_" + tag + ".csv");
      M.save(matrix_path.string());

      const fs::path diag_path =
          fs::path(cfg.output_dir) / ("diagnostics_" + tag + ".jsonl");
      std::ofstream df(diag_path.string(), std::ios::binary);
      if (!df) throw IoError("cannot write " + diag_path.string());
      for (const auto& d : diags) df << d.to_json_line() << '\n';

      std::cout << "  " << diags.size() << " computed, "
                << (ds.pair_count() - diags.size()) << " from cache -> "
                << matrix_path.string() << std::endl;
      log << ds.dataset_id << " " << method << " fingerprint=" << fp
          << " pairs=" << ds.pair_count() << " -> " << matrix_path.string()
          << "\n";
    }
  }
  return 0;
}

int cmd_cluster(const std::string& matrix_path, std::optional<double> threshold,
                bool optimize, const std::string& manifest_path,
                const std::string& out_path) {
  const auto M = distance::DistanceMatrix::load(matrix_path);
  double t = 0.0;
  if (optimize) {
    if (manifest_path.empty()) {
      throw InvalidInputError("--optimize needs --manifest for ground truth");
    }
    const auto datasets = manifest::load_manifests(manifest_path);
    // Use the dataset covering this matrix's ids.
    const manifest::Manifest* match = nullptr;
    for (const auto& ds : datasets) {
      const auto ids = ds.ids();
      bool all = true;
      for (const auto& id : M.ids) {
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
          all = false;
          break;
        }
      }
      if (all) {
        match = &ds;
        break;
      }
    }
    if (!match) {
      throw ValidationError("no dataset in " + manifest_path +
                            " covers the matrix ids");
    }
    const auto truth = cluster::Partition::from_groups(match->groups());
    auto labeled = M.subset(match->labeled_ids());
    double f1 = 0.0;
    t = cluster::optimal_threshold(labeled, truth, &f1);
    std::cout << "optimal threshold " << format_double(t) << " (pairwise F1 "
              << format_double(f1) << ") on " << match->dataset_id << "\n";
  } else if (threshold) {
    t = *threshold;
  } else {
    throw InvalidInputError("give either --threshold or --optimize");
  }

  const auto part = cluster::single_linkage_threshold(M, t);
  part.save(out_path);
  std::cout << part.clusters().size() << " clusters over " << part.size()
            << " coins -> " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& matrix_dir,
             const std::string& out_dir, int bins) {
  const auto datasets = manifest::load_manifests(manifest_path);
  std::vector<report::DatasetEval> evals;
  json echo;
  echo["histogram_bins"] = bins;
  echo["matrix_dir"] = matrix_dir;
  for (const auto& ds : datasets) {
    report::DatasetEval ev;
    ev.dataset_id = ds.dataset_id;
    ev.truth = cluster::Partition::from_groups(ds.groups());
    for (const std::string method : {"ssim", "procrustes"}) {
      const fs::path p = fs::path(matrix_dir) /
                         ("matrix_" + ds.dataset_id + "_" + method + ".csv");
      if (!fs::exists(p)) continue;
      auto M = distance::DistanceMatrix::load(p.string());
      echo["matrices"][ds.dataset_id][method] = {
          {"fingerprint", M.fingerprint},
          {"seed", M.seed},
          {"config", json::parse(M.config_json.empty() ? "null" : M.config_json)}};
      ev.matrices.emplace(method, std::move(M));
    }
    if (!ev.matrices.empty()) evals.push_back(std::move(ev));
  }
  if (evals.empty()) {
    throw ValidationError("no matrix_<dataset>_<method>.csv files in " +
                          matrix_dir);
  }

  report::EvalOptions opts;
  opts.histogram_bins = bins;
  opts.out_dir = out_dir;
  opts.config_echo = echo;
  const json metrics = report::run_eval(evals, opts);

  const std::string table = report::render_report(metrics);
  std::ofstream rf((fs::path(out_dir) / "report.txt").string(),
                   std::ios::binary);
  rf << table;
  std::cout << table;
  std::cout << "metrics: " << (fs::path(out_dir) / "metrics.json").string()
            << "\n";
  return 0;
}

int cmd_report(const std::string& metrics_path) {
  std::ifstream f(metrics_path);
  if (!f) throw IoError("cannot read " + metrics_path);
  json metrics = json::parse(f);
  std::cout << report::render_report(metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"die-link analysis of coin photographs"};
  app.require_subcommand(1);

  // ingest ------------------------------------------------------------
  std::string ingest_manifest;
  bool ingest_skip_files = false;
  auto* ingest = app.add_subcommand(
      "ingest", "validate a manifest and report dataset sizes");
  ingest->add_option("--manifest", ingest_manifest, "manifest CSV")->required();
  ingest->add_flag("--skip-file-check", ingest_skip_files,
                   "do not verify that image files exist");

  // synth ---------------------------------------------------------------
  std::string synth_out, synth_id = "synth";
  synth::SynthParams sp;
  auto* synthc = app.add_subcommand(
      "synth", "generate a labeled synthetic dataset");
  synthc->add_option("--out", synth_out, "output directory")->required();
  synthc->add_option("--dataset-id", synth_id, "dataset id");
  synthc->add_option("--dies", sp.n_dies, "number of dies");
  synthc->add_option("--coins", sp.coins_per_die, "coins per die");
  synthc->add_option("--size", sp.image_size, "image side length");
  synthc->add_option("--noise", sp.noise_level, "gaussian noise level");
  synthc->add_option("--seed", sp.seed, "generator seed");
  synthc->add_option("--rotation", sp.max_rotation_deg, "max |rotation| (deg)");
  synthc->add_option("--translation", sp.max_translation, "max |shift| (px)");
  synthc->add_option("--scale-jitter", sp.max_scale_jitter, "max |scale-1|");
  synthc->add_option("--illumination", sp.illumination, "max lighting gradient");

  // distance --------------------------------------------------------------
  std::string dist_manifest;
  CommonFlags dflags;
  auto* dist = app.add_subcommand(
      "distance", "compute pairwise distance matrices");
  dist->add_option("--manifest", dist_manifest, "manifest CSV")->required();
  dist->add_option("--config", dflags.config_path, "run config JSON");
  dist->add_option("--method", dflags.method, "ssim|procrustes|both");
  dist->add_option("--seed", dflags.seed, "global seed");
  dist->add_option("--workers", dflags.workers, "parallel workers");
  dist->add_option("--out", dflags.out_dir, "output directory");
  dist->add_option("--cache-dir", dflags.cache_dir, "pair cache directory");

  // cluster ---------------------------------------------------------------
  std::string cl_matrix, cl_manifest, cl_out = "partition.csv";
  double cl_threshold = 0.0;
  bool cl_optimize = false;
  auto* cl = app.add_subcommand(
      "cluster", "cut a distance matrix into die groups");
  cl->add_option("--matrix", cl_matrix, "distance matrix CSV")->required();
  auto* thr_opt = cl->add_option("--threshold", cl_threshold, "linkage cutoff");
  cl->add_flag("--optimize", cl_optimize,
               "learn the cutoff from ground-truth labels");
  cl->add_option("--manifest", cl_manifest, "manifest CSV (with --optimize)");
  cl->add_option("--out", cl_out, "partition CSV path");

  // eval --------------------------------------------------------------
  std::string ev_manifest, ev_matrix_dir, ev_out = ".";
  int ev_bins = 30;
  auto* ev = app.add_subcommand(
      "eval", "curves, AUCs, histograms, and leave-one-out clustering");
  ev->add_option("--manifest", ev_manifest, "manifest CSV")->required();
  ev->add_option("--matrix-dir", ev_matrix_dir,
                 "directory holding matrix_<dataset>_<method>.csv")
      ->required();
  ev->add_option("--out", ev_out, "output directory");
  ev->add_option("--bins", ev_bins, "histogram bins");

  // report ------------------------------------------------------------
  std::string rep_metrics;
  auto* rep = app.add_subcommand("report", "render a metrics.json as text");
  rep->add_option("--metrics", rep_metrics, "metrics JSON path")->required();

  try {
    app.parse(argc, argv);
    if (ingest->parsed()) return cmd_ingest(ingest_manifest, ingest_skip_files);
    if (synthc->parsed()) return cmd_synth(synth_out, synth_id, sp);
    if (dist->parsed()) return cmd_distance(dist, dist_manifest, dflags);
    if (cl->parsed()) {
      std::optional<double> t;
      if (thr_opt->count()) t = cl_threshold;
      return cmd_cluster(cl_matrix, t, cl_optimize, cl_manifest, cl_out);
    }
    if (ev->parsed()) return cmd_eval(ev_manifest, ev_matrix_dir, ev_out, ev_bins);
    if (rep->parsed()) return cmd_report(rep_metrics);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // bad usage is a validation error
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    for (const auto& item : e.items()) std::cerr << "  - " << item << "\n";
    return 1;
  } catch (const InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
