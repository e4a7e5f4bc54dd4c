#include "dielink/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dielink/evalx.hpp"
#include "dielink/manifest.hpp"

namespace dielink::report {

namespace {

using nlohmann::json;

constexpr cluster::Strategy kStrategies[] = {
    cluster::Strategy::kMax, cluster::Strategy::kMean,
    cluster::Strategy::kMedian, cluster::Strategy::kMin};

std::string out_path(const EvalOptions& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

void save_candidates(const std::vector<evalx::RankedPair>& ranked,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("run_eval: cannot write " + path);
  f << "rank,id_a,id_b,distance\n";
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    f << (k + 1) << ','
      << manifest::join_csv_row({ranked[k].id_a, ranked[k].id_b,
                                 format_double(ranked[k].distance)})
      << '\n';
  }
}

json metrics_json(const evalx::BinaryMetrics& bm, double ari_v, double nmi_v) {
  return {{"ari", ari_v},          {"nmi", nmi_v},
          {"precision", bm.precision}, {"recall", bm.recall},
          {"f1", bm.f1},           {"accuracy", bm.accuracy}};
}

}  // namespace

json run_eval(const std::vector<DatasetEval>& datasets, const EvalOptions& options) {
  if (datasets.empty()) {
    throw InvalidInputError("run_eval: no datasets");
  }
  std::filesystem::create_directories(options.out_dir);

  // methods present anywhere
  std::set<std::string> methods;
  for (const auto& ds : datasets) {
    for (const auto& [m, _] : ds.matrices) methods.insert(m);
  }

  json out;
  out["config"] = options.config_echo;

  // Labeled-coin submatrices drive every truth-dependent metric.
  struct Prepared {
    const DatasetEval* ds;
    std::map<std::string, distance::DistanceMatrix> labeled;
  };
  std::vector<Prepared> prepared;
  for (const auto& ds : datasets) {
    Prepared p;
    p.ds = &ds;
    std::vector<std::string> labeled_ids;
    for (const auto& [id, _] : ds.truth.assignment) labeled_ids.push_back(id);
    for (const auto& [method, matrix] : ds.matrices) {
      p.labeled.emplace(method, matrix.subset(labeled_ids));
    }
    prepared.push_back(std::move(p));
  }

  for (const auto& method : methods) {
    // LOO sources: every dataset with this method and usable truth.
    std::vector<cluster::DatasetTruth> sources;
    for (const auto& p : prepared) {
      auto it = p.labeled.find(method);
      if (it == p.labeled.end()) continue;
      sources.push_back({p.ds->dataset_id, it->second, p.ds->truth});
    }

    for (const auto& p : prepared) {
      const auto it = p.labeled.find(method);
      if (it == p.labeled.end()) continue;
      const auto& ds = *p.ds;
      const distance::DistanceMatrix& Dl = it->second;
      json& slot = out["datasets"][ds.dataset_id]["methods"][method];

      slot["n_coins"] = ds.matrices.at(method).size();
      slot["n_labeled"] = Dl.size();
      slot["n_pairs"] = Dl.size() * (Dl.size() - 1) / 2;
      slot["n_links"] = ds.truth.positive_pair_count();
      slot["fingerprint"] = ds.matrices.at(method).fingerprint;

      const std::string tag = ds.dataset_id + "_" + method;
      save_candidates(evalx::rank_candidates(ds.matrices.at(method)),
                      out_path(options, "candidates_" + tag + ".csv"));

      const evalx::PairLabels labels = evalx::pair_labels(Dl, ds.truth);
      bool any_pos = false, any_neg = false;
      for (bool y : labels.y_true) (y ? any_pos : any_neg) = true;

      if (any_pos && any_neg) {
        evalx::roc_curve(labels).save(out_path(options, "roc_" + tag + ".csv"));
        evalx::pr_curve(labels).save(out_path(options, "pr_" + tag + ".csv"));
        slot["roc_auc"] = evalx::roc_auc(labels);
        slot["pr_auc"] = evalx::pr_auc(labels);
      } else {
        slot["curves_skipped"] = "single-class ground truth";
      }
      if (!labels.score.empty()) {
        const evalx::Histograms h =
            evalx::link_histograms(Dl, ds.truth, options.histogram_bins);
        h.save(out_path(options, "hist_" + tag + ".csv"));
        slot["overlap_violations"] = h.violations;
      }
      if (any_pos) {
        double best_f1 = 0.0;
        slot["optimal_threshold"] = cluster::optimal_threshold(Dl, ds.truth, &best_f1);
        slot["optimal_f1"] = best_f1;
      }

      if (sources.size() >= 2) {
        for (const auto strategy : kStrategies) {
          const char* sname = cluster::strategy_name(strategy);
          json& cslot = slot["clustering"][sname];
          cluster::ThresholdPlan plan;
          try {
            plan = cluster::loo_threshold(ds.dataset_id, sources, strategy);
          } catch (const Error& e) {
            cslot["error"] = e.what();
            continue;
          }
          cslot["threshold"] = plan.resulting_threshold;
          cslot["source_datasets"] = plan.source_datasets;
          cslot["source_optima"] = plan.per_dataset_optima;
          if (!plan.skipped_datasets.empty()) {
            cslot["skipped_sources"] = plan.skipped_datasets;
          }
          const cluster::Partition pred =
              cluster::single_linkage_threshold(Dl, plan.resulting_threshold);
          pred.save(out_path(options,
                             "partition_" + tag + "_" + sname + ".csv"));
          const evalx::BinaryMetrics bm = evalx::binary_metrics(pred, ds.truth);
          cslot["metrics"] = metrics_json(bm, evalx::ari(pred, ds.truth),
                                          evalx::nmi(pred, ds.truth));
        }
      } else {
        slot["clustering_skipped"] =
            "leave-one-out thresholds need at least two datasets";
      }
    }
  }

  std::ofstream f(out_path(options, "metrics.json"), std::ios::binary);
  if (!f) throw IoError("run_eval: cannot write metrics.json");
  f << out.dump(2) << '\n';
  return out;
}

std::string render_report(const json& metrics) {
  std::ostringstream os;
  os << "dataset          method      strategy  threshold      ARI      NMI"
        "    Prec.     Rec.       F1     Acc.\n";
  if (!metrics.contains("datasets")) return os.str();
  char line[256];
  for (const auto& [ds_id, ds] : metrics["datasets"].items()) {
    for (const auto& [method, slot] : ds["methods"].items()) {
      if (slot.contains("roc_auc")) {
        std::snprintf(line, sizeof(line), "%-16s %-10s  ROC AUC %8.4f   PR AUC %8.4f   violations %zu\n",
                      ds_id.c_str(), method.c_str(),
                      slot["roc_auc"].get<double>(),
                      slot["pr_auc"].get<double>(),
                      slot["overlap_violations"].get<std::size_t>());
        os << line;
      }
      if (!slot.contains("clustering")) continue;
      for (const auto& [sname, cslot] : slot["clustering"].items()) {
        if (cslot.contains("error")) {
          os << ds_id << " " << method << " " << sname
             << "  error: " << cslot["error"].get<std::string>() << '\n';
          continue;
        }
        const auto& m = cslot["metrics"];
        std::snprintf(line, sizeof(line),
                      "%-16s %-10s %-9s %9.5f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                      ds_id.c_str(), method.c_str(), sname.c_str(),
                      cslot["threshold"].get<double>(), m["ari"].get<double>(),
                      m["nmi"].get<double>(), m["precision"].get<double>(),
                      m["recall"].get<double>(), m["f1"].get<double>(),
                      m["accuracy"].get<double>());
        os << line;
      }
    }
  }
  return os.str();
}

}  // namespace dielink::report
