#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dielink/cluster.hpp"
#include "dielink/distance_matrix.hpp"

namespace dielink::report {

struct DatasetEval {
  std::string dataset_id;
  cluster::Partition truth;  // labeled coins only
  std::map<std::string, distance::DistanceMatrix> matrices;  // method -> full
};

struct EvalOptions {
  int histogram_bins = 30;
  std::string out_dir;        // curves/histograms/partitions land here
  nlohmann::json config_echo; // embedded verbatim in metrics.json
};

// Curves, AUCs, histograms, candidate rankings, per-dataset optimal
// thresholds, and leave-one-out clustering for all four strategies.
// Returns the metrics document (also written to <out_dir>/metrics.json).
nlohmann::json run_eval(const std::vector<DatasetEval>& datasets,
                        const EvalOptions& options);

// Plain-text table (ARI/NMI/precision/recall/F1/accuracy per
// dataset x strategy x method) rendered from a metrics document.
std::string render_report(const nlohmann::json& metrics);

}  // namespace dielink::report
