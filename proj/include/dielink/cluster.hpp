#pragma once

#include <map>
#include <string>
#include <vector>

#include "dielink/distance_matrix.hpp"

namespace dielink::cluster {

// Canonical partition: each cluster is labeled by its lexicographically
// smallest member id, so equal groupings compare equal regardless of input
// order.
struct Partition {
  std::map<std::string, std::string> assignment;  // coin_id -> cluster label

  std::size_t size() const { return assignment.size(); }
  // label -> members (sorted); deterministic iteration order
  std::map<std::string, std::vector<std::string>> clusters() const;
  std::size_t positive_pair_count() const;

  static Partition from_groups(
      const std::map<std::string, std::vector<std::string>>& groups);

  void save(const std::string& csv_path) const;  // coin_id,cluster_label
  static Partition load(const std::string& csv_path);
};

enum class Strategy { kMax, kMean, kMedian, kMin };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct ThresholdPlan {
  Strategy strategy = Strategy::kMax;
  std::vector<double> per_dataset_optima;      // aligned with source_datasets
  std::vector<std::string> source_datasets;
  std::vector<std::string> skipped_datasets;   // sources whose optimum failed
  double resulting_threshold = 0.0;
};

// Connected components of the graph with an edge wherever D[i][j] <= t.
Partition single_linkage_threshold(const distance::DistanceMatrix& D, double t);

// Candidate thresholds are midpoints between consecutive distinct
// off-diagonal values plus sentinels below/beyond the extremes; returns the
// candidate maximizing pairwise F1 against truth (ties -> smallest).
// best_f1, when given, receives the attained objective.
double optimal_threshold(const distance::DistanceMatrix& D,
                         const Partition& truth, double* best_f1 = nullptr);

struct DatasetTruth {
  std::string dataset_id;
  distance::DistanceMatrix D;
  Partition truth;
};

// Leave-one-out protocol: aggregate the optimal thresholds of every dataset
// except the target.
ThresholdPlan loo_threshold(const std::string& target_dataset_id,
                            const std::vector<DatasetTruth>& all,
                            Strategy strategy);

double aggregate(const std::vector<double>& values, Strategy strategy);

// Pairwise precision/recall/F1 helpers used by the sweep (exposed for tests).
struct PairCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};
PairCounts pair_confusion(const Partition& predicted, const Partition& truth);

}  // namespace dielink::cluster
