#pragma once

#include <string>
#include <vector>

#include "dielink/cluster.hpp"
#include "dielink/distance_matrix.hpp"

namespace dielink::evalx {

// All unordered pairs of a dataset with ground truth and a distance score.
// Lower score = more likely linked ("positive = distance <= threshold").
struct PairLabels {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<bool> y_true;
  std::vector<double> score;
};

enum class CurveKind { kRoc, kPr };

struct CurvePoint {
  double x = 0.0;  // roc: FPR, pr: recall
  double y = 0.0;  // roc: TPR, pr: precision
  double threshold = 0.0;
};

struct CurvePoints {
  CurveKind kind = CurveKind::kRoc;
  std::vector<CurvePoint> points;
  void save(const std::string& csv_path) const;
};

struct BinaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct Histograms {
  std::vector<double> edges;         // bins+1 edges over [lo, hi]
  std::vector<std::size_t> intra;    // same-die distances per bin
  std::vector<std::size_t> inter;
  std::size_t violations = 0;        // #{intra distances > min inter distance}
  void save(const std::string& csv_path) const;
};

struct RankedPair {
  std::string id_a, id_b;
  double distance = 0.0;
};

PairLabels pair_labels(const distance::DistanceMatrix& D,
                       const cluster::Partition& truth);

std::vector<std::pair<std::string, std::string>> pairs_from_partition(
    const cluster::Partition& p);  // positive pairs, each (small_id, big_id)

CurvePoints roc_curve(const PairLabels& labels);
double roc_auc(const PairLabels& labels);

CurvePoints pr_curve(const PairLabels& labels);
double pr_auc(const PairLabels& labels);  // average precision

BinaryMetrics binary_metrics(const cluster::Partition& predicted,
                             const cluster::Partition& truth);

double ari(const cluster::Partition& a, const cluster::Partition& b);
double nmi(const cluster::Partition& a, const cluster::Partition& b);

Histograms link_histograms(const distance::DistanceMatrix& D,
                           const cluster::Partition& truth, int bins);

std::vector<RankedPair> rank_candidates(const distance::DistanceMatrix& D);

}  // namespace dielink::evalx
