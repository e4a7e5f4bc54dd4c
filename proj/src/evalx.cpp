#include "dielink/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace dielink::evalx {

namespace {

// Pairs sorted ascending by distance and grouped at equal scores; positives
// accumulate as the threshold rises.
struct SweepGroup {
  double threshold;  // the group's score
  std::size_t tp, fp;  // cumulative counts after admitting this group
};

std::vector<SweepGroup> sweep_groups(const PairLabels& labels,
                                     std::size_t& total_pos,
                                     std::size_t& total_neg) {
  total_pos = total_neg = 0;
  std::vector<std::size_t> order(labels.score.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labels.score[a] < labels.score[b];
  });
  for (bool y : labels.y_true) (y ? total_pos : total_neg)++;

  std::vector<SweepGroup> groups;
  std::size_t tp = 0, fp = 0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double s = labels.score[order[k]];
    while (k < order.size() && labels.score[order[k]] == s) {
      (labels.y_true[order[k]] ? tp : fp)++;
      ++k;
    }
    groups.push_back({s, tp, fp});
  }
  return groups;
}

void check_two_class(std::size_t pos, std::size_t neg, const char* who) {
  if (pos == 0 || neg == 0) {
    throw InvalidInputError(std::string(who) +
                            ": need at least one positive and one negative pair");
  }
}

double safe_ratio(std::size_t num, std::size_t den, double when_empty) {
  return den == 0 ? when_empty : double(num) / double(den);
}

}  // namespace

PairLabels pair_labels(const distance::DistanceMatrix& D,
                       const cluster::Partition& truth) {
  D.validate();
  for (const auto& id : D.ids) {
    if (!truth.assignment.count(id)) {
      throw InvalidInputError("pair_labels: truth misses id '" + id + "'");
    }
  }
  PairLabels out;
  const std::size_t n = D.size();
  out.pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.pairs.emplace_back(D.ids[i], D.ids[j]);
      out.y_true.push_back(truth.assignment.at(D.ids[i]) ==
                           truth.assignment.at(D.ids[j]));
      out.score.push_back(D.at(i, j));
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> pairs_from_partition(
    const cluster::Partition& p) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [_, members] : p.clusters()) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        out.emplace_back(members[i], members[j]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CurvePoints roc_curve(const PairLabels& labels) {
  std::size_t pos = 0, neg = 0;
  const auto groups = sweep_groups(labels, pos, neg);
  check_two_class(pos, neg, "roc_curve");

  CurvePoints out;
  out.kind = CurveKind::kRoc;
  out.points.push_back({0.0, 0.0, -std::numeric_limits<double>::infinity()});
  for (const auto& g : groups) {
    out.points.push_back({double(g.fp) / double(neg),
                          double(g.tp) / double(pos), g.threshold});
  }
  return out;
}

double roc_auc(const PairLabels& labels) {
  const CurvePoints c = roc_curve(labels);
  double auc = 0.0;
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const auto& a = c.points[k - 1];
    const auto& b = c.points[k];
    auc += (b.x - a.x) * (a.y + b.y) / 2.0;
  }
  return auc;
}

CurvePoints pr_curve(const PairLabels& labels) {
  std::size_t pos = 0, neg = 0;
  const auto groups = sweep_groups(labels, pos, neg);
  check_two_class(pos, neg, "pr_curve");

  CurvePoints out;
  out.kind = CurveKind::kPr;
  out.points.push_back({0.0, 1.0, -std::numeric_limits<double>::infinity()});
  for (const auto& g : groups) {
    out.points.push_back({double(g.tp) / double(pos),
                          double(g.tp) / double(g.tp + g.fp), g.threshold});
  }
  return out;
}

double pr_auc(const PairLabels& labels) {
  const CurvePoints c = pr_curve(labels);
  // average precision: sum of precision * recall increments per score group
  double ap = 0.0;
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    ap += (c.points[k].x - c.points[k - 1].x) * c.points[k].y;
  }
  return ap;
}

BinaryMetrics binary_metrics(const cluster::Partition& predicted,
                             const cluster::Partition& truth) {
  const cluster::PairCounts c = cluster::pair_confusion(predicted, truth);
  BinaryMetrics m;
  // 0/0 convention: an empty prediction against an empty truth is perfect.
  m.precision = safe_ratio(c.tp, c.tp + c.fp, c.tp + c.fn == 0 ? 1.0 : 0.0);
  m.recall = safe_ratio(c.tp, c.tp + c.fn, c.tp + c.fp == 0 ? 1.0 : 0.0);
  m.f1 = (m.precision + m.recall) == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  const std::size_t total = c.tp + c.fp + c.fn + c.tn;
  m.accuracy = safe_ratio(c.tp + c.tn, total, 1.0);
  return m;
}

double ari(const cluster::Partition& a, const cluster::Partition& b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("ari: partitions cover different ids");
  }
  // contingency table
  std::map<std::pair<std::string, std::string>, std::size_t> cont;
  std::map<std::string, std::size_t> row_sums, col_sums;
  for (const auto& [id, la] : a.assignment) {
    auto it = b.assignment.find(id);
    if (it == b.assignment.end()) {
      throw InvalidInputError("ari: id '" + id + "' missing from second partition");
    }
    ++cont[{la, it->second}];
    ++row_sums[la];
    ++col_sums[it->second];
  }
  auto comb2 = [](std::size_t x) {
    return x < 2 ? 0.0 : double(x) * double(x - 1) / 2.0;
  };
  double sum_cont = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, v] : cont) sum_cont += comb2(v);
  for (const auto& [_, v] : row_sums) sum_rows += comb2(v);
  for (const auto& [_, v] : col_sums) sum_cols += comb2(v);
  const double total = comb2(a.size());
  const double expected = total == 0.0 ? 0.0 : sum_rows * sum_cols / total;
  const double max_index = (sum_rows + sum_cols) / 2.0;
  if (max_index == expected) {
    // degenerate agreement (e.g. both all-singletons or both one cluster)
    return 1.0;
  }
  return (sum_cont - expected) / (max_index - expected);
}

double nmi(const cluster::Partition& a, const cluster::Partition& b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("nmi: partitions cover different ids");
  }
  const double n = double(a.size());
  std::map<std::pair<std::string, std::string>, std::size_t> cont;
  std::map<std::string, std::size_t> row_sums, col_sums;
  for (const auto& [id, la] : a.assignment) {
    auto it = b.assignment.find(id);
    if (it == b.assignment.end()) {
      throw InvalidInputError("nmi: id '" + id + "' missing from second partition");
    }
    ++cont[{la, it->second}];
    ++row_sums[la];
    ++col_sums[it->second];
  }
  if (row_sums.size() == 1 && col_sums.size() == 1) return 1.0;

  double h_a = 0.0, h_b = 0.0, mi = 0.0;
  for (const auto& [_, v] : row_sums) {
    const double p = double(v) / n;
    h_a -= p * std::log(p);
  }
  for (const auto& [_, v] : col_sums) {
    const double p = double(v) / n;
    h_b -= p * std::log(p);
  }
  for (const auto& [labels, v] : cont) {
    const double p = double(v) / n;
    const double pa = double(row_sums.at(labels.first)) / n;
    const double pb = double(col_sums.at(labels.second)) / n;
    mi += p * std::log(p / (pa * pb));
  }
  const double normalizer = (h_a + h_b) / 2.0;
  if (normalizer <= 0.0) return 0.0;  // exactly one side is trivial
  return mi / normalizer;
}

Histograms link_histograms(const distance::DistanceMatrix& D,
                           const cluster::Partition& truth, int bins) {
  if (bins < 1) throw InvalidInputError("link_histograms: bins must be >= 1");
  const PairLabels labels = pair_labels(D, truth);

  std::vector<double> intra, inter;
  for (std::size_t k = 0; k < labels.score.size(); ++k) {
    (labels.y_true[k] ? intra : inter).push_back(labels.score[k]);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : labels.score) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;  // all-equal distances: one wide bin

  Histograms h;
  h.edges.resize(bins + 1);
  for (int k = 0; k <= bins; ++k) {
    h.edges[k] = lo + (hi - lo) * double(k) / double(bins);
  }
  h.intra.assign(bins, 0);
  h.inter.assign(bins, 0);
  auto bin_of = [&](double v) {
    int b = int((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
  };
  for (double v : intra) ++h.intra[bin_of(v)];
  for (double v : inter) ++h.inter[bin_of(v)];

  if (!inter.empty()) {
    const double min_inter = *std::min_element(inter.begin(), inter.end());
    for (double v : intra) {
      if (v > min_inter) ++h.violations;
    }
  }
  return h;
}

std::vector<RankedPair> rank_candidates(const distance::DistanceMatrix& D) {
  D.validate();
  std::vector<RankedPair> out;
  const std::size_t n = D.size();
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      RankedPair r;
      r.id_a = std::min(D.ids[i], D.ids[j]);
      r.id_b = std::max(D.ids[i], D.ids[j]);
      r.distance = D.at(i, j);
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(), [](const RankedPair& a, const RankedPair& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.id_a != b.id_a) return a.id_a < b.id_a;
    return a.id_b < b.id_b;
  });
  return out;
}

void CurvePoints::save(const std::string& csv_path) const {
  std::ofstream f(csv_path, std::ios::binary);
  if (!f) throw IoError("CurvePoints: cannot write " + csv_path);
  f << (kind == CurveKind::kRoc ? "fpr,tpr,threshold" : "recall,precision,threshold")
    << '\n';
  for (const auto& p : points) {
    f << format_double(p.x) << ',' << format_double(p.y) << ','
      << format_double(p.threshold) << '\n';
  }
}

void Histograms::save(const std::string& csv_path) const {
  std::ofstream f(csv_path, std::ios::binary);
  if (!f) throw IoError("Histograms: cannot write " + csv_path);
  f << "bin_lo,bin_hi,intra_count,inter_count\n";
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    f << format_double(edges[k]) << ',' << format_double(edges[k + 1]) << ','
      << intra[k] << ',' << inter[k] << '\n';
  }
  f << "# violations," << violations << ",,\n";
}

}  // namespace dielink::evalx
