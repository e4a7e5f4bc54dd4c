#include "dielink/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "dielink/manifest.hpp"

namespace dielink::cluster {

namespace {

struct UnionFind {
  std::vector<int> parent, rank_;
  explicit UnionFind(std::size_t n) : parent(n), rank_(n, 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }
};

Partition partition_from_components(const std::vector<std::string>& ids,
                                    UnionFind& uf) {
  // root -> smallest member id
  std::map<int, std::string> root_label;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int r = uf.find(int(i));
    auto it = root_label.find(r);
    if (it == root_label.end() || ids[i] < it->second) {
      root_label[r] = ids[i];
    }
  }
  Partition p;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    p.assignment[ids[i]] = root_label[uf.find(int(i))];
  }
  return p;
}

}  // namespace

std::map<std::string, std::vector<std::string>> Partition::clusters() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [id, label] : assignment) out[label].push_back(id);
  return out;
}

std::size_t Partition::positive_pair_count() const {
  std::size_t total = 0;
  for (const auto& [_, members] : clusters()) {
    total += members.size() * (members.size() - 1) / 2;
  }
  return total;
}

Partition Partition::from_groups(
    const std::map<std::string, std::vector<std::string>>& groups) {
  Partition p;
  std::set<std::string> seen;
  for (const auto& [_, members] : groups) {
    if (members.empty()) continue;
    const std::string label = *std::min_element(members.begin(), members.end());
    for (const auto& id : members) {
      if (!seen.insert(id).second) {
        throw InvalidInputError("Partition: id '" + id +
                                "' appears in multiple groups");
      }
      p.assignment[id] = label;
    }
  }
  return p;
}

void Partition::save(const std::string& csv_path) const {
  std::ofstream f(csv_path, std::ios::binary);
  if (!f) throw IoError("Partition: cannot write " + csv_path);
  f << "coin_id,cluster_label\n";
  for (const auto& [id, label] : assignment) {
    f << manifest::join_csv_row({id, label}) << '\n';
  }
}

Partition Partition::load(const std::string& csv_path) {
  std::ifstream f(csv_path, std::ios::binary);
  if (!f) throw IoError("Partition: cannot read " + csv_path);
  std::string line;
  if (!std::getline(f, line)) {
    throw InvalidInputError("Partition: empty file " + csv_path);
  }
  std::map<std::string, std::vector<std::string>> groups;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = manifest::split_csv_row(line);
    if (fields.size() != 2) {
      throw InvalidInputError("Partition: bad row '" + line + "'");
    }
    groups[fields[1]].push_back(fields[0]);
  }
  return from_groups(groups);  // re-canonicalizes labels
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kMax: return "max";
    case Strategy::kMean: return "mean";
    case Strategy::kMedian: return "median";
    case Strategy::kMin: return "min";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "max") return Strategy::kMax;
  if (name == "mean") return Strategy::kMean;
  if (name == "median") return Strategy::kMedian;
  if (name == "min") return Strategy::kMin;
  throw InvalidInputError("unknown threshold strategy '" + name + "'");
}

Partition single_linkage_threshold(const distance::DistanceMatrix& D, double t) {
  if (!std::isfinite(t)) {
    throw InvalidInputError("single_linkage_threshold: threshold not finite");
  }
  D.validate();
  const std::size_t n = D.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (D.at(i, j) <= t) uf.unite(int(i), int(j));
    }
  }
  return partition_from_components(D.ids, uf);
}

PairCounts pair_confusion(const Partition& predicted, const Partition& truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidInputError("pair_confusion: partitions cover different ids");
  }
  std::vector<std::string> ids;
  ids.reserve(truth.assignment.size());
  for (const auto& [id, _] : truth.assignment) {
    if (!predicted.assignment.count(id)) {
      throw InvalidInputError("pair_confusion: id '" + id + "' missing");
    }
    ids.push_back(id);
  }
  PairCounts c;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const bool pred = predicted.assignment.at(ids[i]) == predicted.assignment.at(ids[j]);
      const bool real = truth.assignment.at(ids[i]) == truth.assignment.at(ids[j]);
      if (pred && real) ++c.tp;
      else if (pred && !real) ++c.fp;
      else if (!pred && real) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

double optimal_threshold(const distance::DistanceMatrix& D,
                         const Partition& truth, double* best_f1) {
  D.validate();
  const std::size_t n = D.size();
  for (const auto& id : D.ids) {
    if (!truth.assignment.count(id)) {
      throw InvalidInputError("optimal_threshold: truth misses id '" + id + "'");
    }
  }

  // Positive pairs in the ground truth; F1 is undefined without any.
  std::size_t p_true = 0;
  {
    std::map<std::string, std::size_t> sizes;
    for (const auto& id : D.ids) ++sizes[truth.assignment.at(id)];
    for (const auto& [_, s] : sizes) p_true += s * (s - 1) / 2;
  }
  if (p_true == 0) {
    throw InvalidInputError(
        "optimal_threshold: ground truth has no positive pairs");
  }

  // Every pair is scored once: a pair counts as a predicted link when its
  // distance is <= the candidate threshold. (The same convention as the ROC
  // sweep; deliberately not the transitive closure, which would let the
  // optimum drift below the largest linked-pair distance.)
  struct Edge {
    double d;
    bool positive;
  };
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      edges.push_back({D.at(i, j), truth.assignment.at(D.ids[i]) ==
                                       truth.assignment.at(D.ids[j])});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.d < b.d; });

  std::vector<double> distinct;
  for (const auto& e : edges) {
    if (distinct.empty() || e.d != distinct.back()) distinct.push_back(e.d);
  }
  std::vector<double> candidates;
  candidates.push_back(distinct.front() - 1.0);  // all singletons
  for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
    candidates.push_back(distinct[k] + (distinct[k + 1] - distinct[k]) / 2.0);
  }
  candidates.push_back(distinct.back() + 1.0);  // one cluster

  // Sweep the candidates in ascending order, accumulating predicted links
  // (pp) and the true ones among them (tp); F1 = 2*tp / (pp + p_true).
  std::size_t pp = 0, tp = 0;
  std::size_t next_edge = 0;
  double best_t = candidates.front();
  double best = -1.0;
  for (double cand : candidates) {
    while (next_edge < edges.size() && edges[next_edge].d <= cand) {
      ++pp;
      if (edges[next_edge].positive) ++tp;
      ++next_edge;
    }
    const double f1 = 2.0 * double(tp) / double(pp + p_true);
    if (f1 > best) {
      best = f1;
      best_t = cand;
    }
  }
  if (best_f1) *best_f1 = best;
  return best_t;
}

double aggregate(const std::vector<double>& values, Strategy strategy) {
  if (values.empty()) {
    throw InvalidInputError("aggregate: no values");
  }
  switch (strategy) {
    case Strategy::kMax:
      return *std::max_element(values.begin(), values.end());
    case Strategy::kMin:
      return *std::min_element(values.begin(), values.end());
    case Strategy::kMean: {
      double s = 0.0;
      for (double v : values) s += v;
      return s / double(values.size());
    }
    case Strategy::kMedian: {
      std::vector<double> v = values;
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
  }
  throw InvalidInputError("aggregate: bad strategy");
}

ThresholdPlan loo_threshold(const std::string& target_dataset_id,
                            const std::vector<DatasetTruth>& all,
                            Strategy strategy) {
  if (all.size() < 2) {
    throw InvalidInputError("loo_threshold: need at least 2 datasets");
  }
  ThresholdPlan plan;
  plan.strategy = strategy;
  bool target_seen = false;
  for (const auto& ds : all) {
    if (ds.dataset_id == target_dataset_id) {
      target_seen = true;
      continue;
    }
    try {
      plan.per_dataset_optima.push_back(optimal_threshold(ds.D, ds.truth));
      plan.source_datasets.push_back(ds.dataset_id);
    } catch (const Error&) {
      plan.skipped_datasets.push_back(ds.dataset_id);
    }
  }
  if (!target_seen) {
    throw InvalidInputError("loo_threshold: target dataset '" +
                            target_dataset_id + "' not in the list");
  }
  if (plan.per_dataset_optima.empty()) {
    throw InvalidInputError(
        "loo_threshold: no source dataset yielded an optimal threshold");
  }
  plan.resulting_threshold = aggregate(plan.per_dataset_optima, strategy);
  return plan;
}

}  // namespace dielink::cluster
