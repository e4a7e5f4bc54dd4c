#include "dielink/distance_matrix.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dielink::distance {

void DistanceMatrix::validate() const {
  const std::size_t n = ids.size();
  if (values.size() != n * n) {
    throw InvalidInputError("DistanceMatrix: values size != n*n");
  }
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty() || !seen.insert(id).second) {
      throw InvalidInputError("DistanceMatrix: empty or duplicate id '" + id + "'");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (at(i, i) != 0.0) {
      throw InvalidInputError("DistanceMatrix: nonzero diagonal at " + ids[i]);
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = at(i, j);
      if (!std::isfinite(v)) {
        throw InvalidInputError("DistanceMatrix: non-finite value at (" +
                                ids[i] + "," + ids[j] + ")");
      }
      if (v != at(j, i)) {
        throw InvalidInputError("DistanceMatrix: asymmetry at (" + ids[i] +
                                "," + ids[j] + ")");
      }
    }
  }
}

std::size_t DistanceMatrix::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  throw InvalidInputError("DistanceMatrix: unknown id '" + id + "'");
}

DistanceMatrix DistanceMatrix::subset(const std::vector<std::string>& keep) const {
  DistanceMatrix out;
  out.method = method;
  out.normalized = normalized;
  out.seed = seed;
  out.fingerprint = fingerprint;
  out.config_json = config_json;
  out.ids = keep;
  std::vector<std::size_t> idx;
  idx.reserve(keep.size());
  for (const auto& id : keep) idx.push_back(index_of(id));
  out.values.resize(keep.size() * keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      out.values[i * keep.size() + j] = at(idx[i], idx[j]);
    }
  }
  return out;
}

std::vector<double> DistanceMatrix::upper_values() const {
  std::vector<double> out;
  const std::size_t n = ids.size();
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(at(i, j));
  }
  return out;
}

void DistanceMatrix::save(const std::string& csv_path) const {
  validate();
  std::ofstream f(csv_path, std::ios::binary);
  if (!f) throw IoError("DistanceMatrix: cannot write " + csv_path);
  f << "id";
  for (const auto& id : ids) f << ',' << id;
  f << '\n';
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    f << ids[i];
    for (std::size_t j = 0; j < n; ++j) f << ',' << format_double(at(i, j));
    f << '\n';
  }
  f.close();
  if (!f) throw IoError("DistanceMatrix: write failed for " + csv_path);

  nlohmann::json meta;
  meta["method"] = method;
  meta["normalized"] = normalized;
  meta["seed"] = seed;
  meta["fingerprint"] = fingerprint;
  meta["n"] = n;
  if (!config_json.empty()) {
    meta["config"] = nlohmann::json::parse(config_json);
  }
  std::ofstream mf(csv_path + ".meta.json", std::ios::binary);
  if (!mf) throw IoError("DistanceMatrix: cannot write " + csv_path + ".meta.json");
  mf << meta.dump(2) << '\n';
}

DistanceMatrix load_matrix_csv(const std::string& csv_path) {
  std::ifstream f(csv_path, std::ios::binary);
  if (!f) throw IoError("DistanceMatrix: cannot read " + csv_path);
  DistanceMatrix m;
  std::string line;
  if (!std::getline(f, line)) {
    throw InvalidInputError("DistanceMatrix: empty file " + csv_path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream header(line);
  std::string cell;
  if (!std::getline(header, cell, ',') || cell != "id") {
    throw InvalidInputError("DistanceMatrix: bad header in " + csv_path);
  }
  while (std::getline(header, cell, ',')) m.ids.push_back(cell);
  const std::size_t n = m.ids.size();
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(f, line)) {
      throw InvalidInputError("DistanceMatrix: truncated matrix in " + csv_path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream row(line);
    if (!std::getline(row, cell, ',') || cell != m.ids[i]) {
      throw InvalidInputError("DistanceMatrix: row label mismatch at line " +
                              std::to_string(i + 2));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw InvalidInputError("DistanceMatrix: short row at line " +
                                std::to_string(i + 2));
      }
      try {
        m.values[i * n + j] = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidInputError("DistanceMatrix: bad number '" + cell + "'");
      }
    }
  }
  return m;
}

DistanceMatrix DistanceMatrix::load(const std::string& csv_path) {
  DistanceMatrix m = load_matrix_csv(csv_path);
  std::ifstream mf(csv_path + ".meta.json", std::ios::binary);
  if (mf) {
    nlohmann::json meta = nlohmann::json::parse(mf, nullptr, true, true);
    m.method = meta.value("method", "");
    m.normalized = meta.value("normalized", false);
    m.seed = meta.value("seed", std::uint64_t(0));
    m.fingerprint = meta.value("fingerprint", "");
    if (meta.contains("config")) m.config_json = meta["config"].dump();
  }
  m.validate();
  return m;
}

}  // namespace dielink::distance
