#include "dielink/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "dielink/core.hpp"

namespace dielink::manifest {

std::size_t Manifest::link_count() const {
  std::size_t links = 0;
  for (const auto& [label, members] : groups()) {
    links += members.size() * (members.size() - 1) / 2;
  }
  return links;
}

std::vector<std::string> Manifest::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.coin_id);
  return out;
}

std::vector<std::string> Manifest::labeled_ids() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.die_label != kUnknownLabel) out.push_back(e.coin_id);
  }
  return out;
}

std::map<std::string, std::vector<std::string>> Manifest::groups() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& e : entries) {
    if (e.die_label != kUnknownLabel) out[e.die_label].push_back(e.coin_id);
  }
  return out;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string join_csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out += '"';
      for (char c : f) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    } else {
      out += f;
    }
  }
  return out;
}

std::vector<Manifest> load_manifests(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("manifest: cannot read " + path);

  std::vector<std::string> problems;
  std::string line;
  if (!std::getline(f, line)) {
    throw ValidationError("manifest: " + path, {"file is empty"});
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_row(line) !=
      std::vector<std::string>{"coin_id", "image_path", "die_label", "dataset_id"}) {
    throw ValidationError(
        "manifest: " + path,
        {"expected header coin_id,image_path,die_label,dataset_id"});
  }

  std::vector<CoinRecord> rows;
  std::set<std::string> seen_ids;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != 4) {
      problems.push_back("line " + std::to_string(lineno) + ": expected 4 fields, got " +
                         std::to_string(fields.size()));
      continue;
    }
    CoinRecord r{fields[0], fields[1], fields[2], fields[3]};
    if (r.coin_id.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty coin_id");
      continue;
    }
    if (r.image_path.empty() || r.die_label.empty() || r.dataset_id.empty()) {
      problems.push_back("line " + std::to_string(lineno) + " (" + r.coin_id +
                         "): empty field");
      continue;
    }
    if (!seen_ids.insert(r.coin_id).second) {
      problems.push_back("line " + std::to_string(lineno) + ": duplicate coin_id '" +
                         r.coin_id + "'");
      continue;
    }
    rows.push_back(std::move(r));
  }
  if (!problems.empty()) {
    throw ValidationError("manifest: " + path, problems);
  }
  if (rows.empty()) {
    throw ValidationError("manifest: " + path, {"no data rows"});
  }

  std::map<std::string, Manifest> by_dataset;
  for (auto& r : rows) {
    Manifest& m = by_dataset[r.dataset_id];
    m.dataset_id = r.dataset_id;
    m.entries.push_back(std::move(r));
  }
  std::vector<Manifest> out;
  out.reserve(by_dataset.size());
  for (auto& [_, m] : by_dataset) out.push_back(std::move(m));
  return out;
}

Manifest load_single_manifest(const std::string& path) {
  auto all = load_manifests(path);
  if (all.size() != 1) {
    throw ValidationError("manifest: " + path,
                          {"expected exactly one dataset_id, found " +
                           std::to_string(all.size())});
  }
  return std::move(all.front());
}

void check_image_files(const Manifest& m) {
  std::vector<std::string> problems;
  for (const auto& e : m.entries) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(e.image_path, ec)) {
      problems.push_back(e.coin_id + ": missing image file " + e.image_path);
    }
  }
  if (!problems.empty()) {
    throw ValidationError("manifest: dataset " + m.dataset_id, problems);
  }
}

void save_manifest(const std::vector<Manifest>& datasets, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("manifest: cannot write " + path);
  f << "coin_id,image_path,die_label,dataset_id\n";
  for (const auto& m : datasets) {
    for (const auto& e : m.entries) {
      f << join_csv_row({e.coin_id, e.image_path, e.die_label, e.dataset_id})
        << '\n';
    }
  }
  if (!f) throw IoError("manifest: write failed for " + path);
}

}  // namespace dielink::manifest
