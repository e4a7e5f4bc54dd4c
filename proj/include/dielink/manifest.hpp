#pragma once

#include <map>
#include <string>
#include <vector>

namespace dielink::manifest {

inline constexpr const char* kUnknownLabel = "unknown";

struct CoinRecord {
  std::string coin_id;
  std::string image_path;
  std::string die_label;  // "unknown" = unlabeled
  std::string dataset_id;
};

// One dataset's worth of coins.
struct Manifest {
  std::string dataset_id;
  std::vector<CoinRecord> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t pair_count() const {
    return entries.size() * (entries.size() - 1) / 2;
  }
  // Same-die pairs among labeled coins.
  std::size_t link_count() const;
  std::vector<std::string> ids() const;
  std::vector<std::string> labeled_ids() const;
  // die_label -> member coin ids, unlabeled excluded; deterministic order.
  std::map<std::string, std::vector<std::string>> groups() const;
};

// CSV with header coin_id,image_path,die_label,dataset_id. Rows are grouped
// by dataset_id (datasets ordered by id, rows kept in file order).
// Malformed/duplicate rows raise an itemized validation error.
std::vector<Manifest> load_manifests(const std::string& path);

// Convenience for files expected to hold exactly one dataset.
Manifest load_single_manifest(const std::string& path);

// Itemized error listing entries whose image file is missing/unreadable.
void check_image_files(const Manifest& m);

void save_manifest(const std::vector<Manifest>& datasets,
                   const std::string& path);

// Minimal CSV row parsing/writing with double-quote escaping.
std::vector<std::string> split_csv_row(const std::string& line);
std::string join_csv_row(const std::vector<std::string>& fields);

}  // namespace dielink::manifest
