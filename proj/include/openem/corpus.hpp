#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "openem/io.hpp"

namespace openem {

/// One observation of a real-world entity.
struct EntityRecord {
  std::string record_id;
  std::string cluster_id;
  std::string category;
  std::map<std::string, std::string> attrs;
  std::optional<Eigen::VectorXd> image_vec;
  /// Keys outside the record schema, carried through untouched.
  Json extra = Json::object();

  bool operator==(const EntityRecord& other) const;
};

struct CorpusStats {
  std::size_t n_clusters = 0;
  std::size_t n_records = 0;
  std::optional<std::size_t> min_cluster_size;
  std::optional<double> mean_cluster_size;
  std::optional<std::size_t> max_cluster_size;
  std::map<std::string, std::size_t> records_per_category;
  double image_coverage = 0.0;
};

/// Immutable collection of entity clusters.
///
/// Records are stored flattened in cluster-key order, file order within a
/// cluster; the position of a record in that sequence is its ordinal, which
/// pair generation uses as a compact key.
class Corpus {
 public:
  Corpus() = default;

  /// Groups and validates. Throws ValidationError on duplicate ids, empty
  /// text, or ragged image vectors.
  static Corpus from_records(std::vector<EntityRecord> records, Json meta = Json::object());

  const std::vector<EntityRecord>& records() const { return records_; }
  const std::map<std::string, std::vector<std::size_t>>& clusters() const { return clusters_; }
  std::optional<int> image_dim() const { return image_dim_; }
  const Json& meta() const { return meta_; }
  Json& meta() { return meta_; }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::optional<std::size_t> find(const std::string& record_id) const;
  const EntityRecord& at(const std::string& record_id) const;

  /// Dense cluster index of a record ordinal (position in clusters() order).
  std::size_t cluster_index(std::size_t ordinal) const { return cluster_of_[ordinal]; }
  std::vector<std::string> categories() const;

  /// Sub-corpus holding the given ordinals. Keeps meta and image_dim.
  Corpus subset(const std::vector<std::size_t>& ordinals) const;

  /// SHA-256 of the canonical JSONL serialization (records only).
  const std::string& content_hash() const { return hash_; }

 private:
  std::vector<EntityRecord> records_;
  std::map<std::string, std::vector<std::size_t>> clusters_;
  std::vector<std::size_t> cluster_of_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::optional<int> image_dim_;
  Json meta_ = Json::object();
  std::string hash_ = sha256_hex("");
};

Json record_to_json(const EntityRecord& r);
/// Throws ValidationError describing the first schema problem.
EntityRecord record_from_json(const Json& j);

/// Canonical JSONL text: one record per line in ordinal order.
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(std::string_view text, std::string_view source = "<memory>");

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

CorpusStats corpus_stats(const Corpus& corpus);

struct CategoryFilterResult {
  Corpus corpus;
  std::size_t excluded_mixed_clusters = 0;
  /// Set when the category does not occur at all.
  bool unknown_category = false;
};

/// Clusters whose records all carry `category`. Mixed clusters are dropped
/// and counted, never split.
CategoryFilterResult filter_by_category(const Corpus& corpus, const std::string& category);

/// Title view: the "title" attribute if present, otherwise the first
/// non-empty attribute value.
const std::string& title_text(const EntityRecord& r);
/// Flattened view: attribute values joined by spaces in key order.
std::string flat_text(const EntityRecord& r);

}  // namespace openem
