#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "openem/corpus.hpp"
#include "openem/pairs.hpp"

namespace openem {

/// Lowercased ASCII alphanumeric runs; bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// |A ∩ B| / |A ∪ B| over sorted unique id lists; 0 when both are empty.
double jaccard(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);
/// 2|A ∩ B| / (|A| + |B|); 0 when both are empty.
double dice(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);
/// Sorted unique character trigrams of the space-padded normalized text.
std::vector<std::uint32_t> char_trigrams(std::string_view text);

/// Document frequencies over training records (flattened attribute text).
struct IdfTable {
  std::size_t n_docs = 0;
  std::map<std::string, std::size_t> df;

  /// Smoothed: ln((1 + N) / (1 + df)) + 1. Unknown tokens get df = 0.
  double idf(const std::string& token) const;
  static IdfTable fit(const std::vector<const EntityRecord*>& docs);
};

/// Entities learned from training pairs: connected components of the
/// matched train graph, each summarised by the normalised sum of its
/// records' TF-IDF vectors. A record is mapped to its most similar entity.
/// Records seen in training contributed to their entity's profile, so the
/// mapping is most reliable for them and degrades for unseen records and
/// unseen entities.
struct EntityMemory {
  std::vector<std::map<std::string, double>> profiles;

  static EntityMemory fit(const PairSet& train, const Corpus& records, const IdfTable& idf);
};

/// Sparse L2-normalised TF-IDF vector, sorted by token id.
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;
double sparse_dot(const SparseVec& a, const SparseVec& b);

struct PreparedRecord {
  std::vector<std::uint32_t> title_tokens;
  std::vector<std::uint32_t> attr_tokens;
  std::vector<std::uint32_t> title_trigrams;
  SparseVec tfidf;
  std::size_t text_length = 0;
  int entity = -1;
  double entity_similarity = 0.0;
  const Eigen::VectorXd* image = nullptr;
};

inline constexpr int kTextFeatureCount = 7;
inline constexpr int kVisualFeatureCount = 5;
const std::vector<std::string>& text_feature_names();
const std::vector<std::string>& visual_feature_names();

struct PairFeatures {
  Eigen::VectorXd text;
  std::optional<Eigen::VectorXd> vis;
  /// Both records had no text; `text` is all zeros.
  bool text_empty = false;
};

/// Train-fitted state needed to featurize any pair.
struct FeatureModel {
  IdfTable idf;
  EntityMemory memory;

  static FeatureModel fit(const PairSet& train, const Corpus& records);
};

Json to_json(const FeatureModel& m);
FeatureModel feature_model_from_json(const Json& j);

/// Token vocabulary and entity index bound to one FeatureModel. prepare()
/// extends the vocabulary; featurize() is const and thread-safe.
class FeatureSpace {
 public:
  explicit FeatureSpace(const FeatureModel& model);

  PreparedRecord prepare(const EntityRecord& r);
  /// Prepared records for every ordinal of `corpus`.
  std::vector<PreparedRecord> prepare_all(const Corpus& corpus);

 private:
  std::uint32_t token_id(const std::string& token);

  const FeatureModel* model_;
  std::unordered_map<std::string, std::uint32_t> vocab_;
  std::vector<double> idf_by_id_;
  // token id -> (entity, weight)
  std::unordered_map<std::uint32_t, std::vector<std::pair<int, double>>> entity_index_;
  double unknown_idf_;
};

/// Symmetric in its arguments.
PairFeatures featurize(const PreparedRecord& left, const PreparedRecord& right);
PairFeatures featurize(const EntityRecord& left, const EntityRecord& right, const FeatureModel& model);

}  // namespace openem
