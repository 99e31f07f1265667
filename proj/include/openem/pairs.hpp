#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "openem/corpus.hpp"

namespace openem {

enum class Label : std::uint8_t { kMismatched = 0, kMatched = 1 };

std::string_view to_string(Label label);
Label label_from_string(std::string_view s);

/// Pair in canonical order (left_id < right_id).
struct LabeledPair {
  std::string left_id;
  std::string right_id;
  Label label = Label::kMismatched;

  /// Orders the ids; throws ValidationError when they are equal.
  static LabeledPair make(std::string a, std::string b, Label label);
  bool operator==(const LabeledPair&) const = default;
};

class PairSet {
 public:
  PairSet() = default;
  explicit PairSet(std::string source_corpus_hash) : source_corpus_hash_(std::move(source_corpus_hash)) {}

  /// Appends; throws ValidationError on a duplicate canonical pair.
  void add(LabeledPair pair);
  void append(const PairSet& other);

  const std::vector<LabeledPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::size_t n_matched() const { return n_matched_; }
  std::size_t n_mismatched() const { return pairs_.size() - n_matched_; }
  bool contains(const std::string& a, const std::string& b) const;

  const std::string& source_corpus_hash() const { return source_corpus_hash_; }
  void set_source_corpus_hash(std::string h) { source_corpus_hash_ = std::move(h); }

  /// Applies a permutation drawn from `rng`.
  template <typename Urbg>
  void shuffle(Urbg& rng);

  bool operator==(const PairSet& other) const { return pairs_ == other.pairs_; }

 private:
  static std::uint64_t hash_ids(const std::string& a, const std::string& b);
  void rebuild_index();

  std::vector<LabeledPair> pairs_;
  // hash(left, right) -> position; collisions resolved by comparing ids.
  std::unordered_multimap<std::uint64_t, std::size_t> index_;
  std::size_t n_matched_ = 0;
  std::string source_corpus_hash_;
};

template <typename Urbg>
void PairSet::shuffle(Urbg& rng) {
  for (std::size_t i = pairs_.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(pairs_[i - 1], pairs_[pick(rng)]);
  }
  rebuild_index();
}

/// `{"left_id", "right_id", "label"}` per line.
std::string pairs_to_jsonl(const PairSet& pairs);
PairSet pairs_from_jsonl(std::string_view text, std::string_view source = "<memory>");

struct SplitRatio {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  bool operator==(const SplitRatio&) const = default;
};
void validate(const SplitRatio& r);

struct GenConfig {
  /// Mismatched:matched ratio.
  double k = 3.0;
  SplitRatio split;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_matched_per_cluster;
  /// Probability that a mismatched draw comes from the same hard-negative
  /// family (the record's "family" extra key, or its category).
  double family_bias = 0.5;
  bool within_category = false;
};

/// Unordered pairs of record ordinals, keyed as (lo << 32 | hi).
using PairKeySet = std::unordered_set<std::uint64_t>;

constexpr std::uint64_t pair_key(std::size_t a, std::size_t b) {
  const auto lo = a < b ? a : b;
  const auto hi = a < b ? b : a;
  return (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint64_t>(hi);
}

/// Keys of a PairSet against the ordinals of `corpus`.
PairKeySet pair_keys(const PairSet& pairs, const Corpus& corpus);

struct SampleResult {
  PairSet pairs;
  /// Requested minus delivered; non-zero only when the universe ran out.
  std::size_t shortfall = 0;
};

/// Every within-cluster pair (or a uniform subset of min(cap, C(m,2)) per
/// cluster), emitted in cluster-key order.
PairSet matched_pairs(const Corpus& corpus, std::optional<std::size_t> cap, std::uint64_t seed);

/// Matched pairs among a subset of records (`pool` holds corpus ordinals).
PairSet matched_pairs(const Corpus& corpus, const std::vector<std::size_t>& pool,
                      std::optional<std::size_t> cap, std::uint64_t seed);

/// Exactly n distinct cross-cluster pairs drawn uniformly over record pairs,
/// with a `family_bias` share drawn inside the same family. Throws
/// ValidationError when the corpus has fewer than two clusters.
SampleResult sample_mismatched(const Corpus& corpus, std::size_t n, std::uint64_t seed,
                               bool within_category, double family_bias);

/// Sampling over `pool` (corpus ordinals), skipping any key in `exclude`.
SampleResult sample_mismatched(const Corpus& corpus, const std::vector<std::size_t>& pool,
                               std::size_t n, std::uint64_t seed, bool within_category,
                               double family_bias, const PairKeySet& exclude);

/// Size of the cross-cluster pair universe over `pool`.
std::uint64_t count_cross_pairs(const Corpus& corpus, const std::vector<std::size_t>& pool,
                                bool within_category);

struct VanillaSplit {
  PairSet train;
  PairSet val;
  PairSet test;
  std::vector<std::string> warnings;
};

/// Classic benchmark construction with a ratio-exact stratified split:
/// matched pairs are shuffled and cut by `cfg.split`, then each part gets
/// round(k * n_matched_part) mismatched pairs, disjoint across parts. The
/// test part uses `k_test` (defaults to cfg.k).
VanillaSplit build_vanilla_split(const Corpus& corpus, const std::vector<std::size_t>& pool,
                                 const GenConfig& cfg, std::optional<double> k_test = std::nullopt);

}  // namespace openem
