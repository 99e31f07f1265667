#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openem/corpus.hpp"
#include "openem/pairs.hpp"

namespace openem {

enum class Paradigm { kVanilla, kRecordLinking, kClusterFocused, kOpenMatching };

inline constexpr std::array<Paradigm, 4> kAllParadigms = {
    Paradigm::kVanilla, Paradigm::kRecordLinking, Paradigm::kClusterFocused,
    Paradigm::kOpenMatching};

/// "vanilla", "rl", "cfm", "om".
std::string_view to_string(Paradigm p);
Paradigm paradigm_from_string(std::string_view s);

/// How one corpus is carved into seen and unseen material.
struct SplitPlan {
  std::uint64_t seed = 0;
  int n_train_clusters = 250;
  int n_holdout_clusters = 100;
  double holdout_record_fraction = 0.4;
  double k_train = 3.0;
  double k_test = 3.0;
  /// Applied to the matched pairs of training records. train and val are
  /// shared by all paradigms; the remaining share feeds the vanilla test.
  SplitRatio split;
  double family_bias = 0.5;
  std::optional<std::size_t> max_matched_per_cluster;
};

void validate(const SplitPlan& plan);
Json to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const Json& j);

struct Partition {
  /// Corpus ordinals, ascending.
  std::vector<std::size_t> train_records;
  std::vector<std::size_t> holdout_records;  // unseen records of training clusters
  std::vector<std::size_t> holdout_cluster_records;
  std::vector<std::string> train_clusters;
  std::vector<std::string> holdout_clusters;
  std::vector<std::string> warnings;

  std::string hash(const Corpus& corpus) const;
};

/// Samples n_train + n_holdout clusters, designates the last n_holdout of
/// the draw as unseen clusters, and holds out ceil(fraction * m) records of
/// each training cluster (clamped to keep at least one on each side).
Partition partition_corpus(const Corpus& corpus, const SplitPlan& plan);

struct BenchmarkBundle {
  Paradigm paradigm = Paradigm::kVanilla;
  PairSet train;
  PairSet val;
  PairSet test;
  /// Records referenced by any of the three PairSets.
  Corpus records;
  Json manifest = Json::object();
};

struct SharedSplit {
  PairSet train;
  PairSet val;
  /// Matched pairs held back from train/val plus mismatched at k_test.
  PairSet vanilla_test;
  std::vector<std::string> warnings;
};

/// Pair generation over the training records of training clusters. All four
/// paradigms reuse train and val.
SharedSplit build_shared_train_val(const Corpus& corpus, const Partition& part,
                                   const SplitPlan& plan);

struct TestBuild {
  PairSet pairs;
  std::vector<std::string> warnings;
  std::uint64_t seed = 0;
};

/// Matched + mismatched pairs drawn only from holdout-cluster records.
TestBuild build_om_test(const Corpus& corpus, const Partition& part, const SplitPlan& plan);
/// Pairs drawn only among held-out records of training clusters.
TestBuild build_cfm_test(const Corpus& corpus, const Partition& part, const SplitPlan& plan,
                         const SharedSplit& shared);
/// Each pair joins one held-out record with one seen training record.
TestBuild build_rl_test(const Corpus& corpus, const Partition& part, const SplitPlan& plan,
                        const SharedSplit& shared);

/// Test set of one paradigm for the plan's k_test.
TestBuild build_test(Paradigm paradigm, const Corpus& corpus, const Partition& part,
                     const SplitPlan& plan, const SharedSplit& shared);

/// Closes the bundle over its records and fills the manifest (plan,
/// hashes, counts, warnings, audit block).
BenchmarkBundle assemble_bundle(Paradigm paradigm, const Corpus& corpus, const Partition& part,
                                const SplitPlan& plan, const SharedSplit& shared,
                                const TestBuild& test);

/// One partition drives all four bundles.
std::map<Paradigm, BenchmarkBundle> build_all(const Corpus& corpus, const SplitPlan& plan);

/// Plan for a category sub-corpus: unchanged when it fits, otherwise the
/// cluster counts are scaled by the category's share of clusters.
SplitPlan plan_for_subcorpus(const SplitPlan& plan, std::size_t n_corpus_clusters,
                             std::size_t n_sub_clusters);

/// Standalone classic construction over the whole corpus (paradigm vanilla).
BenchmarkBundle build_vanilla(const Corpus& corpus, const GenConfig& cfg);

void write_bundle(const BenchmarkBundle& bundle, const std::filesystem::path& dir);
BenchmarkBundle read_bundle(const std::filesystem::path& dir);

/// Records referenced by any pair, in corpus order. Throws ValidationError
/// on a dangling reference.
Corpus close_over(const Corpus& corpus, std::initializer_list<const PairSet*> sets);

}  // namespace openem
