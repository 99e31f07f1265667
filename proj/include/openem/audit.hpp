#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "openem/builder.hpp"

namespace openem {

struct SplitCounts {
  std::size_t n_matched = 0;
  std::size_t n_mismatched = 0;
  /// mismatched / matched; absent when there are no matched pairs.
  std::optional<double> ratio() const;
};

/// Contamination statistics of a benchmark's test split against its
/// train and val splits. "Seen" means present in train or val.
struct AuditReport {
  std::string name;
  std::optional<Paradigm> paradigm;

  std::size_t n_test_records = 0;
  std::size_t n_test_clusters = 0;
  std::size_t n_seen_test_records = 0;
  std::size_t n_seen_test_clusters = 0;
  double seen_cluster_ratio = 0.0;
  double seen_record_ratio = 0.0;

  // Pair-level variants.
  double exactly_one_seen_pair_fraction = 0.0;
  double both_seen_pair_fraction = 0.0;
  double any_seen_pair_fraction = 0.0;
  double both_clusters_seen_pair_fraction = 0.0;

  std::size_t test_pairs_in_train_or_val = 0;

  SplitCounts train;
  SplitCounts val;
  SplitCounts test;

  bool contract_checked = false;
  bool contract_passed = true;
  std::vector<std::string> contract_failures;
};

/// Pure set computation. Throws ValidationError when a pair references a
/// record missing from `records`.
AuditReport audit_pairsets(const PairSet& train, const PairSet& val, const PairSet& test,
                           const Corpus& records, std::optional<Paradigm> paradigm);

AuditReport audit(const BenchmarkBundle& bundle);

/// Same statistics for third-party split files.
AuditReport audit_external(const std::filesystem::path& train, const std::filesystem::path& val,
                           const std::filesystem::path& test, const std::filesystem::path& records,
                           std::optional<Paradigm> paradigm = std::nullopt);

/// Exact checks, no tolerance: OM 0 seen clusters; CFM all clusters seen and
/// no record seen; RL exactly one seen record per pair; every paradigm keeps
/// test pairs out of train and val.
void check_contract(AuditReport& report);

Json to_json(const AuditReport& report);
AuditReport audit_from_json(const Json& j);

/// Aligned text table with columns Benchmark, Matched:Mismatched,
/// Seen Clusters, Seen Records.
std::string render_audit_table(const std::vector<AuditReport>& reports);

}  // namespace openem
