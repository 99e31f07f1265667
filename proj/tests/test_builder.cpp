#include <doctest.h>

#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "openem/audit.hpp"
#include "openem/builder.hpp"
#include "openem/common.hpp"

using namespace openem;

namespace {

SplitPlan small_plan(std::uint64_t seed = 1) {
  SplitPlan p;
  p.seed = seed;
  p.n_train_clusters = 25;
  p.n_holdout_clusters = 10;
  return p;
}

std::set<std::string> ids_of(std::initializer_list<const PairSet*> sets) {
  std::set<std::string> ids;
  for (const auto* s : sets) {
    for (const auto& p : s->pairs()) {
      ids.insert(p.left_id);
      ids.insert(p.right_id);
    }
  }
  return ids;
}

}  // namespace

TEST_CASE("partition holds out ceil(fraction * m), clamped") {
  SUBCASE("m = 10, fraction 0.4") {
    SplitPlan p;
    p.n_train_clusters = 1;
    p.n_holdout_clusters = 0;
    const auto part = partition_corpus(fixtures::grid(1, 10), p);
    CHECK(part.holdout_records.size() == 4);
    CHECK(part.train_records.size() == 6);
  }
  SUBCASE("m = 2, fraction 0.9") {
    SplitPlan p;
    p.n_train_clusters = 1;
    p.n_holdout_clusters = 0;
    p.holdout_record_fraction = 0.9;
    const auto part = partition_corpus(fixtures::grid(1, 2), p);
    CHECK(part.holdout_records.size() == 1);
    CHECK(part.train_records.size() == 1);
  }
  SUBCASE("singleton training cluster is kept with a warning") {
    SplitPlan p;
    p.n_train_clusters = 2;
    p.n_holdout_clusters = 0;
    const auto part = partition_corpus(fixtures::grid(2, 1), p);
    CHECK(part.train_records.size() == 2);
    CHECK(part.holdout_records.empty());
    CHECK(part.warnings.size() == 2);
  }
  SUBCASE("default plan consumes all 350 clusters") {
    SynthConfig cfg;
    cfg.seed = 7;
    const Corpus c = generate(cfg);
    SplitPlan p;
    p.seed = 7;
    const auto part = partition_corpus(c, p);
    CHECK(part.train_clusters.size() == 250);
    CHECK(part.holdout_clusters.size() == 100);
    CHECK(part.train_records.size() + part.holdout_records.size() + part.holdout_cluster_records.size() ==
          c.size());
  }
  SUBCASE("too many clusters requested") {
    SplitPlan p;
    p.n_train_clusters = 300;
    p.n_holdout_clusters = 100;
    CHECK_THROWS_AS(partition_corpus(fixtures::small_synth(), p), ValidationError);
  }
}

TEST_CASE("four bundles from one plan honour their contracts") {
  const Corpus c = fixtures::small_synth(2, 40);
  const SplitPlan plan = small_plan();
  const auto bundles = build_all(c, plan);
  REQUIRE(bundles.size() == 4);
  const auto& van = bundles.at(Paradigm::kVanilla);
  const Partition part = partition_corpus(c, plan);
  std::set<std::string> holdout_cluster_ids, holdout_record_ids, train_record_ids;
  for (auto o : part.holdout_cluster_records) holdout_cluster_ids.insert(c.records()[o].record_id);
  for (auto o : part.holdout_records) holdout_record_ids.insert(c.records()[o].record_id);
  for (auto o : part.train_records) train_record_ids.insert(c.records()[o].record_id);

  for (const auto& [paradigm, b] : bundles) {
    CAPTURE(to_string(paradigm));
    CHECK(pairs_to_jsonl(b.train) == pairs_to_jsonl(van.train));
    CHECK(pairs_to_jsonl(b.val) == pairs_to_jsonl(van.val));
    CHECK(b.manifest["partition_hash"] == van.manifest["partition_hash"]);
    const AuditReport a = audit(b);
    CHECK(a.contract_checked);
    CHECK(a.contract_passed);
    CHECK(a.test_pairs_in_train_or_val == 0);
    for (const auto& p : b.test.pairs()) {
      CHECK((p.label == Label::kMatched) == (c.at(p.left_id).cluster_id == c.at(p.right_id).cluster_id));
    }
    CHECK(b.test.n_mismatched() == round_half_up(plan.k_test * static_cast<double>(b.test.n_matched())));
  }
  // Train and val use training records of training clusters only.
  for (const auto& id : ids_of({&van.train, &van.val})) CHECK(train_record_ids.count(id) == 1);

  const auto& om = bundles.at(Paradigm::kOpenMatching);
  for (const auto& id : ids_of({&om.test})) CHECK(holdout_cluster_ids.count(id) == 1);
  CHECK(audit(om).seen_cluster_ratio == 0.0);

  const auto& cfm = bundles.at(Paradigm::kClusterFocused);
  for (const auto& id : ids_of({&cfm.test})) CHECK(holdout_record_ids.count(id) == 1);
  CHECK(audit(cfm).seen_cluster_ratio == 1.0);
  CHECK(audit(cfm).seen_record_ratio == 0.0);

  const auto& rl = bundles.at(Paradigm::kRecordLinking);
  const auto seen = ids_of({&van.train, &van.val});
  for (const auto& p : rl.test.pairs()) {
    CHECK(seen.count(p.left_id) + seen.count(p.right_id) == 1);
    const std::string& anchor = seen.count(p.left_id) ? p.right_id : p.left_id;
    CHECK(holdout_record_ids.count(anchor) == 1);
  }
  CHECK(audit(rl).exactly_one_seen_pair_fraction == 1.0);
}

TEST_CASE("OM matched universe respects the combinatorial bound") {
  SynthConfig cfg;
  cfg.seed = 7;
  const Corpus c = generate(cfg);
  SplitPlan p;
  p.seed = 7;
  const Partition part = partition_corpus(c, p);
  const auto om = build_om_test(c, part, p);
  CHECK(om.pairs.n_matched() >= 4500);
  CHECK(om.pairs.n_matched() <= 19000);
}

TEST_CASE("ratio control at high k") {
  const Corpus c = fixtures::small_synth(4, 40);
  for (double k : {10.0, 30.0, 100.0}) {
    SplitPlan plan = small_plan(5);
    plan.k_train = k;
    plan.k_test = k;
    for (const auto& [paradigm, b] : build_all(c, plan)) {
      const bool warned = [&] {
        for (const auto& w : b.manifest["warnings"]) {
          if (w.get<std::string>().find("shortfall") != std::string::npos) return true;
        }
        return false;
      }();
      for (const PairSet* s : {&b.train, &b.val, &b.test}) {
        const bool exact = s->n_mismatched() == round_half_up(k * static_cast<double>(s->n_matched()));
        CHECK((exact || warned));
      }
    }
  }
}

TEST_CASE("test regeneration at another ratio leaves train and val untouched") {
  const Corpus c = fixtures::small_synth(6, 40);
  SplitPlan a = small_plan(3);
  SplitPlan b = a;
  b.k_test = 30;
  const auto ba = build_all(c, a);
  const auto bb = build_all(c, b);
  CHECK(ba.at(Paradigm::kOpenMatching).train == bb.at(Paradigm::kOpenMatching).train);
  CHECK(ba.at(Paradigm::kOpenMatching).val == bb.at(Paradigm::kOpenMatching).val);
  CHECK(ba.at(Paradigm::kVanilla).test.n_matched() == bb.at(Paradigm::kVanilla).test.n_matched());
}

TEST_CASE("bundles are deterministic and round-trip through disk") {
  const Corpus c = fixtures::small_synth(8, 40);
  const auto first = build_all(c, small_plan(9));
  const auto second = build_all(c, small_plan(9));
  const auto dir = std::filesystem::temp_directory_path() / "openem_bundle_roundtrip";
  std::filesystem::remove_all(dir);
  for (const auto& [p, b] : first) {
    const auto& o = second.at(p);
    CHECK(b.train == o.train);
    CHECK(b.val == o.val);
    CHECK(b.test == o.test);
    CHECK(b.manifest == o.manifest);
    write_bundle(b, dir / std::string(to_string(p)));
    const auto back = read_bundle(dir / std::string(to_string(p)));
    CHECK(back.paradigm == p);
    CHECK(back.test == b.test);
    CHECK(back.manifest == b.manifest);
    CHECK(back.records.content_hash() == b.records.content_hash());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("plan serialization and validation") {
  SplitPlan p = small_plan(4);
  p.max_matched_per_cluster = 12;
  const SplitPlan back = split_plan_from_json(to_json(p));
  CHECK(to_json(back) == to_json(p));
  p.holdout_record_fraction = 1.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  CHECK_THROWS_AS(paradigm_from_string("closed"), ConfigError);
}

TEST_CASE("per-category plan scales cluster counts only when needed") {
  const SplitPlan p;
  const SplitPlan same = plan_for_subcorpus(p, 700, 350);
  CHECK(same.n_train_clusters == 250);
  const SplitPlan scaled = plan_for_subcorpus(p, 350, 120);
  CHECK(scaled.n_train_clusters + scaled.n_holdout_clusters <= 120);
  CHECK(scaled.n_holdout_clusters > 0);
}
