#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "openem/audit.hpp"
#include "openem/builder.hpp"
#include "openem/common.hpp"
#include "openem/io.hpp"

using namespace openem;

namespace {

const std::filesystem::path kFixture = std::filesystem::path(OPENEM_TEST_DATA) / "audit_fixture";

double ratio(const Json& pair) { return pair[0].get<double>() / pair[1].get<double>(); }

AuditReport fixture_report(std::optional<Paradigm> p = std::nullopt) {
  return audit_external(kFixture / "train.jsonl", kFixture / "val.jsonl", kFixture / "test.jsonl",
                        kFixture / "records.jsonl", p);
}

SplitPlan small_plan(std::uint64_t seed = 1) {
  SplitPlan p;
  p.seed = seed;
  p.n_train_clusters = 25;
  p.n_holdout_clusters = 10;
  return p;
}

/// Straightforward recomputation of the audit statistics.
struct Naive {
  std::size_t n_test_records, n_seen_records, n_test_clusters, n_seen_clusters;
  double exactly_one, both, any, both_clusters;
  std::size_t overlap;
};

Naive naive_audit(const PairSet& train, const PairSet& val, const PairSet& test, const Corpus& c) {
  std::set<std::string> seen, seen_clusters, test_ids, test_clusters;
  for (const auto* s : {&train, &val}) {
    for (const auto& p : s->pairs()) {
      for (const auto* id : {&p.left_id, &p.right_id}) {
        seen.insert(*id);
        seen_clusters.insert(c.at(*id).cluster_id);
      }
    }
  }
  Naive n{};
  std::size_t one = 0, both = 0, any = 0, both_cl = 0;
  for (const auto& p : test.pairs()) {
    const bool l = seen.count(p.left_id) > 0;
    const bool r = seen.count(p.right_id) > 0;
    one += l != r;
    both += l && r;
    any += l || r;
    both_cl += seen_clusters.count(c.at(p.left_id).cluster_id) &&
               seen_clusters.count(c.at(p.right_id).cluster_id);
    if (train.contains(p.left_id, p.right_id) || val.contains(p.left_id, p.right_id)) ++n.overlap;
    for (const auto* id : {&p.left_id, &p.right_id}) {
      test_ids.insert(*id);
      test_clusters.insert(c.at(*id).cluster_id);
    }
  }
  n.n_test_records = test_ids.size();
  n.n_test_clusters = test_clusters.size();
  for (const auto& id : test_ids) n.n_seen_records += seen.count(id);
  for (const auto& cl : test_clusters) n.n_seen_clusters += seen_clusters.count(cl);
  const double t = static_cast<double>(test.size());
  n.exactly_one = one / t;
  n.both = both / t;
  n.any = any / t;
  n.both_clusters = both_cl / t;
  return n;
}

}  // namespace

TEST_CASE("hand-built fixture matches the hand-computed report") {
  const Json expected = Json::parse(read_file(kFixture / "expected.json"));
  const AuditReport r = fixture_report();

  CHECK(r.name == "audit_fixture");
  CHECK(r.n_test_records == expected["n_test_records"].get<std::size_t>());
  CHECK(r.n_seen_test_records == expected["n_seen_test_records"].get<std::size_t>());
  CHECK(r.n_test_clusters == expected["n_test_clusters"].get<std::size_t>());
  CHECK(r.n_seen_test_clusters == expected["n_seen_test_clusters"].get<std::size_t>());
  CHECK(r.seen_record_ratio == ratio(expected["seen_record_ratio"]));
  CHECK(r.seen_cluster_ratio == ratio(expected["seen_cluster_ratio"]));
  CHECK(r.exactly_one_seen_pair_fraction == ratio(expected["exactly_one_seen_pair_fraction"]));
  CHECK(r.both_seen_pair_fraction == ratio(expected["both_seen_pair_fraction"]));
  CHECK(r.any_seen_pair_fraction == ratio(expected["any_seen_pair_fraction"]));
  CHECK(r.both_clusters_seen_pair_fraction == ratio(expected["both_clusters_seen_pair_fraction"]));
  CHECK(r.test_pairs_in_train_or_val == expected["test_pairs_in_train_or_val"].get<std::size_t>());
  for (const auto& [name, counts] : {std::pair{"train", &r.train}, {"val", &r.val}, {"test", &r.test}}) {
    CAPTURE(name);
    CHECK(counts->n_matched == expected[name]["n_matched"].get<std::size_t>());
    CHECK(counts->n_mismatched == expected[name]["n_mismatched"].get<std::size_t>());
  }
  CHECK(r.train.ratio() == doctest::Approx(4.0));
  CHECK(r.test.ratio() == doctest::Approx(1.0));
  CHECK_FALSE(r.contract_checked);

  CHECK(render_audit_table({r}) == read_file(kFixture / "expected_table.txt"));
}

TEST_CASE("fixture contract outcome per declared paradigm") {
  const Json expected = Json::parse(read_file(kFixture / "expected.json"))["contract_failures_by_paradigm"];
  for (Paradigm p : kAllParadigms) {
    CAPTURE(to_string(p));
    const AuditReport r = fixture_report(p);
    CHECK(r.contract_checked);
    CHECK(r.contract_failures.size() == expected[std::string(to_string(p))].get<std::size_t>());
    CHECK(r.contract_passed == r.contract_failures.empty());
  }
}

TEST_CASE("audit JSON round-trips") {
  const AuditReport r = fixture_report(Paradigm::kOpenMatching);
  const AuditReport back = audit_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  CHECK_FALSE(back.contract_passed);
}

TEST_CASE("built bundles satisfy their contracts exactly") {
  const Corpus corpus = fixtures::small_synth(3, 40);
  const auto bundles = build_all(corpus, small_plan(3));
  const AuditReport om = audit(bundles.at(Paradigm::kOpenMatching));
  CHECK(om.seen_cluster_ratio == 0.0);
  CHECK(om.seen_record_ratio == 0.0);
  const AuditReport cfm = audit(bundles.at(Paradigm::kClusterFocused));
  CHECK(cfm.seen_cluster_ratio == 1.0);
  CHECK(cfm.seen_record_ratio == 0.0);
  const AuditReport rl = audit(bundles.at(Paradigm::kRecordLinking));
  CHECK(rl.exactly_one_seen_pair_fraction == 1.0);
  for (const auto& [p, b] : bundles) {
    CAPTURE(to_string(p));
    const AuditReport r = audit(b);
    CHECK(r.contract_passed);
    CHECK(r.test_pairs_in_train_or_val == 0);
  }
}

TEST_CASE("injecting a seen cluster into the open-matching test breaks the contract") {
  const Corpus corpus = fixtures::small_synth(3, 40);
  auto bundles = build_all(corpus, small_plan(3));
  BenchmarkBundle om = bundles.at(Paradigm::kOpenMatching);
  // Borrow one matched training pair: both records belong to a seen cluster.
  const LabeledPair* leaked = nullptr;
  for (const auto& p : om.train.pairs()) {
    if (p.label == Label::kMatched) {
      leaked = &p;
      break;
    }
  }
  REQUIRE(leaked != nullptr);
  // A fresh pair between the leaked left record and an OM test record.
  const std::string test_id = om.test.pairs().front().left_id;
  om.test.add(LabeledPair::make(leaked->left_id, test_id, Label::kMismatched));
  const AuditReport r = audit_pairsets(om.train, om.val, om.test, corpus, Paradigm::kOpenMatching);
  CHECK_FALSE(r.contract_passed);
  CHECK(r.n_seen_test_clusters == 1);

  SUBCASE("copying a training pair is also flagged") {
    PairSet test = bundles.at(Paradigm::kOpenMatching).test;
    test.add(*leaked);
    const AuditReport r2 = audit_pairsets(om.train, om.val, test, corpus, Paradigm::kOpenMatching);
    CHECK(r2.test_pairs_in_train_or_val == 1);
    CHECK_FALSE(r2.contract_passed);
  }
}

TEST_CASE("external audit of written bundle files equals the in-memory audit") {
  const Corpus corpus = fixtures::small_synth(5, 40);
  const auto bundles = build_all(corpus, small_plan(5));
  const auto dir = std::filesystem::temp_directory_path() / "openem_test_audit_external";
  std::filesystem::remove_all(dir);
  for (const auto& [p, b] : bundles) {
    CAPTURE(to_string(p));
    const auto sub = dir / std::string(to_string(p));
    write_bundle(b, sub);
    AuditReport ext = audit_external(sub / "train.jsonl", sub / "val.jsonl", sub / "test.jsonl",
                                     sub / "records.jsonl", p);
    AuditReport mem = audit(b);
    CHECK(ext.name == mem.name);
    CHECK(to_json(ext) == to_json(mem));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("auditing the training pairs against themselves gives all ratios 1") {
  const Corpus corpus = fixtures::small_synth(9, 40);
  const auto bundles = build_all(corpus, small_plan(9));
  const auto& b = bundles.at(Paradigm::kVanilla);
  const AuditReport r = audit_pairsets(b.train, b.val, b.train, corpus, Paradigm::kVanilla);
  CHECK(r.seen_cluster_ratio == 1.0);
  CHECK(r.seen_record_ratio == 1.0);
  CHECK(r.both_seen_pair_fraction == 1.0);
  CHECK(r.any_seen_pair_fraction == 1.0);
  CHECK(r.exactly_one_seen_pair_fraction == 0.0);
  CHECK(r.test_pairs_in_train_or_val == b.train.size());
  CHECK_FALSE(r.contract_passed);
}

TEST_CASE("dangling record reference is a validation error") {
  const Corpus corpus = fixtures::grid(2, 2);
  const PairSet train = fixtures::pairs({{"r0_0", "r0_1", true}});
  const PairSet test = fixtures::pairs({{"r1_0", "ghost", false}});
  CHECK_THROWS_AS(audit_pairsets(train, PairSet{}, test, corpus, std::nullopt), ValidationError);
}

TEST_CASE("audit statistics agree with a brute-force recomputation") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    CAPTURE(trial);
    const int n_clusters = 2 + static_cast<int>(rng() % 6);
    const int size = 2 + static_cast<int>(rng() % 4);
    const Corpus c = fixtures::grid(n_clusters, size);
    const auto n = c.size();
    PairSet sets[3];
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<int> which(0, 2);
    const std::size_t draws = 5 + rng() % 30;
    for (std::size_t d = 0; d < draws; ++d) {
      const std::size_t a = pick(rng), b = pick(rng);
      if (a == b) continue;
      const auto& ra = c.records()[a];
      const auto& rb = c.records()[b];
      PairSet& s = sets[which(rng)];
      if (s.contains(ra.record_id, rb.record_id)) continue;
      s.add(LabeledPair::make(ra.record_id, rb.record_id,
                              ra.cluster_id == rb.cluster_id ? Label::kMatched : Label::kMismatched));
    }
    if (sets[2].empty()) continue;
    const AuditReport r = audit_pairsets(sets[0], sets[1], sets[2], c, std::nullopt);
    const Naive ref = naive_audit(sets[0], sets[1], sets[2], c);
    CHECK(r.n_test_records == ref.n_test_records);
    CHECK(r.n_seen_test_records == ref.n_seen_records);
    CHECK(r.n_test_clusters == ref.n_test_clusters);
    CHECK(r.n_seen_test_clusters == ref.n_seen_clusters);
    CHECK(r.exactly_one_seen_pair_fraction == doctest::Approx(ref.exactly_one));
    CHECK(r.both_seen_pair_fraction == doctest::Approx(ref.both));
    CHECK(r.any_seen_pair_fraction == doctest::Approx(ref.any));
    CHECK(r.both_clusters_seen_pair_fraction == doctest::Approx(ref.both_clusters));
    CHECK(r.test_pairs_in_train_or_val == ref.overlap);
  }
}
