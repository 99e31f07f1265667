#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "openem/builder.hpp"
#include "openem/common.hpp"
#include "openem/pairs.hpp"

using namespace openem;

namespace {

bool same_cluster(const Corpus& c, const LabeledPair& p) {
  return c.at(p.left_id).cluster_id == c.at(p.right_id).cluster_id;
}

void check_label_soundness(const Corpus& c, const PairSet& s) {
  for (const auto& p : s.pairs()) CHECK((p.label == Label::kMatched) == same_cluster(c, p));
}

}  // namespace

TEST_CASE("pairs are canonical and never self-pairs") {
  const auto p = LabeledPair::make("b", "a", Label::kMatched);
  CHECK(p.left_id == "a");
  CHECK(p.right_id == "b");
  CHECK_THROWS_AS(LabeledPair::make("a", "a", Label::kMatched), ValidationError);
}

TEST_CASE("PairSet rejects duplicate canonical pairs") {
  PairSet s;
  s.add(LabeledPair::make("a", "b", Label::kMatched));
  CHECK_THROWS_AS(s.add(LabeledPair::make("b", "a", Label::kMatched)), ValidationError);
  CHECK(s.contains("b", "a"));
  CHECK(s.n_matched() == 1);
  CHECK(s.n_mismatched() == 0);
}

TEST_CASE("PairSet JSONL round-trip") {
  const PairSet s = fixtures::pairs({{"a", "b", true}, {"a", "c", false}});
  const std::string text = pairs_to_jsonl(s);
  CHECK(text.find(R"("label":"matched")") != std::string::npos);
  CHECK(pairs_from_jsonl(text) == s);
  CHECK_THROWS_AS(pairs_from_jsonl(R"({"left_id":"a","right_id":"b","label":"maybe"})"), ValidationError);
}

TEST_CASE("matched pairs enumerate every within-cluster pair") {
  CHECK(matched_pairs(fixtures::grid(1, 3), std::nullopt, 0).size() == 3);
  CHECK(matched_pairs(fixtures::grid(1, 20), std::nullopt, 0).size() == 190);
  const Corpus two = fixtures::grid(2, 2);
  const PairSet m = matched_pairs(two, std::nullopt, 0);
  CHECK(m.size() == 2);
  check_label_soundness(two, m);
}

TEST_CASE("matched pair cap draws min(cap, C(m,2)) per cluster") {
  const Corpus c = fixtures::grid(3, 6);
  CHECK(matched_pairs(c, std::size_t{4}, 9).size() == 12);
  CHECK(matched_pairs(c, std::size_t{100}, 9).size() == 45);
  CHECK(matched_pairs(c, std::size_t{4}, 9) == matched_pairs(c, std::size_t{4}, 9));
}

TEST_CASE("mismatched sampling") {
  SUBCASE("n = 0 gives an empty set") {
    CHECK(sample_mismatched(fixtures::grid(3, 2), 0, 1, false, 0.5).pairs.empty());
  }
  SUBCASE("forced outcome with two singleton clusters") {
    const auto r = sample_mismatched(fixtures::grid(2, 1), 1, 1, false, 0.5);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs.pairs()[0].left_id == "r0_0");
    CHECK(r.pairs.pairs()[0].right_id == "r1_0");
    CHECK(r.shortfall == 0);
  }
  SUBCASE("50 distinct cross pairs against the exhaustive table") {
    const Corpus c = fixtures::grid(10, 2);
    std::set<std::pair<std::string, std::string>> table;
    for (const auto& a : c.records()) {
      for (const auto& b : c.records()) {
        if (a.record_id < b.record_id && a.cluster_id != b.cluster_id) table.emplace(a.record_id, b.record_id);
      }
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = sample_mismatched(c, 50, seed, false, 0.5);
      REQUIRE(r.pairs.size() == 50);
      std::set<std::pair<std::string, std::string>> got;
      for (const auto& p : r.pairs.pairs()) {
        CHECK(table.count({p.left_id, p.right_id}) == 1);
        CHECK(p.label == Label::kMismatched);
        got.emplace(p.left_id, p.right_id);
      }
      CHECK(got.size() == 50);
    }
  }
  SUBCASE("shortfall when the universe is exhausted") {
    const Corpus c = fixtures::grid(3, 2);  // 12 cross pairs
    const auto r = sample_mismatched(c, 20, 4, false, 0.5);
    CHECK(r.pairs.size() == 12);
    CHECK(r.shortfall == 8);
    CHECK(count_cross_pairs(c, {0, 1, 2, 3, 4, 5}, false) == 12);
  }
  SUBCASE("fewer than two clusters is an error") {
    CHECK_THROWS_AS(sample_mismatched(fixtures::grid(1, 4), 1, 0, false, 0.5), ValidationError);
  }
  SUBCASE("within-category draws stay inside a category") {
    std::vector<EntityRecord> recs;
    for (int c = 0; c < 6; ++c) {
      for (int j = 0; j < 3; ++j) {
        recs.push_back(fixtures::record("r" + std::to_string(c) + std::to_string(j), "c" + std::to_string(c),
                                        "t", c % 2 ? "shoes" : "clothing"));
      }
    }
    const Corpus c = Corpus::from_records(recs);
    const auto r = sample_mismatched(c, 30, 2, true, 0.0);
    CHECK(r.pairs.size() == 30);
    for (const auto& p : r.pairs.pairs()) {
      CHECK(c.at(p.left_id).category == c.at(p.right_id).category);
    }
  }
  SUBCASE("deterministic given seed") {
    const Corpus c = fixtures::small_synth();
    CHECK(sample_mismatched(c, 200, 5, false, 0.5).pairs == sample_mismatched(c, 200, 5, false, 0.5).pairs);
  }
  SUBCASE("family bias of one keeps every draw inside a family") {
    const Corpus c = fixtures::small_synth();
    const auto r = sample_mismatched(c, 200, 5, false, 1.0);
    for (const auto& p : r.pairs.pairs()) {
      CHECK(c.at(p.left_id).extra["family"] == c.at(p.right_id).extra["family"]);
    }
  }
}

TEST_CASE("classic construction: ratio, disjointness, soundness") {
  SUBCASE("k=3 with ten matched pairs gives 24/8/8") {
    // Ten clusters of two records: exactly ten matched pairs.
    const Corpus c = fixtures::grid(10, 2);
    GenConfig cfg;
    cfg.seed = 3;
    const auto b = build_vanilla(c, cfg);
    CHECK(b.train.n_matched() + b.val.n_matched() + b.test.n_matched() == 10);
    CHECK(b.train.n_mismatched() + b.val.n_mismatched() + b.test.n_mismatched() == 30);
    CHECK(b.train.size() == 24);
    CHECK(b.val.size() == 8);
    CHECK(b.test.size() == 8);
    CHECK(b.manifest["paradigm"] == "vanilla");
  }
  SUBCASE("k=0 gives only matched pairs") {
    GenConfig cfg;
    cfg.k = 0;
    const auto b = build_vanilla(fixtures::grid(4, 3), cfg);
    CHECK(b.train.n_mismatched() + b.val.n_mismatched() + b.test.n_mismatched() == 0);
    CHECK(b.train.size() + b.val.size() + b.test.size() == 12);
  }
  SUBCASE("properties on a synthetic corpus across ratios") {
    const Corpus c = fixtures::small_synth(9, 30);
    for (double k : {0.5, 1.0, 3.0, 7.0}) {
      GenConfig cfg;
      cfg.k = k;
      cfg.seed = 17;
      const auto v = build_vanilla_split(c, [&] {
        std::vector<std::size_t> all(c.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }(), cfg);
      std::set<std::pair<std::string, std::string>> seen;
      for (const PairSet* s : {&v.train, &v.val, &v.test}) {
        CHECK(s->n_mismatched() == round_half_up(k * static_cast<double>(s->n_matched())));
        check_label_soundness(c, *s);
        for (const auto& p : s->pairs()) CHECK(seen.emplace(p.left_id, p.right_id).second);
      }
      CHECK(seen.size() == matched_pairs(c, std::nullopt, 0).size() + v.train.n_mismatched() +
                               v.val.n_mismatched() + v.test.n_mismatched());
    }
  }
}

TEST_CASE("half-up rounding and ratio formatting") {
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(2.4999) == 2);
  CHECK(round_half_up(0.0) == 0);
  CHECK(format_ratio(3) == "3");
  CHECK(format_ratio(100) == "100");
  CHECK(format_ratio(2.5) == "2.5");
  CHECK(format_ratio(0.1) == "0.1");
}
