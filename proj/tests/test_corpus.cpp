#include <doctest.h>

#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "openem/common.hpp"
#include "openem/corpus.hpp"

using namespace openem;
using fixtures::record;

TEST_CASE("two records of one cluster load as a single cluster") {
  const std::string text =
      R"({"record_id":"a1","cluster_id":"a","category":"shoes","attrs":{"title":"red shoe"}})"
      "\n"
      R"({"record_id":"a2","cluster_id":"a","category":"shoes","attrs":{"title":"red shoe 42"}})"
      "\n";
  const Corpus c = corpus_from_jsonl(text);
  REQUIRE(c.clusters().size() == 1);
  CHECK(c.clusters().at("a").size() == 2);
  CHECK(c.records()[0].record_id == "a1");
  CHECK(c.records()[1].record_id == "a2");
}

TEST_CASE("validation rejects constructed violations") {
  SUBCASE("duplicate record id names the id") {
    try {
      Corpus::from_records({record("x", "a", "t"), record("x", "b", "u")});
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
  }
  SUBCASE("empty record id") { CHECK_THROWS_AS(Corpus::from_records({record("", "a", "t")}), ValidationError); }
  SUBCASE("empty cluster id") { CHECK_THROWS_AS(Corpus::from_records({record("r", "", "t")}), ValidationError); }
  SUBCASE("no textual attribute") {
    auto r = record("r", "a", "");
    CHECK_THROWS_AS(Corpus::from_records({r}), ValidationError);
    r.attrs.clear();
    CHECK_THROWS_AS(Corpus::from_records({r}), ValidationError);
  }
  SUBCASE("ragged image vectors") {
    CHECK_THROWS_AS(Corpus::from_records({fixtures::with_image(record("r1", "a", "t"), {1, 2}),
                                          fixtures::with_image(record("r2", "a", "t"), {1, 2, 3})}),
                    ValidationError);
  }
  SUBCASE("empty image vector") {
    auto r = record("r1", "a", "t");
    r.image_vec = Eigen::VectorXd(0);
    CHECK_THROWS_AS(Corpus::from_records({r}), ValidationError);
  }
  SUBCASE("malformed line reports its line number") {
    const std::string text =
        R"({"record_id":"a1","cluster_id":"a","category":"s","attrs":{"title":"x"}})"
        "\n{not json\n";
    try {
      corpus_from_jsonl(text, "in.jsonl");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
  SUBCASE("attrs of the wrong type") {
    CHECK_THROWS_AS(
        corpus_from_jsonl(R"({"record_id":"a","cluster_id":"c","category":"s","attrs":["x"]})"),
        ValidationError);
  }
}

TEST_CASE("records keep cluster membership and unknown keys") {
  const Corpus c = corpus_from_jsonl(
      R"({"record_id":"r","cluster_id":"k","category":"s","attrs":{"title":"t"},"source":"shop"})");
  CHECK(c.at("r").extra["source"] == "shop");
  CHECK(record_to_json(c.at("r"))["source"] == "shop");
  for (const auto& [cid, members] : c.clusters()) {
    for (auto o : members) CHECK(c.records()[o].cluster_id == cid);
  }
}

TEST_CASE("save then load round-trips records, meta and hash") {
  const Corpus c = fixtures::small_synth(3, 12);
  const auto path = std::filesystem::temp_directory_path() / "openem_corpus_roundtrip.jsonl";
  save_corpus(c, path);
  const Corpus back = load_corpus(path);
  REQUIRE(back.size() == c.size());
  for (const auto& r : c.records()) CHECK(back.at(r.record_id) == r);
  CHECK(back.content_hash() == c.content_hash());
  CHECK(back.meta() == c.meta());
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("corpus_stats counts exactly") {
  SUBCASE("one cluster of three") {
    const auto s = corpus_stats(fixtures::grid(1, 3));
    CHECK(s.n_clusters == 1);
    CHECK(s.n_records == 3);
    CHECK(*s.min_cluster_size == 3);
    CHECK(*s.max_cluster_size == 3);
    CHECK(*s.mean_cluster_size == 3.0);
  }
  SUBCASE("empty corpus reports absent sizes") {
    const auto s = corpus_stats(Corpus::from_records({}));
    CHECK(s.n_clusters == 0);
    CHECK(s.n_records == 0);
    CHECK_FALSE(s.min_cluster_size.has_value());
    CHECK_FALSE(s.mean_cluster_size.has_value());
  }
  SUBCASE("image coverage") {
    const Corpus c = Corpus::from_records(
        {fixtures::with_image(record("a", "c", "t"), {1.0}), record("b", "c", "t")});
    CHECK(corpus_stats(c).image_coverage == 0.5);
  }
  SUBCASE("50 generated clusters of sizes 10..20") {
    SynthConfig cfg;
    cfg.seed = 11;
    cfg.n_clusters = 50;
    const auto s = corpus_stats(generate(cfg));
    CHECK(s.n_records >= 500);
    CHECK(s.n_records <= 1000);
    CHECK(*s.min_cluster_size >= 10);
    CHECK(*s.max_cluster_size <= 20);
  }
}

TEST_CASE("filter_by_category") {
  std::vector<EntityRecord> recs = {record("s1", "a", "x", "shoes"), record("s2", "b", "y", "shoes"),
                                    record("c1", "c", "z", "clothing")};
  SUBCASE("keeps clusters of the category") {
    const auto f = filter_by_category(Corpus::from_records(recs), "shoes");
    CHECK(f.corpus.clusters().size() == 2);
    CHECK_FALSE(f.unknown_category);
  }
  SUBCASE("unknown category gives an empty corpus and a flag") {
    const auto f = filter_by_category(Corpus::from_records(recs), "hats");
    CHECK(f.corpus.empty());
    CHECK(f.unknown_category);
  }
  SUBCASE("mixed clusters are excluded and counted") {
    recs.push_back(record("s3", "c", "w", "shoes"));
    const auto f = filter_by_category(Corpus::from_records(recs), "clothing");
    CHECK(f.corpus.empty());
    CHECK(f.excluded_mixed_clusters == 1);
  }
  SUBCASE("categories partition the synthetic corpus") {
    const Corpus c = fixtures::small_synth(5, 30);
    std::multiset<std::string> all, joined;
    for (const auto& r : c.records()) all.insert(r.record_id);
    for (const auto& cat : c.categories()) {
      const auto f = filter_by_category(c, cat);
      for (const auto& r : f.corpus.records()) joined.insert(r.record_id);
    }
    CHECK(all == joined);
  }
}
