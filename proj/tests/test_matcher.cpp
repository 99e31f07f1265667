#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "openem/common.hpp"
#include "openem/matcher.hpp"
#include "openem/metrics.hpp"

using namespace openem;

namespace {

constexpr MatcherKind kKinds[] = {MatcherKind::kText, MatcherKind::kVisual, MatcherKind::kFused};

/// Clusters with identical titles and nearby images; every cluster is
/// textually and visually distinct from the others.
Corpus toy_corpus(int n_clusters = 12, int size = 3) {
  std::vector<EntityRecord> recs;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int c = 0; c < n_clusters; ++c) {
    for (int j = 0; j < size; ++j) {
      EntityRecord r = fixtures::record("r" + std::to_string(c) + "_" + std::to_string(j),
                                        "c" + std::to_string(c), "tok" + std::to_string(c) + " item");
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n_clusters);
      v[c] = 1.0;
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += noise(rng);
      r.image_vec = v;
      recs.push_back(std::move(r));
    }
  }
  return Corpus::from_records(std::move(recs));
}

PairSet toy_pairs(const Corpus& c, std::uint64_t seed) {
  PairSet s = matched_pairs(c, std::nullopt, seed);
  s.append(sample_mismatched(c, 3 * s.size(), seed, false, 0.0).pairs);
  return s;
}

TrainHyper quick_hyper(std::uint64_t seed = 1) {
  TrainHyper h;
  h.seed = seed;
  h.epochs = 200;
  return h;
}

double f1_of(const MatcherModel& m, const PairSet& pairs, const Corpus& c) {
  Confusion conf;
  const auto preds = predict(m, pairs, c);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    conf.add(pairs.pairs()[i].label == Label::kMatched, preds[i].decision);
  }
  return conf.f1();
}

}  // namespace

TEST_CASE("analytic gradient agrees with central differences") {
  std::mt19937_64 rng(17);
  for (MatcherKind kind : kKinds) {
    CAPTURE(to_string(kind));
    for (int draw = 0; draw < 100; ++draw) {
      const auto d = gradcheck::random_draw(kind, rng);
      CHECK(gradcheck::max_relative_error(d) < 1e-5);
    }
  }
}

TEST_CASE("zero weights score sigmoid(bias)") {
  ScorerParams<double> p;
  p.text_w = Eigen::VectorXd::Zero(3);
  p.text_b = 0.7;
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(3, 4.0);
  CHECK(match_probability<double>(MatcherKind::kText, p, t, Eigen::VectorXd(0)) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-0.7))));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(softplus(800.0) == doctest::Approx(800.0));
}

TEST_CASE("a separable toy set is fitted perfectly by every kind") {
  const Corpus c = toy_corpus();
  const PairSet train = toy_pairs(c, 1);
  const PairSet val = toy_pairs(c, 2);
  for (MatcherKind kind : kKinds) {
    CAPTURE(to_string(kind));
    const MatcherModel m = openem::train(kind, train, val, c, quick_hyper());
    CHECK(f1_of(m, train, c) == 1.0);
    CHECK(m.log.best_val_f1 == 1.0);
    CHECK(m.log.loss_curve.front() > m.log.loss_curve.back());
  }
}

TEST_CASE("training is deterministic given the seed") {
  const Corpus c = fixtures::small_synth(4, 20);
  const PairSet train = toy_pairs(c, 3);
  const PairSet val = toy_pairs(c, 4);
  const auto a = to_json(openem::train(MatcherKind::kFused, train, val, c, quick_hyper(9)));
  const auto b = to_json(openem::train(MatcherKind::kFused, train, val, c, quick_hyper(9)));
  CHECK(a.dump() == b.dump());
  const auto other = to_json(openem::train(MatcherKind::kFused, train, val, c, quick_hyper(10)));
  CHECK(other["params"] != a["params"]);
}

TEST_CASE("gate surgery reproduces the single-modality scores exactly") {
  const Corpus c = fixtures::small_synth(6, 20);
  const PairSet train = toy_pairs(c, 5);
  MatcherModel fused = openem::train(MatcherKind::kFused, train, train, c, quick_hyper());
  fused.params.gate_w.setZero();

  MatcherModel text_only = fused;
  text_only.kind = MatcherKind::kText;
  text_only.params.vis_w.resize(0);
  text_only.params.gate_w.resize(0);
  MatcherModel visual_only = fused;
  visual_only.kind = MatcherKind::kVisual;
  visual_only.params.text_w.resize(0);
  visual_only.params.gate_w.resize(0);

  fused.params.gate_b = -1000.0;
  CHECK(PairScorer(fused, c).scores(train) == PairScorer(text_only, c).scores(train));
  fused.params.gate_b = 1000.0;
  CHECK(PairScorer(fused, c).scores(train) == PairScorer(visual_only, c).scores(train));
}

TEST_CASE("predictions are symmetric and scores are clamped probabilities") {
  const Corpus c = fixtures::small_synth(8, 20);
  const PairSet train = toy_pairs(c, 6);
  const MatcherModel m = openem::train(MatcherKind::kText, train, train, c, quick_hyper());
  const PairScorer scorer(m, c);
  for (const auto& p : train.pairs()) {
    const double s = scorer.score(p.left_id, p.right_id);
    CHECK(s == scorer.score(p.right_id, p.left_id));
    CHECK(s >= 1e-12);
    CHECK(s <= 1.0 - 1e-12);
  }
  SUBCASE("a record paired with a copy of itself is a match") {
    auto recs = c.records();
    EntityRecord copy = recs.front();
    copy.record_id = "copy";
    recs.push_back(copy);
    const Corpus with_copy = Corpus::from_records(recs);
    CHECK(PairScorer(m, with_copy).score(recs.front().record_id, "copy") >= m.threshold);
  }
}

TEST_CASE("class weighting and threshold tuning") {
  const Corpus c = toy_corpus();
  const PairSet train = toy_pairs(c, 1);
  TrainHyper h = quick_hyper();
  h.class_weighting = true;
  h.tune_threshold = true;
  const MatcherModel m = openem::train(MatcherKind::kText, train, train, c, h);
  CHECK(m.log.threshold_tuned);
  CHECK(m.threshold > 0.0);
  CHECK(m.threshold < 1.0);
  CHECK(f1_of(m, train, c) == 1.0);
}

TEST_CASE("training input errors") {
  const Corpus c = toy_corpus();
  const PairSet only_matched = matched_pairs(c, std::nullopt, 1);
  CHECK_THROWS_AS(openem::train(MatcherKind::kText, only_matched, only_matched, c, quick_hyper()),
                  ValidationError);

  auto recs = c.records();
  for (auto& r : recs) r.image_vec.reset();
  const Corpus no_images = Corpus::from_records(recs);
  const PairSet pairs = toy_pairs(no_images, 1);
  CHECK_THROWS_AS(openem::train(MatcherKind::kVisual, pairs, pairs, no_images, quick_hyper()),
                  ValidationError);
  CHECK_THROWS_AS(openem::train(MatcherKind::kFused, pairs, pairs, no_images, quick_hyper()),
                  ValidationError);

  const MatcherModel m = openem::train(MatcherKind::kText, pairs, pairs, no_images, quick_hyper());
  CHECK_THROWS_AS(predict(m, fixtures::pairs({{"r0_0", "ghost", false}}), no_images), ValidationError);

  CHECK_THROWS_AS(matcher_kind_from_string("audio"), ConfigError);
  CHECK_THROWS_AS(train_hyper_from_json(Json{{"lr", -1.0}}), ConfigError);
}

TEST_CASE("model JSON round-trip keeps every score") {
  const Corpus c = toy_corpus();
  const PairSet train = toy_pairs(c, 1);
  for (MatcherKind kind : kKinds) {
    CAPTURE(to_string(kind));
    const MatcherModel m = openem::train(kind, train, train, c, quick_hyper());
    const MatcherModel back = matcher_from_json(Json::parse(to_json(m).dump()));
    CHECK(back.kind == kind);
    CHECK(to_json(back) == to_json(m));
    CHECK(PairScorer(back, c).scores(train) == PairScorer(m, c).scores(train));
  }
  Json bad = to_json(openem::train(MatcherKind::kText, train, train, c, quick_hyper()));
  bad["kind"] = "fused";
  CHECK_THROWS_AS(matcher_from_json(bad), ValidationError);
  CHECK_THROWS_AS(matcher_from_json(Json{{"format", "other"}}), ValidationError);
}

TEST_CASE("prediction lines carry the decision words") {
  const std::string out = predictions_to_jsonl({{"a", "b", 0.9, true}, {"a", "c", 0.1, false}});
  CHECK(out.find("\"matched\"") != std::string::npos);
  CHECK(out.find("\"mismatched\"") != std::string::npos);
  CHECK(std::count(out.begin(), out.end(), '\n') == 2);
}
