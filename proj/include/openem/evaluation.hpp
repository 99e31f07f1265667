#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openem/builder.hpp"
#include "openem/matcher.hpp"
#include "openem/metrics.hpp"

namespace openem {

inline constexpr std::string_view kReportSchemaVersion = "1";

struct Metrics {
  Confusion confusion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// No positive predictions and no positive gold pairs.
  bool degenerate = false;

  static Metrics from(const Confusion& c);
};

/// `decisions` must cover exactly the pairs of `gold` (any order); throws
/// ValidationError on a missing, extra, or duplicated decision.
Metrics score(const std::vector<Prediction>& decisions, const PairSet& gold);
/// Decisions aligned with `gold.pairs()`.
Metrics score(const std::vector<bool>& decisions, const PairSet& gold);

/// One (paradigm, category, matcher, ratio) cell, aggregated over seeds.
struct EvalCell {
  std::string paradigm;
  std::string category = "all";
  std::string matcher = "text";
  /// Mismatched:matched ratio of the evaluated test set.
  double k = 3.0;
  /// Confusion summed over seeds; precision/recall/F1 pooled from it.
  Metrics pooled;
  std::vector<double> f1_per_seed;
  std::vector<std::size_t> n_pairs_per_seed;
  /// Some seed delivered fewer mismatched pairs than requested.
  bool shortfall = false;

  double mean_f1() const;
};

struct EvalReport {
  /// "findings_1", "findings_3" or "eval".
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalCell> cells;
  Json config = Json::object();

  /// nullptr when absent.
  const EvalCell* find(std::string_view paradigm, std::string_view category,
                       std::string_view matcher, double k) const;
};

enum class SweepAxis { kTestRatio, kTrainAndTestRatio };
std::string_view to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view s);

struct SweepPoint {
  double k = 3.0;
  /// paradigm name -> F1 per seed.
  std::map<std::string, std::vector<double>> f1_per_seed;
  std::map<std::string, bool> shortfall;

  double mean_f1(const std::string& paradigm) const;
};

struct SweepCurve {
  SweepAxis axis = SweepAxis::kTestRatio;
  std::string matcher = "text";
  std::vector<std::uint64_t> seeds;
  /// Strictly increasing k.
  std::vector<SweepPoint> points;
  Json config = Json::object();
};

struct FindingsOptions {
  TrainHyper hyper;
  /// Root seeds; each replaces plan.seed, and the matcher seed is derived
  /// from it.
  std::vector<std::uint64_t> seeds = {7};
  bool per_category = true;
};

/// One text model per seed trained on the shared train/val, evaluated on all
/// four paradigm tests at the plan's k_test, overall and per category.
EvalReport run_findings_1(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt,
                          MatcherKind kind = MatcherKind::kText);

/// Test-ratio axis keeps the model trained at plan.k_train and regenerates
/// the tests at each k; the train-and-test axis also retrains at k.
SweepCurve run_findings_2(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt,
                          const std::vector<double>& ks, SweepAxis axis,
                          MatcherKind kind = MatcherKind::kText);

/// Text, visual and fused matchers over the four paradigms at each k of
/// `ks` (balanced 3 and imbalanced 100 by default). Needs full image
/// coverage.
EvalReport run_findings_3(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt,
                          const std::vector<double>& ks = {3.0, 100.0});

/// Evaluates a trained model on a bundle's test split.
EvalReport evaluate_bundle(const MatcherModel& model, const BenchmarkBundle& bundle);

Json to_json(const Metrics& m);
Json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const Json& j);
Json to_json(const SweepCurve& c);
SweepCurve sweep_curve_from_json(const Json& j);

enum class ReportFormat { kJson, kText, kCsv };
ReportFormat report_format_from_string(std::string_view s);

std::string render_report(const EvalReport& r, ReportFormat fmt);
std::string render_report(const SweepCurve& c, ReportFormat fmt);

}  // namespace openem
