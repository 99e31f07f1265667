#include "openem/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "openem/common.hpp"

namespace openem {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool has_shortfall(const std::vector<std::string>& warnings) {
  return std::any_of(warnings.begin(), warnings.end(),
                     [](const std::string& w) { return w.find("shortfall") != std::string::npos; });
}

/// Decisions of `model` on `pairs`, aligned with the pairs.
std::vector<bool> decide(const PairScorer& scorer, const MatcherModel& model, const PairSet& pairs) {
  const auto s = scorer.scores(pairs);
  std::vector<bool> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] >= model.threshold;
  return out;
}

/// Accumulates per-seed results into report cells keyed in insertion order.
class CellTable {
 public:
  EvalCell& at(const std::string& paradigm, const std::string& category, const std::string& matcher,
               double k) {
    const std::string key = paradigm + "\x1f" + category + "\x1f" + matcher + "\x1f" + format_ratio(k);
    auto it = index_.find(key);
    if (it != index_.end()) return cells_[it->second];
    index_.emplace(key, cells_.size());
    EvalCell c;
    c.paradigm = paradigm;
    c.category = category;
    c.matcher = matcher;
    c.k = k;
    cells_.push_back(std::move(c));
    return cells_.back();
  }

  void add(const std::string& paradigm, const std::string& category, const std::string& matcher,
           double k, const Confusion& conf, bool shortfall) {
    EvalCell& c = at(paradigm, category, matcher, k);
    Confusion pooled = c.pooled.confusion;
    pooled.tp += conf.tp;
    pooled.fp += conf.fp;
    pooled.fn += conf.fn;
    pooled.tn += conf.tn;
    c.pooled = Metrics::from(pooled);
    c.f1_per_seed.push_back(Metrics::from(conf).f1);
    c.n_pairs_per_seed.push_back(conf.total());
    c.shortfall = c.shortfall || shortfall;
  }

  std::vector<EvalCell> take() { return std::move(cells_); }

 private:
  std::vector<EvalCell> cells_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Adds overall and per-category confusion of one test set.
void record_test(CellTable& table, const Corpus& corpus, const PairSet& test,
                 const std::vector<bool>& decisions, const std::string& paradigm,
                 const std::string& matcher, double k, bool shortfall,
                 const std::vector<std::string>& categories) {
  Confusion overall;
  std::map<std::string, Confusion> by_category;
  for (const auto& c : categories) by_category[c];
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& p = test.pairs()[i];
    const bool gold = p.label == Label::kMatched;
    overall.add(gold, decisions[i]);
    if (categories.empty()) continue;
    const auto& a = corpus.at(p.left_id).category;
    if (a == corpus.at(p.right_id).category) by_category[a].add(gold, decisions[i]);
  }
  table.add(paradigm, "all", matcher, k, overall, shortfall);
  for (const auto& c : categories) table.add(paradigm, c, matcher, k, by_category[c], shortfall);
}

/// Partition and shared train/val of one seed.
struct SeedContext {
  SplitPlan plan;
  Partition part;
  SharedSplit shared;
};

SeedContext make_context(const Corpus& corpus, SplitPlan plan, std::uint64_t seed) {
  plan.seed = seed;
  validate(plan);
  SeedContext ctx;
  ctx.plan = plan;
  ctx.part = partition_corpus(corpus, plan);
  ctx.shared = build_shared_train_val(corpus, ctx.part, plan);
  return ctx;
}

/// Test set of `paradigm` regenerated at ratio k (train and val unchanged).
TestBuild test_at(const Corpus& corpus, const SeedContext& ctx, Paradigm paradigm, double k) {
  SplitPlan plan = ctx.plan;
  plan.k_test = k;
  if (k == ctx.plan.k_test) return build_test(paradigm, corpus, ctx.part, plan, ctx.shared);
  const SharedSplit shared = build_shared_train_val(corpus, ctx.part, plan);
  return build_test(paradigm, corpus, ctx.part, plan, shared);
}

TrainHyper seeded(const TrainHyper& hyper, std::uint64_t seed) {
  TrainHyper h = hyper;
  h.seed = derive_seed(seed, "matcher");
  return h;
}

Json base_config(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt) {
  return {{"toolkit_version", kToolkitVersion},
          {"corpus_hash", corpus.content_hash()},
          {"plan", to_json(plan)},
          {"hyper", to_json(opt.hyper)},
          {"seeds", opt.seeds},
          {"per_category", opt.per_category}};
}

void check_ks(const std::vector<double>& ks) {
  if (ks.empty()) throw ConfigError("ratio list must not be empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(ks[i] > 0.0) || !std::isfinite(ks[i])) throw ConfigError("ratios must be positive");
    if (i && !(ks[i] > ks[i - 1])) throw ConfigError("ratios must be strictly increasing");
  }
}

void check_seeds(const FindingsOptions& opt) {
  if (opt.seeds.empty()) throw ConfigError("at least one seed is required");
}

Json metrics_json_fields(const Metrics& m) { return to_json(m); }

Metrics metrics_from_json(const Json& j) {
  Confusion c;
  c.tp = j.at("tp").get<std::size_t>();
  c.fp = j.at("fp").get<std::size_t>();
  c.fn = j.at("fn").get<std::size_t>();
  c.tn = j.at("tn").get<std::size_t>();
  return Metrics::from(c);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string join_f1(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fixed(v[i], 6);
  }
  return out;
}

/// Left-aligned first column, right-aligned others.
std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) os << "  ";
      const std::string pad(width[c] - r[c].size(), ' ');
      os << (c == 0 ? r[c] + pad : pad + r[c]);
    }
    os << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      os << std::string(total, '-') << '\n';
    }
  }
  return os.str();
}

std::string paradigm_label(const std::string& p) {
  if (p == "vanilla") return "Vanilla";
  if (p == "rl") return "RL";
  if (p == "cfm") return "CFM";
  if (p == "om") return "OM";
  return p;
}

std::string category_label(const std::string& c) { return c == "all" ? "All" : c; }

}  // namespace

Metrics Metrics::from(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  m.precision = c.precision();
  m.recall = c.recall();
  m.f1 = c.f1();
  m.degenerate = c.tp + c.fp == 0 && c.tp + c.fn == 0;
  return m;
}

Metrics score(const std::vector<bool>& decisions, const PairSet& gold) {
  if (decisions.size() != gold.size()) {
    throw ValidationError("decision count " + std::to_string(decisions.size()) +
                          " does not match gold pair count " + std::to_string(gold.size()));
  }
  Confusion c;
  for (std::size_t i = 0; i < gold.size(); ++i) c.add(gold.pairs()[i].label == Label::kMatched, decisions[i]);
  return Metrics::from(c);
}

Metrics score(const std::vector<Prediction>& decisions, const PairSet& gold) {
  std::unordered_map<std::string, bool> by_pair;
  by_pair.reserve(decisions.size());
  auto key = [](const std::string& a, const std::string& b) {
    return a < b ? a + '\n' + b : b + '\n' + a;
  };
  for (const auto& d : decisions) {
    if (!by_pair.emplace(key(d.left_id, d.right_id), d.decision).second) {
      throw ValidationError("duplicate decision for pair (" + d.left_id + ", " + d.right_id + ")");
    }
  }
  Confusion c;
  for (const auto& p : gold.pairs()) {
    auto it = by_pair.find(key(p.left_id, p.right_id));
    if (it == by_pair.end()) {
      throw ValidationError("missing decision for pair (" + p.left_id + ", " + p.right_id + ")");
    }
    c.add(p.label == Label::kMatched, it->second);
  }
  if (by_pair.size() != gold.size()) {
    throw ValidationError(std::to_string(by_pair.size() - gold.size()) +
                          " decisions refer to pairs outside the gold set");
  }
  return Metrics::from(c);
}

double EvalCell::mean_f1() const {
  if (f1_per_seed.empty()) return 0.0;
  double s = 0.0;
  for (double f : f1_per_seed) s += f;
  return s / static_cast<double>(f1_per_seed.size());
}

const EvalCell* EvalReport::find(std::string_view paradigm, std::string_view category,
                                 std::string_view matcher, double k) const {
  for (const auto& c : cells) {
    if (c.paradigm == paradigm && c.category == category && c.matcher == matcher && c.k == k) return &c;
  }
  return nullptr;
}

std::string_view to_string(SweepAxis axis) {
  return axis == SweepAxis::kTestRatio ? "test" : "train_and_test";
}

SweepAxis sweep_axis_from_string(std::string_view s) {
  if (s == "test" || s == "test_ratio") return SweepAxis::kTestRatio;
  if (s == "train_and_test" || s == "train_and_test_ratio") return SweepAxis::kTrainAndTestRatio;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (expected test, train_and_test)");
}

double SweepPoint::mean_f1(const std::string& paradigm) const {
  auto it = f1_per_seed.find(paradigm);
  if (it == f1_per_seed.end() || it->second.empty()) return 0.0;
  double s = 0.0;
  for (double f : it->second) s += f;
  return s / static_cast<double>(it->second.size());
}

EvalReport run_findings_1(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt,
                          MatcherKind kind) {
  check_seeds(opt);
  const std::vector<std::string> categories = opt.per_category ? corpus.categories()
                                                               : std::vector<std::string>{};
  const std::string matcher(to_string(kind));
  CellTable table;
  for (auto p : kAllParadigms) {
    table.at(std::string(to_string(p)), "all", matcher, plan.k_test);
    for (const auto& c : categories) table.at(std::string(to_string(p)), c, matcher, plan.k_test);
  }
  for (auto seed : opt.seeds) {
    const SeedContext ctx = make_context(corpus, plan, seed);
    const MatcherModel model = train(kind, ctx.shared.train, ctx.shared.val, corpus, seeded(opt.hyper, seed));
    const PairScorer scorer(model, corpus);
    for (auto p : kAllParadigms) {
      const TestBuild test = build_test(p, corpus, ctx.part, ctx.plan, ctx.shared);
      record_test(table, corpus, test.pairs, decide(scorer, model, test.pairs),
                  std::string(to_string(p)), matcher, plan.k_test, has_shortfall(test.warnings),
                  categories);
    }
  }
  EvalReport r;
  r.name = "findings_1";
  r.seeds = opt.seeds;
  r.cells = table.take();
  r.config = base_config(corpus, plan, opt);
  r.config["matcher"] = matcher;
  return r;
}

SweepCurve run_findings_2(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt,
                          const std::vector<double>& ks, SweepAxis axis, MatcherKind kind) {
  check_seeds(opt);
  check_ks(ks);
  SweepCurve curve;
  curve.axis = axis;
  curve.matcher = std::string(to_string(kind));
  curve.seeds = opt.seeds;
  for (double k : ks) {
    SweepPoint pt;
    pt.k = k;
    for (auto p : kAllParadigms) {
      pt.f1_per_seed[std::string(to_string(p))];
      pt.shortfall[std::string(to_string(p))] = false;
    }
    curve.points.push_back(std::move(pt));
  }
  for (auto seed : opt.seeds) {
    std::optional<SeedContext> fixed_ctx;
    std::optional<MatcherModel> fixed_model;
    if (axis == SweepAxis::kTestRatio) {
      fixed_ctx = make_context(corpus, plan, seed);
      fixed_model = train(kind, fixed_ctx->shared.train, fixed_ctx->shared.val, corpus,
                          seeded(opt.hyper, seed));
    }
    for (auto& pt : curve.points) {
      std::optional<SeedContext> local_ctx;
      std::optional<MatcherModel> local_model;
      if (axis == SweepAxis::kTrainAndTestRatio) {
        SplitPlan kplan = plan;
        kplan.k_train = pt.k;
        kplan.k_test = pt.k;
        local_ctx = make_context(corpus, kplan, seed);
        local_model = train(kind, local_ctx->shared.train, local_ctx->shared.val, corpus,
                            seeded(opt.hyper, seed));
      }
      const SeedContext& ctx = local_ctx ? *local_ctx : *fixed_ctx;
      const MatcherModel& model = local_model ? *local_model : *fixed_model;
      const PairScorer scorer(model, corpus);
      for (auto p : kAllParadigms) {
        const std::string name(to_string(p));
        const TestBuild test = test_at(corpus, ctx, p, pt.k);
        const Metrics m = score(decide(scorer, model, test.pairs), test.pairs);
        pt.f1_per_seed[name].push_back(m.f1);
        pt.shortfall[name] = pt.shortfall[name] || has_shortfall(test.warnings);
      }
    }
  }
  curve.config = base_config(corpus, plan, opt);
  curve.config["matcher"] = curve.matcher;
  curve.config["axis"] = std::string(to_string(axis));
  curve.config["ks"] = ks;
  return curve;
}

EvalReport run_findings_3(const Corpus& corpus, const SplitPlan& plan, const FindingsOptions& opt,
                          const std::vector<double>& ks) {
  check_seeds(opt);
  check_ks(ks);
  const auto stats = corpus_stats(corpus);
  if (stats.image_coverage < 1.0) {
    throw ValidationError("multi-modal evaluation needs image_vec on every record (coverage " +
                          fixed(100.0 * stats.image_coverage, 1) + "%)");
  }
  const std::vector<MatcherKind> kinds = {MatcherKind::kText, MatcherKind::kVisual, MatcherKind::kFused};
  CellTable table;
  for (auto kind : kinds) {
    for (auto p : kAllParadigms) {
      for (double k : ks) table.at(std::string(to_string(p)), "all", std::string(to_string(kind)), k);
    }
  }
  for (auto seed : opt.seeds) {
    const SeedContext ctx = make_context(corpus, plan, seed);
    std::vector<MatcherModel> models;
    for (auto kind : kinds) {
      models.push_back(train(kind, ctx.shared.train, ctx.shared.val, corpus, seeded(opt.hyper, seed)));
    }
    for (double k : ks) {
      for (auto p : kAllParadigms) {
        const TestBuild test = test_at(corpus, ctx, p, k);
        for (const auto& model : models) {
          const PairScorer scorer(model, corpus);
          record_test(table, corpus, test.pairs, decide(scorer, model, test.pairs),
                      std::string(to_string(p)), std::string(to_string(model.kind)), k,
                      has_shortfall(test.warnings), {});
        }
      }
    }
  }
  EvalReport r;
  r.name = "findings_3";
  r.seeds = opt.seeds;
  r.cells = table.take();
  r.config = base_config(corpus, plan, opt);
  r.config["ks"] = ks;
  return r;
}

EvalReport evaluate_bundle(const MatcherModel& model, const BenchmarkBundle& bundle) {
  const PairScorer scorer(model, bundle.records);
  const auto decisions = decide(scorer, model, bundle.test);
  double k = bundle.test.n_matched()
                 ? static_cast<double>(bundle.test.n_mismatched()) / static_cast<double>(bundle.test.n_matched())
                 : 0.0;
  if (bundle.manifest.contains("plan")) k = bundle.manifest["plan"].value("k_test", k);
  CellTable table;
  const bool shortfall = bundle.manifest.contains("warnings") &&
                         has_shortfall(bundle.manifest["warnings"].get<std::vector<std::string>>());
  record_test(table, bundle.records, bundle.test, decisions, std::string(to_string(bundle.paradigm)),
              std::string(to_string(model.kind)), k, shortfall, bundle.records.categories());
  EvalReport r;
  r.name = "eval";
  if (bundle.manifest.contains("plan")) r.seeds = {bundle.manifest["plan"].value("seed", std::uint64_t{0})};
  r.cells = table.take();
  r.config = {{"toolkit_version", kToolkitVersion},
              {"model", {{"kind", std::string(to_string(model.kind))},
                         {"threshold", model.threshold},
                         {"provenance", model.provenance}}},
              {"bundle", {{"paradigm", std::string(to_string(bundle.paradigm))},
                          {"corpus_hash", bundle.manifest.value("corpus_hash", std::string())},
                          {"files", bundle.manifest.value("files", Json::object())}}}};
  return r;
}

Json to_json(const Metrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"tp", m.confusion.tp},
          {"fp", m.confusion.fp},
          {"fn", m.confusion.fn},
          {"tn", m.confusion.tn},
          {"degenerate", m.degenerate}};
}

Json to_json(const EvalReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"paradigm", c.paradigm},
                     {"category", c.category},
                     {"matcher", c.matcher},
                     {"k", c.k},
                     {"mean_f1", c.mean_f1()},
                     {"f1_per_seed", c.f1_per_seed},
                     {"n_pairs_per_seed", c.n_pairs_per_seed},
                     {"pooled", metrics_json_fields(c.pooled)},
                     {"shortfall", c.shortfall}});
  }
  return {{"schema", "openem-eval-report"},
          {"schema_version", kReportSchemaVersion},
          {"name", r.name},
          {"seeds", r.seeds},
          {"cells", cells},
          {"config", r.config}};
}

EvalReport eval_report_from_json(const Json& j) {
  try {
    if (j.value("schema", std::string()) != "openem-eval-report") {
      throw ValidationError("not an evaluation report");
    }
    EvalReport r;
    r.name = j.at("name").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.config = j.value("config", Json::object());
    for (const auto& c : j.at("cells")) {
      EvalCell cell;
      cell.paradigm = c.at("paradigm").get<std::string>();
      cell.category = c.at("category").get<std::string>();
      cell.matcher = c.at("matcher").get<std::string>();
      cell.k = c.at("k").get<double>();
      cell.f1_per_seed = c.at("f1_per_seed").get<std::vector<double>>();
      cell.n_pairs_per_seed = c.at("n_pairs_per_seed").get<std::vector<std::size_t>>();
      cell.pooled = metrics_from_json(c.at("pooled"));
      cell.shortfall = c.at("shortfall").get<bool>();
      r.cells.push_back(std::move(cell));
    }
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed evaluation report: ") + e.what());
  }
}

Json to_json(const SweepCurve& c) {
  Json points = Json::array();
  for (const auto& pt : c.points) {
    Json per = Json::object();
    for (const auto& [name, f1s] : pt.f1_per_seed) {
      per[name] = {{"mean_f1", pt.mean_f1(name)},
                   {"f1_per_seed", f1s},
                   {"shortfall", pt.shortfall.count(name) ? pt.shortfall.at(name) : false}};
    }
    points.push_back({{"k", pt.k}, {"paradigms", per}});
  }
  return {{"schema", "openem-sweep-curve"},
          {"schema_version", kReportSchemaVersion},
          {"axis", std::string(to_string(c.axis))},
          {"matcher", c.matcher},
          {"seeds", c.seeds},
          {"points", points},
          {"config", c.config}};
}

SweepCurve sweep_curve_from_json(const Json& j) {
  try {
    if (j.value("schema", std::string()) != "openem-sweep-curve") {
      throw ValidationError("not a sweep curve");
    }
    SweepCurve c;
    c.axis = sweep_axis_from_string(j.at("axis").get<std::string>());
    c.matcher = j.at("matcher").get<std::string>();
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.config = j.value("config", Json::object());
    for (const auto& p : j.at("points")) {
      SweepPoint pt;
      pt.k = p.at("k").get<double>();
      for (const auto& [name, v] : p.at("paradigms").items()) {
        pt.f1_per_seed[name] = v.at("f1_per_seed").get<std::vector<double>>();
        pt.shortfall[name] = v.at("shortfall").get<bool>();
      }
      c.points.push_back(std::move(pt));
    }
    return c;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed sweep curve: ") + e.what());
  }
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "text" || s == "text-table" || s == "table") return ReportFormat::kText;
  if (s == "csv") return ReportFormat::kCsv;
  throw ConfigError("unknown report format '" + std::string(s) + "' (expected json, text, csv)");
}

std::string render_report(const EvalReport& r, ReportFormat fmt) {
  if (fmt == ReportFormat::kJson) return to_json(r).dump(2) + "\n";
  if (fmt == ReportFormat::kCsv) {
    std::ostringstream os;
    os << "report,paradigm,category,matcher,k,mean_f1,precision,recall,f1,tp,fp,fn,tn,n_seeds,"
          "shortfall\n";
    for (const auto& c : r.cells) {
      const auto& m = c.pooled;
      os << csv_escape(r.name) << ',' << csv_escape(c.paradigm) << ',' << csv_escape(c.category)
         << ',' << csv_escape(c.matcher) << ',' << format_ratio(c.k) << ',' << fixed(c.mean_f1(), 6)
         << ',' << fixed(m.precision, 6) << ',' << fixed(m.recall, 6) << ',' << fixed(m.f1, 6) << ','
         << m.confusion.tp << ',' << m.confusion.fp << ',' << m.confusion.fn << ','
         << m.confusion.tn << ',' << c.f1_per_seed.size() << ',' << (c.shortfall ? 1 : 0) << '\n';
    }
    return os.str();
  }

  // Text: one table per matcher; rows are paradigms, columns are
  // (category, ratio) pairs; values are mean F1 x 100. A trailing '*' marks
  // a cell whose test set fell short of its requested ratio.
  std::vector<std::string> matchers, paradigms, columns;
  std::map<std::string, std::pair<std::string, double>> column_parts;
  std::map<std::string, const EvalCell*> lookup;
  std::set<double> ks;
  for (const auto& c : r.cells) ks.insert(c.k);
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& c : r.cells) {
    remember(matchers, c.matcher);
    remember(paradigms, c.paradigm);
    std::string col = category_label(c.category);
    if (ks.size() > 1) col += " 1:" + format_ratio(c.k);
    remember(columns, col);
    lookup[c.matcher + "|" + c.paradigm + "|" + col] = &c;
  }
  std::ostringstream os;
  os << "F1 (x100, mean over " << r.seeds.size() << " seed" << (r.seeds.size() == 1 ? "" : "s")
     << ") - " << r.name << "\n";
  for (const auto& m : matchers) {
    os << "\nMatcher: " << m << "\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Benchmark"};
    header.insert(header.end(), columns.begin(), columns.end());
    rows.push_back(header);
    for (const auto& p : paradigms) {
      std::vector<std::string> row = {paradigm_label(p)};
      for (const auto& col : columns) {
        auto it = lookup.find(m + "|" + p + "|" + col);
        if (it == lookup.end()) {
          row.push_back("-");
        } else {
          row.push_back(fixed(100.0 * it->second->mean_f1(), 2) + (it->second->shortfall ? "*" : ""));
        }
      }
      rows.push_back(std::move(row));
    }
    os << render_grid(rows);
  }
  return os.str();
}

std::string render_report(const SweepCurve& c, ReportFormat fmt) {
  if (fmt == ReportFormat::kJson) return to_json(c).dump(2) + "\n";
  std::vector<std::string> paradigms;
  for (auto p : kAllParadigms) paradigms.emplace_back(to_string(p));
  if (fmt == ReportFormat::kCsv) {
    std::ostringstream os;
    os << "axis,matcher,k,paradigm,mean_f1,f1_per_seed,shortfall\n";
    for (const auto& pt : c.points) {
      for (const auto& [name, f1s] : pt.f1_per_seed) {
        os << to_string(c.axis) << ',' << csv_escape(c.matcher) << ',' << format_ratio(pt.k) << ','
           << csv_escape(name) << ',' << fixed(pt.mean_f1(name), 6) << ',' << join_f1(f1s) << ','
           << (pt.shortfall.count(name) && pt.shortfall.at(name) ? 1 : 0) << '\n';
      }
    }
    return os.str();
  }
  std::ostringstream os;
  os << "F1 (x100, mean over " << c.seeds.size() << " seed" << (c.seeds.size() == 1 ? "" : "s")
     << ") by mismatched:matched ratio - axis " << to_string(c.axis) << ", matcher " << c.matcher
     << "\n\n";
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"Benchmark"};
  for (const auto& pt : c.points) header.push_back("1:" + format_ratio(pt.k));
  rows.push_back(header);
  for (const auto& p : paradigms) {
    std::vector<std::string> row = {paradigm_label(p)};
    for (const auto& pt : c.points) {
      if (!pt.f1_per_seed.count(p)) {
        row.push_back("-");
        continue;
      }
      const bool sf = pt.shortfall.count(p) && pt.shortfall.at(p);
      row.push_back(fixed(100.0 * pt.mean_f1(p), 2) + (sf ? "*" : ""));
    }
    rows.push_back(std::move(row));
  }
  os << render_grid(rows);
  return os.str();
}

}  // namespace openem
