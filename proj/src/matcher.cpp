#include "openem/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "openem/common.hpp"
#include "openem/metrics.hpp"

namespace openem {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Runs fn(begin, end) over [0, n) on up to hardware_concurrency threads.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn fn) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, std::max<std::size_t>(1, n / 2048));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : threads) t.join();
}

struct Design {
  Eigen::MatrixXd text;
  Eigen::MatrixXd vis;
  Eigen::VectorXd y;
};

std::size_t ordinal_or_throw(const Corpus& records, const std::string& id) {
  auto o = records.find(id);
  if (!o) throw ValidationError("pair references unknown record " + id);
  return *o;
}

/// Raw (unstandardized) feature rows for `pairs`.
Design build_design(const PairSet& pairs, const Corpus& records,
                    const std::vector<PreparedRecord>& prepared, bool need_visual) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Design d;
  d.text.resize(n, kTextFeatureCount);
  d.vis.resize(need_visual ? n : 0, kVisualFeatureCount);
  d.y.resize(n);
  std::vector<std::pair<std::size_t, std::size_t>> ords(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs.pairs()[i];
    ords[i] = {ordinal_or_throw(records, p.left_id), ordinal_or_throw(records, p.right_id)};
    if (need_visual && (!prepared[ords[i].first].image || !prepared[ords[i].second].image)) {
      throw ValidationError("visual features need image_vec on both records of pair (" +
                            p.left_id + ", " + p.right_id + ")");
    }
    d.y[static_cast<Eigen::Index>(i)] = p.label == Label::kMatched ? 1.0 : 0.0;
  }
  parallel_chunks(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto f = featurize(prepared[ords[i].first], prepared[ords[i].second]);
      const auto row = static_cast<Eigen::Index>(i);
      d.text.row(row) = f.text.transpose();
      if (need_visual) d.vis.row(row) = f.vis->transpose();
    }
  });
  return d;
}

Eigen::VectorXd probabilities(MatcherKind kind, const ScorerParams<double>& p,
                              const Eigen::MatrixXd& text, const Eigen::MatrixXd& vis) {
  const Eigen::Index n = kind == MatcherKind::kVisual ? vis.rows() : text.rows();
  Eigen::VectorXd out(n);
  const Eigen::VectorXd empty_text = Eigen::VectorXd::Zero(0);
  const Eigen::VectorXd empty_vis = Eigen::VectorXd::Zero(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd t = text.rows() ? Eigen::VectorXd(text.row(i).transpose()) : empty_text;
    const Eigen::VectorXd v = vis.rows() ? Eigen::VectorXd(vis.row(i).transpose()) : empty_vis;
    out[i] = match_probability<double>(kind, p, t, v);
  }
  return out;
}

Confusion confusion_at(const Eigen::VectorXd& prob, const Eigen::VectorXd& y, double threshold) {
  Confusion c;
  for (Eigen::Index i = 0; i < prob.size(); ++i) c.add(y[i] > 0.5, prob[i] >= threshold);
  return c;
}

/// Threshold maximizing F1 over midpoints of sorted distinct scores.
double best_threshold(const Eigen::VectorXd& prob, const Eigen::VectorXd& y) {
  std::vector<std::pair<double, bool>> s;
  s.reserve(static_cast<std::size_t>(prob.size()));
  std::size_t positives = 0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    s.emplace_back(prob[i], y[i] > 0.5);
    positives += y[i] > 0.5;
  }
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double best_f1 = -1.0, best_t = 0.5;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    (s[i].second ? tp : fp) += 1;
    if (i + 1 < s.size() && s[i + 1].first == s[i].first) continue;
    const double f1 = 2.0 * static_cast<double>(tp) /
                      static_cast<double>(2 * tp + fp + (positives - tp));
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = i + 1 < s.size() ? 0.5 * (s[i].first + s[i + 1].first) : s[i].first;
    }
  }
  return std::clamp(best_t, 1e-9, 1.0 - 1e-9);
}

void init_params(MatcherKind kind, ScorerParams<double>& p, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 0.01);
  auto draw = [&](Eigen::Index size) {
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = n01(rng);
    return v;
  };
  if (kind != MatcherKind::kVisual) p.text_w = draw(kTextFeatureCount);
  if (kind != MatcherKind::kText) p.vis_w = draw(kVisualFeatureCount);
  if (kind == MatcherKind::kFused) p.gate_w = draw(kTextFeatureCount + kVisualFeatureCount);
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string("non-finite ") + what + " features");
}

}  // namespace

std::string_view to_string(MatcherKind kind) {
  switch (kind) {
    case MatcherKind::kText:
      return "text";
    case MatcherKind::kVisual:
      return "visual";
    case MatcherKind::kFused:
      return "fused";
  }
  return "text";
}

MatcherKind matcher_kind_from_string(std::string_view s) {
  if (s == "text") return MatcherKind::kText;
  if (s == "visual") return MatcherKind::kVisual;
  if (s == "fused") return MatcherKind::kFused;
  throw ConfigError("unknown matcher kind '" + std::string(s) + "' (expected text, visual, fused)");
}

Json to_json(const TrainHyper& h) {
  return {{"lr", h.lr},
          {"epochs", h.epochs},
          {"l2", h.l2},
          {"seed", h.seed},
          {"class_weighting", h.class_weighting},
          {"tune_threshold", h.tune_threshold},
          {"eval_every", h.eval_every}};
}

TrainHyper train_hyper_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("matcher hyper-parameters must be a JSON object");
  TrainHyper h;
  try {
    h.lr = j.value("lr", h.lr);
    h.epochs = j.value("epochs", h.epochs);
    h.l2 = j.value("l2", h.l2);
    h.seed = j.value("seed", h.seed);
    h.class_weighting = j.value("class_weighting", h.class_weighting);
    h.tune_threshold = j.value("tune_threshold", h.tune_threshold);
    h.eval_every = j.value("eval_every", h.eval_every);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad matcher hyper-parameter: ") + e.what());
  }
  if (!(h.lr > 0.0) || h.epochs < 1 || h.l2 < 0.0 || h.eval_every < 1) {
    throw ConfigError("matcher hyper-parameters need lr > 0, epochs >= 1, l2 >= 0, eval_every >= 1");
  }
  return h;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(std::max<Eigen::Index>(1, x.rows()));
  s.mean = x.colwise().sum().transpose() / n;
  s.scale.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& v) const {
  return ((v - mean).array() / scale.array()).matrix();
}

void Standardizer::apply_rows(Eigen::MatrixXd& x) const {
  if (!x.rows()) return;
  x.rowwise() -= mean.transpose();
  x.array().rowwise() /= scale.transpose().array();
}

MatcherModel train(MatcherKind kind, const PairSet& train_pairs, const PairSet& val,
                   const Corpus& records, const TrainHyper& hyper) {
  if (train_pairs.n_matched() == 0 || train_pairs.n_mismatched() == 0) {
    throw ValidationError("training set must contain both matched and mismatched pairs (got " +
                          std::to_string(train_pairs.n_matched()) + " matched, " +
                          std::to_string(train_pairs.n_mismatched()) + " mismatched)");
  }
  MatcherModel m;
  m.kind = kind;
  m.hyper = hyper;
  m.features = FeatureModel::fit(train_pairs, records);
  const std::string& source = train_pairs.source_corpus_hash();
  m.provenance = {{"corpus_hash", source.empty() ? records.content_hash() : source},
                  {"records_hash", records.content_hash()},
                  {"train_pairs", train_pairs.size()},
                  {"val_pairs", val.size()}};

  FeatureSpace space(m.features);
  const auto prepared = space.prepare_all(records);
  const bool visual = m.uses_visual();
  Design tr = build_design(train_pairs, records, prepared, visual);
  Design va = build_design(val, records, prepared, visual);
  check_finite(tr.text, "text");
  check_finite(tr.vis, "visual");

  m.text_std = Standardizer::fit(tr.text);
  if (visual) m.vis_std = Standardizer::fit(tr.vis);
  m.text_std.apply_rows(tr.text);
  m.text_std.apply_rows(va.text);
  if (visual) {
    m.vis_std.apply_rows(tr.vis);
    m.vis_std.apply_rows(va.vis);
  }

  Batch<double> batch;
  batch.text = kind == MatcherKind::kVisual ? Eigen::MatrixXd(tr.text.rows(), 0) : tr.text;
  batch.vis = tr.vis;
  batch.y = tr.y;
  batch.weight = Eigen::VectorXd::Ones(tr.y.size());
  if (hyper.class_weighting) {
    const double n = static_cast<double>(tr.y.size());
    const double pos = static_cast<double>(train_pairs.n_matched());
    const double neg = n - pos;
    for (Eigen::Index i = 0; i < tr.y.size(); ++i) {
      batch.weight[i] = tr.y[i] > 0.5 ? n / (2.0 * pos) : n / (2.0 * neg);
    }
  }
  const Eigen::MatrixXd& val_text = va.text;

  Rng rng(derive_seed(hyper.seed, "matcher/init"));
  ScorerParams<double> p;
  init_params(kind, p, rng);

  ScorerParams<double> best = p;
  double best_f1 = -1.0;
  int best_epoch = 0;
  ScorerParams<double> grad;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const double loss = loss_and_gradient<double>(kind, p, batch, hyper.l2, &grad);
    if (!std::isfinite(loss)) throw ValidationError("training diverged (non-finite loss)");
    p.unflatten(p.flatten() - hyper.lr * grad.flatten());
    if (epoch % hyper.eval_every == 0 || epoch == hyper.epochs) {
      m.log.loss_curve.push_back(loss);
      if (val.empty()) continue;
      const auto prob = probabilities(kind, p, val_text, va.vis);
      const double f1 = confusion_at(prob, va.y, 0.5).f1();
      m.log.val_f1_curve.push_back(f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = p;
        best_epoch = epoch;
      }
    }
  }
  m.log.epochs_run = hyper.epochs;
  if (val.empty()) {
    best = p;
    best_epoch = hyper.epochs;
    best_f1 = 0.0;
  }
  m.params = best;
  m.log.best_epoch = best_epoch;
  m.log.best_val_f1 = best_f1;
  if (hyper.tune_threshold && !val.empty()) {
    const auto prob = probabilities(kind, m.params, val_text, va.vis);
    m.threshold = best_threshold(prob, va.y);
    m.log.threshold_tuned = true;
    m.log.best_val_f1 = confusion_at(prob, va.y, m.threshold).f1();
  }
  return m;
}

PairScorer::PairScorer(const MatcherModel& model, const Corpus& records)
    : model_(&model), records_(&records), space_(model.features) {
  prepared_ = space_.prepare_all(records);
}

const PreparedRecord& PairScorer::lookup(const std::string& id) const {
  return prepared_[ordinal_or_throw(*records_, id)];
}

double PairScorer::score_prepared(const PreparedRecord& a, const PreparedRecord& b) const {
  const auto f = featurize(a, b);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(0);
  if (model_->uses_text()) t = model_->text_std.apply(f.text);
  if (model_->uses_visual()) {
    if (!f.vis) throw ValidationError("visual matcher needs image_vec on both records");
    v = model_->vis_std.apply(*f.vis);
  }
  const double s = match_probability<double>(model_->kind, model_->params, t, v);
  return std::clamp(s, 1e-12, 1.0 - 1e-12);
}

double PairScorer::score(const std::string& left_id, const std::string& right_id) const {
  return score_prepared(lookup(left_id), lookup(right_id));
}

std::vector<double> PairScorer::scores(const PairSet& pairs) const {
  std::vector<const PreparedRecord*> left(pairs.size()), right(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    left[i] = &lookup(pairs.pairs()[i].left_id);
    right[i] = &lookup(pairs.pairs()[i].right_id);
    if (model_->uses_visual() && (!left[i]->image || !right[i]->image)) {
      throw ValidationError("visual matcher needs image_vec on both records of pair (" +
                            pairs.pairs()[i].left_id + ", " + pairs.pairs()[i].right_id + ")");
    }
  }
  std::vector<double> out(pairs.size());
  parallel_chunks(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = score_prepared(*left[i], *right[i]);
  });
  return out;
}

std::vector<Prediction> predict(const MatcherModel& model, const PairSet& pairs,
                                const Corpus& records) {
  PairScorer scorer(model, records);
  const auto s = scorer.scores(pairs);
  std::vector<Prediction> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out[i] = {pairs.pairs()[i].left_id, pairs.pairs()[i].right_id, s[i], s[i] >= model.threshold};
  }
  return out;
}

std::string predictions_to_jsonl(const std::vector<Prediction>& preds) {
  std::ostringstream os;
  for (const auto& p : preds) {
    os << Json{{"left_id", p.left_id},
               {"right_id", p.right_id},
               {"score", p.score},
               {"decision", p.decision ? "matched" : "mismatched"}}
              .dump()
       << '\n';
  }
  return os.str();
}

Json to_json(const MatcherModel& m) {
  Json params = {{"text_w", to_vector(m.params.text_w)}, {"text_b", m.params.text_b},
                 {"vis_w", to_vector(m.params.vis_w)},   {"vis_b", m.params.vis_b},
                 {"gate_w", to_vector(m.params.gate_w)}, {"gate_b", m.params.gate_b}};
  auto std_json = [](const Standardizer& s) {
    return Json{{"mean", to_vector(s.mean)}, {"scale", to_vector(s.scale)}};
  };
  return {{"format", "openem-matcher"},
          {"toolkit_version", kToolkitVersion},
          {"kind", std::string(to_string(m.kind))},
          {"threshold", m.threshold},
          {"params", params},
          {"text_standardizer", std_json(m.text_std)},
          {"visual_standardizer", std_json(m.vis_std)},
          {"features", to_json(m.features)},
          {"hyper", to_json(m.hyper)},
          {"training_log",
           {{"epochs_run", m.log.epochs_run},
            {"best_epoch", m.log.best_epoch},
            {"best_val_f1", m.log.best_val_f1},
            {"loss_curve", m.log.loss_curve},
            {"val_f1_curve", m.log.val_f1_curve},
            {"threshold_tuned", m.log.threshold_tuned}}},
          {"provenance", m.provenance}};
}

MatcherModel matcher_from_json(const Json& j) {
  try {
    if (j.value("format", std::string()) != "openem-matcher") {
      throw ValidationError("not a matcher model file");
    }
    MatcherModel m;
    m.kind = matcher_kind_from_string(j.at("kind").get<std::string>());
    m.threshold = j.at("threshold").get<double>();
    const Json& p = j.at("params");
    m.params.text_w = from_vector(p.at("text_w").get<std::vector<double>>());
    m.params.text_b = p.at("text_b").get<double>();
    m.params.vis_w = from_vector(p.at("vis_w").get<std::vector<double>>());
    m.params.vis_b = p.at("vis_b").get<double>();
    m.params.gate_w = from_vector(p.at("gate_w").get<std::vector<double>>());
    m.params.gate_b = p.at("gate_b").get<double>();
    auto read_std = [](const Json& s) {
      Standardizer out;
      out.mean = from_vector(s.at("mean").get<std::vector<double>>());
      out.scale = from_vector(s.at("scale").get<std::vector<double>>());
      return out;
    };
    m.text_std = read_std(j.at("text_standardizer"));
    m.vis_std = read_std(j.at("visual_standardizer"));
    m.features = feature_model_from_json(j.at("features"));
    m.hyper = train_hyper_from_json(j.at("hyper"));
    const Json& log = j.at("training_log");
    m.log.epochs_run = log.at("epochs_run").get<int>();
    m.log.best_epoch = log.at("best_epoch").get<int>();
    m.log.best_val_f1 = log.at("best_val_f1").get<double>();
    m.log.loss_curve = log.at("loss_curve").get<std::vector<double>>();
    m.log.val_f1_curve = log.at("val_f1_curve").get<std::vector<double>>();
    m.log.threshold_tuned = log.at("threshold_tuned").get<bool>();
    m.provenance = j.value("provenance", Json::object());
    const bool text_ok = m.params.text_w.size() == (m.uses_text() ? kTextFeatureCount : 0);
    const bool vis_ok = m.params.vis_w.size() == (m.uses_visual() ? kVisualFeatureCount : 0);
    if (!text_ok || !vis_ok) throw ValidationError("matcher parameter shapes do not match its kind");
    return m;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed matcher model: ") + e.what());
  }
}

}  // namespace openem
