#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "openem/corpus.hpp"
#include "openem/features.hpp"
#include "openem/logistic.hpp"
#include "openem/pairs.hpp"

namespace openem {

std::string_view to_string(MatcherKind kind);
MatcherKind matcher_kind_from_string(std::string_view s);

struct TrainHyper {
  double lr = 0.5;
  int epochs = 400;
  double l2 = 1e-3;
  std::uint64_t seed = 0;
  /// Inverse-frequency sample weights.
  bool class_weighting = false;
  /// Pick the val-F1-maximising threshold instead of 0.5.
  bool tune_threshold = false;
  int eval_every = 10;
};

Json to_json(const TrainHyper& h);
TrainHyper train_hyper_from_json(const Json& j);

struct TrainingLog {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  /// Training loss at every evaluation point.
  std::vector<double> loss_curve;
  std::vector<double> val_f1_curve;
  bool threshold_tuned = false;
};

/// Per-column affine map fitted on training features.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  void apply_rows(Eigen::MatrixXd& x) const;
};

struct MatcherModel {
  MatcherKind kind = MatcherKind::kText;
  FeatureModel features;
  Standardizer text_std;
  Standardizer vis_std;
  ScorerParams<double> params;
  double threshold = 0.5;
  TrainHyper hyper;
  TrainingLog log;
  /// Input digests (corpus hash, train/val file hashes).
  Json provenance = Json::object();

  bool uses_text() const { return kind != MatcherKind::kVisual; }
  bool uses_visual() const { return kind != MatcherKind::kText; }
};

/// Full-batch gradient descent; the parameters with the best val F1 (checked
/// every `eval_every` epochs) are kept. Throws ValidationError for a
/// single-label training set or a visual/fused kind without image vectors.
MatcherModel train(MatcherKind kind, const PairSet& train, const PairSet& val,
                   const Corpus& records, const TrainHyper& hyper);

struct Prediction {
  std::string left_id;
  std::string right_id;
  double score = 0.0;
  bool decision = false;
};

/// Scores pairs against one record collection; prepares every record once.
class PairScorer {
 public:
  PairScorer(const MatcherModel& model, const Corpus& records);

  /// Match probability per pair, in pair order.
  std::vector<double> scores(const PairSet& pairs) const;
  double score(const std::string& left_id, const std::string& right_id) const;

 private:
  double score_prepared(const PreparedRecord& a, const PreparedRecord& b) const;
  const PreparedRecord& lookup(const std::string& id) const;

  const MatcherModel* model_;
  const Corpus* records_;
  FeatureSpace space_;
  std::vector<PreparedRecord> prepared_;
};

/// Labels in `pairs` are ignored. Throws ValidationError on a missing record
/// or a record lacking the image the model needs.
std::vector<Prediction> predict(const MatcherModel& model, const PairSet& pairs,
                                const Corpus& records);

std::string predictions_to_jsonl(const std::vector<Prediction>& preds);

Json to_json(const MatcherModel& m);
MatcherModel matcher_from_json(const Json& j);

}  // namespace openem
