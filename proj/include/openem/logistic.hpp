#pragma once

// Scalar-generic loss and gradient for the three scorer kinds.

#include <cmath>

#include <Eigen/Core>

namespace openem {

enum class MatcherKind { kText, kVisual, kFused };

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Parameters of all three blocks; unused blocks stay empty.
template <typename Scalar>
struct ScorerParams {
  Vec<Scalar> text_w;
  Scalar text_b{0};
  Vec<Scalar> vis_w;
  Scalar vis_b{0};
  /// Acts on [text features ‖ visual features].
  Vec<Scalar> gate_w;
  Scalar gate_b{0};

  Eigen::Index size() const {
    return (text_w.size() ? text_w.size() + 1 : 0) + (vis_w.size() ? vis_w.size() + 1 : 0) +
           (gate_w.size() ? gate_w.size() + 1 : 0);
  }

  /// Flat layout: text_w, text_b, vis_w, vis_b, gate_w, gate_b (absent
  /// blocks skipped).
  Vec<Scalar> flatten() const {
    Vec<Scalar> out(size());
    Eigen::Index at = 0;
    auto put = [&](const Vec<Scalar>& w, Scalar b) {
      if (!w.size()) return;
      out.segment(at, w.size()) = w;
      at += w.size();
      out[at++] = b;
    };
    put(text_w, text_b);
    put(vis_w, vis_b);
    put(gate_w, gate_b);
    return out;
  }

  void unflatten(const Vec<Scalar>& flat) {
    Eigen::Index at = 0;
    auto take = [&](Vec<Scalar>& w, Scalar& b) {
      if (!w.size()) return;
      w = flat.segment(at, w.size());
      at += w.size();
      b = flat[at++];
    };
    take(text_w, text_b);
    take(vis_w, vis_b);
    take(gate_w, gate_b);
  }

  template <typename Other>
  ScorerParams<Other> cast() const {
    ScorerParams<Other> p;
    p.text_w = text_w.template cast<Other>();
    p.text_b = static_cast<Other>(text_b);
    p.vis_w = vis_w.template cast<Other>();
    p.vis_b = static_cast<Other>(vis_b);
    p.gate_w = gate_w.template cast<Other>();
    p.gate_b = static_cast<Other>(gate_b);
    return p;
  }
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

/// log(1 + e^z) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::exp;
  using std::log1p;
  return z > Scalar(0) ? z + log1p(exp(-z)) : log1p(exp(z));
}

/// Match probability of one pair. `text` / `vis` are standardized features.
template <typename Scalar>
Scalar match_probability(MatcherKind kind, const ScorerParams<Scalar>& p,
                         const Eigen::Ref<const Vec<Scalar>>& text,
                         const Eigen::Ref<const Vec<Scalar>>& vis) {
  switch (kind) {
    case MatcherKind::kText:
      return sigmoid<Scalar>(p.text_w.dot(text) + p.text_b);
    case MatcherKind::kVisual:
      return sigmoid<Scalar>(p.vis_w.dot(vis) + p.vis_b);
    case MatcherKind::kFused: {
      const Scalar st = sigmoid<Scalar>(p.text_w.dot(text) + p.text_b);
      const Scalar sv = sigmoid<Scalar>(p.vis_w.dot(vis) + p.vis_b);
      const Eigen::Index nt = text.size();
      const Scalar zg = p.gate_w.head(nt).dot(text) + p.gate_w.tail(vis.size()).dot(vis) + p.gate_b;
      const Scalar g = sigmoid<Scalar>(zg);
      return g * sv + (Scalar(1) - g) * st;
    }
  }
  return Scalar(0);
}

/// Design matrices (one row per pair), labels in {0,1}, per-sample weights.
template <typename Scalar>
struct Batch {
  Mat<Scalar> text;
  Mat<Scalar> vis;
  Vec<Scalar> y;
  Vec<Scalar> weight;
};

/// Weighted mean binary cross-entropy plus (l2/2)·‖w‖² over weight vectors
/// (biases unpenalised). Fills `grad` (same block shapes as `p`) when
/// non-null.
template <typename Scalar>
Scalar loss_and_gradient(MatcherKind kind, const ScorerParams<Scalar>& p, const Batch<Scalar>& b,
                         Scalar l2, ScorerParams<Scalar>* grad) {
  using std::log;
  const Eigen::Index n = b.y.size();
  const Scalar wsum = b.weight.sum();
  const Scalar eps = Scalar(1e-12);
  Scalar loss(0);

  ScorerParams<Scalar> g;
  g.text_w = Vec<Scalar>::Zero(p.text_w.size());
  g.vis_w = Vec<Scalar>::Zero(p.vis_w.size());
  g.gate_w = Vec<Scalar>::Zero(p.gate_w.size());

  if (kind == MatcherKind::kText || kind == MatcherKind::kVisual) {
    const bool text = kind == MatcherKind::kText;
    const Mat<Scalar>& X = text ? b.text : b.vis;
    const Vec<Scalar>& w = text ? p.text_w : p.vis_w;
    const Scalar bias = text ? p.text_b : p.vis_b;
    const Vec<Scalar> z = (X * w).array() + bias;
    Vec<Scalar> dz(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      // -y log σ(z) - (1-y) log(1-σ(z)) = softplus(z) - y z
      loss += b.weight[i] * (softplus<Scalar>(z[i]) - b.y[i] * z[i]);
      dz[i] = b.weight[i] * (sigmoid<Scalar>(z[i]) - b.y[i]) / wsum;
    }
    if (grad) {
      (text ? g.text_w : g.vis_w) = X.transpose() * dz;
      (text ? g.text_b : g.vis_b) = dz.sum();
    }
  } else {
    const Eigen::Index nt = b.text.cols();
    const Vec<Scalar> zt = (b.text * p.text_w).array() + p.text_b;
    const Vec<Scalar> zv = (b.vis * p.vis_w).array() + p.vis_b;
    const Vec<Scalar> zg =
        (b.text * p.gate_w.head(nt) + b.vis * p.gate_w.tail(b.vis.cols())).array() + p.gate_b;
    Vec<Scalar> dzt(n), dzv(n), dzg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar st = sigmoid<Scalar>(zt[i]);
      const Scalar sv = sigmoid<Scalar>(zv[i]);
      const Scalar gi = sigmoid<Scalar>(zg[i]);
      Scalar prob = gi * sv + (Scalar(1) - gi) * st;
      prob = prob < eps ? eps : (prob > Scalar(1) - eps ? Scalar(1) - eps : prob);
      loss -= b.weight[i] * (b.y[i] * log(prob) + (Scalar(1) - b.y[i]) * log(Scalar(1) - prob));
      const Scalar dprob = b.weight[i] * (prob - b.y[i]) / (prob * (Scalar(1) - prob)) / wsum;
      dzt[i] = dprob * (Scalar(1) - gi) * st * (Scalar(1) - st);
      dzv[i] = dprob * gi * sv * (Scalar(1) - sv);
      dzg[i] = dprob * (sv - st) * gi * (Scalar(1) - gi);
    }
    if (grad) {
      g.text_w = b.text.transpose() * dzt;
      g.text_b = dzt.sum();
      g.vis_w = b.vis.transpose() * dzv;
      g.vis_b = dzv.sum();
      g.gate_w.head(nt) = b.text.transpose() * dzg;
      g.gate_w.tail(b.vis.cols()) = b.vis.transpose() * dzg;
      g.gate_b = dzg.sum();
    }
  }

  loss /= wsum;
  const Scalar half_l2 = l2 / Scalar(2);
  loss += half_l2 * (p.text_w.squaredNorm() + p.vis_w.squaredNorm() + p.gate_w.squaredNorm());
  if (grad) {
    g.text_w += l2 * p.text_w;
    g.vis_w += l2 * p.vis_w;
    g.gate_w += l2 * p.gate_w;
    *grad = std::move(g);
  }
  return loss;
}

}  // namespace openem
