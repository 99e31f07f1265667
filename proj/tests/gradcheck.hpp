#pragma once

// Central finite-difference check of the analytic loss gradient.

#include <algorithm>
#include <cmath>
#include <random>

#include "openem/logistic.hpp"

namespace gradcheck {

struct Draw {
  openem::MatcherKind kind;
  openem::ScorerParams<double> params;
  openem::Batch<double> batch;
  double l2;
};

/// Random batch (n in [4, 40]) and random parameters for `kind`.
inline Draw random_draw(openem::MatcherKind kind, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 4 + static_cast<int>(rng() % 37);
  const int nt = kind == openem::MatcherKind::kVisual ? 0 : 7;
  const int nv = kind == openem::MatcherKind::kText ? 0 : 5;
  auto randn = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  Draw d{kind, {}, {}, unit(rng) < 0.5 ? 0.0 : 0.1 * unit(rng)};
  d.batch.text = randn(n, nt);
  d.batch.vis = randn(n, nv);
  d.batch.y.resize(n);
  d.batch.weight.resize(n);
  for (int i = 0; i < n; ++i) {
    d.batch.y[i] = unit(rng) < 0.4 ? 1.0 : 0.0;
    d.batch.weight[i] = 0.5 + unit(rng);
  }
  if (nt) {
    d.params.text_w = randn(nt, 1);
    d.params.text_b = normal(rng);
  }
  if (nv) {
    d.params.vis_w = randn(nv, 1);
    d.params.vis_b = normal(rng);
  }
  if (kind == openem::MatcherKind::kFused) {
    d.params.gate_w = randn(nt + nv, 1);
    d.params.gate_b = normal(rng);
  }
  return d;
}

/// Largest per-block relative error ‖g_analytic − g_numeric‖ / max(‖g‖, tiny)
/// over the text, visual and gate blocks (weights and bias together).
inline double max_relative_error(const Draw& d, double h = 1e-6) {
  openem::ScorerParams<double> grad;
  openem::loss_and_gradient<double>(d.kind, d.params, d.batch, d.l2, &grad);
  const Eigen::VectorXd analytic = grad.flatten();
  Eigen::VectorXd x = d.params.flatten();
  Eigen::VectorXd numeric(x.size());
  openem::ScorerParams<double> probe = d.params;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    probe.unflatten(x);
    const double up = openem::loss_and_gradient<double>(d.kind, probe, d.batch, d.l2, nullptr);
    x[i] = saved - h;
    probe.unflatten(x);
    const double down = openem::loss_and_gradient<double>(d.kind, probe, d.batch, d.l2, nullptr);
    x[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  double worst = 0.0;
  Eigen::Index at = 0;
  for (const auto* w : {&d.params.text_w, &d.params.vis_w, &d.params.gate_w}) {
    if (!w->size()) continue;
    const Eigen::Index len = w->size() + 1;
    const Eigen::VectorXd a = analytic.segment(at, len);
    const Eigen::VectorXd n = numeric.segment(at, len);
    const double scale = std::max({a.norm(), n.norm(), 1e-10});
    worst = std::max(worst, (a - n).norm() / scale);
    at += len;
  }
  return worst;
}

}  // namespace gradcheck
