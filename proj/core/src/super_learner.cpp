#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "pattc/learn/super_learner.hpp"
#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

CVPlan CVPlan::make(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("cross-validation needs k >= 2");
  if (static_cast<std::size_t>(k) > n)
    throw ArgumentError("cross-validation needs k <= n");
  CVPlan plan;
  plan.k = k;
  plan.seed = seed;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  plan.fold_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) plan.fold_of[idx[i]] = static_cast<int>(i % k);
  return plan;
}

CVPlan CVPlan::make_clustered(const std::vector<int>& clusters, int k,
                              std::uint64_t seed) {
  if (k < 2) throw ArgumentError("cross-validation needs k >= 2");
  CVPlan plan;
  plan.k = k;
  plan.seed = seed;
  std::vector<int> distinct = clusters;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < k)
    throw ArgumentError("fewer clusters than folds");
  Rng rng(seed);
  std::shuffle(distinct.begin(), distinct.end(), rng);
  // greedy: next cluster goes to the currently smallest fold
  std::vector<int> fold_size(k, 0);
  std::vector<int> fold_of_cluster(distinct.size());
  std::vector<int> count_of_cluster(distinct.size(), 0);
  std::unordered_map<int, int> pos;
  for (std::size_t c = 0; c < distinct.size(); ++c) pos[distinct[c]] = static_cast<int>(c);
  for (int cl : clusters) count_of_cluster[pos[cl]]++;
  for (std::size_t c = 0; c < distinct.size(); ++c) {
    int best = 0;
    for (int f = 1; f < k; ++f)
      if (fold_size[f] < fold_size[best]) best = f;
    fold_of_cluster[c] = best;
    fold_size[best] += count_of_cluster[c];
  }
  plan.fold_of.resize(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i)
    plan.fold_of[i] = fold_of_cluster[pos[clusters[i]]];
  return plan;
}

namespace {

bool plan_degenerate_for_binomial(const CVPlan& plan, const Eigen::VectorXd& y) {
  for (int f = 0; f < plan.k; ++f) {
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < plan.fold_of.size(); ++i) {
      if (plan.fold_of[i] == f) continue;  // training complement of fold f
      (y(i) >= 0.5 ? has1 : has0) = true;
    }
    if (!has0 || !has1) return true;
  }
  return false;
}

}  // namespace

CVResult cross_validate(const std::vector<LearnerSpec>& specs,
                        const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, CVPlan plan, std::uint64_t seed) {
  const std::size_t n = X.rows();
  if (plan.fold_of.size() != n) throw ArgumentError("plan does not cover the rows");
  if (plan.k < 2) throw ArgumentError("cross-validation needs k >= 2");
  if (specs.empty()) throw ArgumentError("no candidate learners");

  std::vector<int> fold_rows(plan.k, 0);
  for (int f : plan.fold_of) fold_rows[f]++;
  for (int c : fold_rows)
    if (c < 2 && plan.k != static_cast<int>(n))
      throw ArgumentError("a cross-validation fold has fewer than 2 rows");

  const bool any_binomial = std::any_of(specs.begin(), specs.end(), [](const auto& s) {
    return s.family == Family::binomial;
  });
  if (any_binomial) {
    int attempts = 0;
    while (plan_degenerate_for_binomial(plan, y)) {
      if (++attempts > 10)
        throw DataError("could not draw folds with both classes in every training set");
      plan = CVPlan::make(n, plan.k, plan.seed + attempts);
    }
  }

  CVResult out;
  out.oof.resize(n, specs.size());
  std::vector<std::vector<double>> fold_mse(specs.size());

  for (int f = 0; f < plan.k; ++f) {
    std::vector<int> tr, va;
    for (std::size_t i = 0; i < n; ++i)
      (plan.fold_of[i] == f ? va : tr).push_back(static_cast<int>(i));
    Eigen::MatrixXd Xtr(tr.size(), X.cols()), Xva(va.size(), X.cols());
    Eigen::VectorXd ytr(tr.size()), wtr(tr.size()), yva(va.size()), wva(va.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(i) = X.row(tr[i]);
      ytr(i) = y(tr[i]);
      wtr(i) = w(tr[i]);
    }
    for (std::size_t i = 0; i < va.size(); ++i) {
      Xva.row(i) = X.row(va[i]);
      yva(i) = y(va[i]);
      wva(i) = w(va[i]);
    }
    for (std::size_t s = 0; s < specs.size(); ++s) {
      LearnerPtr model = fit_learner(specs[s], Xtr, ytr, wtr,
                                     derive_seed(seed, s * 1024 + f));
      Eigen::VectorXd pred = model->predict(Xva);
      for (std::size_t i = 0; i < va.size(); ++i) out.oof(va[i], s) = pred(i);
      fold_mse[s].push_back(wva.dot((pred - yva).cwiseAbs2()) / wva.sum());
    }
  }

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto& m = fold_mse[s];
    CVReport::Row row;
    row.label = specs[s].label();
    row.mean_mse = std::accumulate(m.begin(), m.end(), 0.0) / m.size();
    double ss = 0;
    for (double v : m) ss += (v - row.mean_mse) * (v - row.mean_mse);
    row.se = m.size() > 1 ? std::sqrt(ss / (m.size() - 1) / m.size()) : 0.0;
    row.min = *std::min_element(m.begin(), m.end());
    row.max = *std::max_element(m.begin(), m.end());
    out.report.rows.push_back(row);
  }
  return out;
}

Eigen::VectorXd EnsembleModel::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (weights(i) == 0) continue;
    out += weights(i) * candidates[i]->predict(X);
  }
  if (family == Family::binomial) out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

EnsembleModel fit_super_learner(const std::vector<LearnerSpec>& specs,
                                const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, const CVPlan& plan,
                                std::uint64_t seed, Eigen::VectorXd* oof_ensemble) {
  EnsembleModel model;
  model.family = specs.front().family;
  for (const auto& s : specs)
    if (s.family != model.family)
      throw ArgumentError("all ensemble candidates must share one family");

  CVResult cv = cross_validate(specs, X, y, w, plan, seed);
  if (specs.size() == 1)
    model.weights = Eigen::VectorXd::Ones(1);
  else
    model.weights = nnls_stack(cv.oof, y, w);
  if (oof_ensemble) {
    *oof_ensemble = cv.oof * model.weights;
    if (model.family == Family::binomial)
      *oof_ensemble = oof_ensemble->cwiseMax(0.0).cwiseMin(1.0);
  }
  model.cv_report = std::move(cv.report);
  for (std::size_t s = 0; s < model.cv_report.rows.size(); ++s)
    model.cv_report.rows[s].weight = model.weights(s);

  model.candidates.reserve(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s)
    model.candidates.push_back(
        fit_learner(specs[s], X, y, w, derive_seed(seed, 0xF000 + s)));
  return model;
}

}  // namespace pattc
