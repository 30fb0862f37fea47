#pragma once

#include <optional>

#include "pattc/learn/learner.hpp"

namespace pattc {

struct CVPlan {
  int k = 10;
  std::vector<int> fold_of;  // one entry per row
  std::uint64_t seed = 0;

  // Shuffled round-robin assignment; fold sizes differ by at most one.
  static CVPlan make(std::size_t n, int k, std::uint64_t seed);
  // Keeps all rows of one cluster in one fold (greedy size balancing).
  static CVPlan make_clustered(const std::vector<int>& clusters, int k,
                               std::uint64_t seed);
};

struct CVReport {
  struct Row {
    std::string label;
    double mean_mse = 0, se = 0, min = 0, max = 0;
    double weight = 0;  // filled in by fit_super_learner
  };
  std::vector<Row> rows;
};

struct CVResult {
  CVReport report;
  Eigen::MatrixXd oof;  // out-of-fold predictions, one column per candidate
};

// Trains every spec k times and fills each row of `oof` from the model that
// did not see that row's fold.  Binomial plans whose training folds would be
// single-class are redrawn (seed+1, up to 10 attempts).
CVResult cross_validate(const std::vector<LearnerSpec>& specs,
                        const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, CVPlan plan, std::uint64_t seed);

// Lawson-Hanson active-set solve of min ||A x - b||^2 s.t. x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// Weighted NNLS of y on the candidate prediction columns, normalized to a
// convex combination.  All-zero solutions fall back to uniform weights.
Eigen::VectorXd nnls_stack(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, bool* degenerate = nullptr);

struct EnsembleModel {
  std::vector<LearnerPtr> candidates;
  Eigen::VectorXd weights;  // nonnegative, sums to 1
  CVReport cv_report;
  Family family = Family::gaussian;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// When oof_ensemble is non-null it receives the stacked out-of-fold
// predictions (Z * weights), useful for honest downstream threshold tuning.
EnsembleModel fit_super_learner(const std::vector<LearnerSpec>& specs,
                                const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, const CVPlan& plan,
                                std::uint64_t seed,
                                Eigen::VectorXd* oof_ensemble = nullptr);

}  // namespace pattc
