#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pattc {

enum class Family { gaussian, binomial };

enum class LearnerKind {
  elastic_net,
  gradient_boosted_trees,
  random_forest,
  polynomial_ridge,
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::elastic_net;
  Family family = Family::gaussian;

  // elastic net: alpha mixes L1 (alpha=1) and L2 (alpha=0); lambda < 0 means
  // select by internal cross-validation over a geometric path.
  double alpha = 1.0;
  double lambda = -1.0;
  int path_length = 100;

  // gradient boosted trees
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;

  // random forest
  int n_predictors = 1;  // candidate predictors sampled per split
  bool bootstrap_rows = true;
  int min_leaf = 5;

  // polynomial ridge
  int degree = 2;
  double ridge_lambda = 1e-3;

  std::string label() const;
  void validate(int n_features) const;

  static LearnerSpec make_elastic_net(Family f, double alpha, double lambda = -1.0);
  static LearnerSpec make_gbt(Family f, int trees, int depth, double rate);
  static LearnerSpec make_random_forest(Family f, int trees, int n_predictors);
  static LearnerSpec make_poly_ridge(Family f, int degree, double lambda = 1e-3);
};

class FittedLearner {
 public:
  virtual ~FittedLearner() = default;
  // Rows of X must match the training dimensionality.  Binomial learners
  // return probabilities in [0, 1].
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
  const LearnerSpec& spec() const { return spec_; }
  int n_features() const { return n_features_; }

 protected:
  FittedLearner(LearnerSpec spec, int n_features)
      : spec_(std::move(spec)), n_features_(n_features) {}
  void check_query(const Eigen::MatrixXd& X) const;

  LearnerSpec spec_;
  int n_features_;
};

using LearnerPtr = std::shared_ptr<const FittedLearner>;

LearnerPtr fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                       std::uint64_t seed);

// Individual fitters (fit_learner dispatches on spec.kind).
LearnerPtr fit_elastic_net(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           std::uint64_t seed);
LearnerPtr fit_gbt(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   std::uint64_t seed);
LearnerPtr fit_random_forest(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             std::uint64_t seed);
LearnerPtr fit_polynomial_ridge(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                std::uint64_t seed);

// Smallest L1 penalty that zeroes every slope (KKT bound on standardized
// columns).  Exposed for tests and path construction.
double elastic_net_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, double alpha);

}  // namespace pattc
