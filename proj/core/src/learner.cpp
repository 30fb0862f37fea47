#include "pattc/learn/learner.hpp"

#include <sstream>

#include "pattc/util/error.hpp"

namespace pattc {

std::string LearnerSpec::label() const {
  std::ostringstream ss;
  switch (kind) {
    case LearnerKind::elastic_net:
      ss << "elastic_net(alpha=" << alpha;
      if (lambda >= 0) ss << ",lambda=" << lambda;
      ss << ")";
      break;
    case LearnerKind::gradient_boosted_trees:
      ss << "gbt(trees=" << n_trees << ",depth=" << max_depth
         << ",rate=" << learning_rate << ")";
      break;
    case LearnerKind::random_forest:
      ss << "random_forest(trees=" << n_trees << ",preds=" << n_predictors << ")";
      break;
    case LearnerKind::polynomial_ridge:
      ss << "poly_ridge(degree=" << degree << ",lambda=" << ridge_lambda << ")";
      break;
  }
  return ss.str();
}

void LearnerSpec::validate(int n_features) const {
  switch (kind) {
    case LearnerKind::elastic_net:
      if (alpha < 0 || alpha > 1) throw ArgumentError("elastic net alpha must be in [0,1]");
      break;
    case LearnerKind::gradient_boosted_trees:
      if (n_trees < 1) throw ArgumentError("gbt tree count must be >= 1");
      if (max_depth < 1) throw ArgumentError("gbt depth must be >= 1");
      if (learning_rate <= 0) throw ArgumentError("gbt learning rate must be > 0");
      break;
    case LearnerKind::random_forest:
      if (n_trees < 1) throw ArgumentError("forest tree count must be >= 1");
      if (n_predictors < 1 || n_predictors > n_features)
        throw ArgumentError("candidate predictors per split must be in [1, n_features]");
      break;
    case LearnerKind::polynomial_ridge:
      if (degree < 2 || degree > 4) throw ArgumentError("polynomial degree must be in {2,3,4}");
      if (ridge_lambda < 0) throw ArgumentError("ridge penalty must be >= 0");
      break;
  }
}

LearnerSpec LearnerSpec::make_elastic_net(Family f, double alpha, double lambda) {
  LearnerSpec s;
  s.kind = LearnerKind::elastic_net;
  s.family = f;
  s.alpha = alpha;
  s.lambda = lambda;
  return s;
}

LearnerSpec LearnerSpec::make_gbt(Family f, int trees, int depth, double rate) {
  LearnerSpec s;
  s.kind = LearnerKind::gradient_boosted_trees;
  s.family = f;
  s.n_trees = trees;
  s.max_depth = depth;
  s.learning_rate = rate;
  return s;
}

LearnerSpec LearnerSpec::make_random_forest(Family f, int trees, int n_predictors) {
  LearnerSpec s;
  s.kind = LearnerKind::random_forest;
  s.family = f;
  s.n_trees = trees;
  s.n_predictors = n_predictors;
  return s;
}

LearnerSpec LearnerSpec::make_poly_ridge(Family f, int degree, double lambda) {
  LearnerSpec s;
  s.kind = LearnerKind::polynomial_ridge;
  s.family = f;
  s.degree = degree;
  s.ridge_lambda = lambda;
  return s;
}

void FittedLearner::check_query(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features_)
    throw ArgumentError("prediction feature count " + std::to_string(X.cols()) +
                        " does not match training dimensionality " +
                        std::to_string(n_features_));
}

LearnerPtr fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       std::uint64_t seed) {
  if (X.rows() != y.size() || X.rows() != w.size())
    throw ArgumentError("X, y, weights row counts disagree");
  spec.validate(static_cast<int>(X.cols()));
  switch (spec.kind) {
    case LearnerKind::elastic_net:
      return fit_elastic_net(spec, X, y, w, seed);
    case LearnerKind::gradient_boosted_trees:
      return fit_gbt(spec, X, y, w, seed);
    case LearnerKind::random_forest:
      return fit_random_forest(spec, X, y, w, seed);
    case LearnerKind::polynomial_ridge:
      return fit_polynomial_ridge(spec, X, y, w, seed);
  }
  throw ArgumentError("unknown learner kind");
}

}  // namespace pattc
