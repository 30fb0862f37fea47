#include <algorithm>
#include <cmath>

#include "pattc/learn/learner.hpp"
#include "pattc/util/error.hpp"

namespace pattc {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// x, x^2, ..., x^degree for every input column, in column-major order.
Eigen::MatrixXd expand_basis(const Eigen::MatrixXd& X, int degree) {
  Eigen::MatrixXd B(X.rows(), X.cols() * degree);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::VectorXd pow = X.col(j);
    for (int d = 0; d < degree; ++d) {
      B.col(j * degree + d) = pow;
      if (d + 1 < degree) pow = pow.cwiseProduct(X.col(j));
    }
  }
  return B;
}

class PolyRidgeModel final : public FittedLearner {
 public:
  PolyRidgeModel(LearnerSpec spec, int n_features, Eigen::VectorXd coef, double intercept)
      : FittedLearner(std::move(spec), n_features),
        coef_(std::move(coef)),
        intercept_(intercept) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    check_query(X);
    Eigen::VectorXd eta =
        (expand_basis(X, spec_.degree) * coef_).array() + intercept_;
    if (spec_.family == Family::binomial)
      return eta.unaryExpr([](double e) { return sigmoid(e); });
    return eta;
  }

 private:
  Eigen::VectorXd coef_;  // on the expanded basis
  double intercept_;
};

// Penalized WLS on standardized columns; omega need not be normalized.
void ridge_wls(const Eigen::MatrixXd& Bs, const Eigen::VectorXd& z,
               const Eigen::VectorXd& omega, double lambda,
               Eigen::VectorXd& beta, double& b0) {
  const double wsum = omega.sum();
  const double zbar = omega.dot(z) / wsum;
  // center columns in the omega metric so the intercept stays unpenalized
  Eigen::VectorXd colmean = (Bs.transpose() * omega) / wsum;
  Eigen::MatrixXd Bc = Bs.rowwise() - colmean.transpose();
  Eigen::MatrixXd A = Bc.transpose() * omega.asDiagonal() * Bc;
  A.diagonal().array() += lambda;
  Eigen::VectorXd rhs = Bc.transpose() * (omega.array() * (z.array() - zbar)).matrix();
  beta = A.ldlt().solve(rhs);
  b0 = zbar - colmean.dot(beta);
}

}  // namespace

LearnerPtr fit_polynomial_ridge(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                std::uint64_t /*seed*/) {
  Eigen::VectorXd v = w / w.sum();
  if (spec.family == Family::binomial) {
    const double ybar = v.dot(y);
    if (ybar <= 0 || ybar >= 1)
      throw DataError("binomial polynomial ridge requires both response classes");
  }
  const Eigen::MatrixXd B = expand_basis(X, spec.degree);
  const Eigen::Index pb = B.cols();

  // standardize (zero-variance columns get scale 1 and coefficient 0 via ridge)
  Eigen::VectorXd mean(pb), sd(pb);
  Eigen::MatrixXd Bs(B.rows(), pb);
  for (Eigen::Index j = 0; j < pb; ++j) {
    mean(j) = v.dot(B.col(j));
    const double var = v.dot((B.col(j).array() - mean(j)).square().matrix());
    sd(j) = var > 1e-12 ? std::sqrt(var) : 1.0;
    Bs.col(j) = (B.col(j).array() - mean(j)) / sd(j);
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(pb);
  double b0 = 0;
  if (spec.family == Family::gaussian) {
    ridge_wls(Bs, y, v, spec.ridge_lambda, beta, b0);
  } else {
    b0 = std::log(v.dot(y) / (1.0 - v.dot(y)));
    for (int it = 0; it < 30; ++it) {
      Eigen::VectorXd eta = (Bs * beta).array() + b0;
      Eigen::VectorXd prob = eta.unaryExpr(
          [](double e) { return std::clamp(sigmoid(e), 1e-5, 1.0 - 1e-5); });
      Eigen::VectorXd pq = prob.cwiseProduct(Eigen::VectorXd::Ones(prob.size()) - prob);
      Eigen::VectorXd omega = v.cwiseProduct(pq);
      Eigen::VectorXd z = eta + (y - prob).cwiseQuotient(pq);
      const Eigen::VectorXd beta_old = beta;
      const double b0_old = b0;
      ridge_wls(Bs, z, omega, spec.ridge_lambda, beta, b0);
      if ((beta - beta_old).cwiseAbs().maxCoeff() < 1e-7 &&
          std::abs(b0 - b0_old) < 1e-7)
        break;
    }
  }

  Eigen::VectorXd coef(pb);
  double intercept = b0;
  for (Eigen::Index j = 0; j < pb; ++j) {
    coef(j) = beta(j) / sd(j);
    intercept -= beta(j) * mean(j) / sd(j);
  }
  return std::make_shared<PolyRidgeModel>(spec, static_cast<int>(X.cols()),
                                          std::move(coef), intercept);
}

}  // namespace pattc
