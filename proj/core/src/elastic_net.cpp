#include <algorithm>
#include <cmath>
#include <numeric>

#include "pattc/learn/learner.hpp"
#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

namespace {

constexpr double kCdTol = 1e-8;
constexpr int kCdMaxSweeps = 2000;
constexpr int kIrlsMaxIter = 30;
constexpr double kProbClip = 1e-5;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Standardized {
  Eigen::MatrixXd Xs;           // kept columns, weighted mean 0 / norm 1
  Eigen::VectorXd mean, sd;     // per kept column
  std::vector<int> kept;        // original column indices
};

// v must sum to 1.  Zero-variance columns are dropped.
Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& v) {
  Standardized s;
  const Eigen::Index p = X.cols();
  std::vector<double> means, sds;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = v.dot(X.col(j));
    const double var = v.dot((X.col(j).array() - m).square().matrix());
    if (var <= 1e-12) continue;
    s.kept.push_back(static_cast<int>(j));
    means.push_back(m);
    sds.push_back(std::sqrt(var));
  }
  s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), means.size());
  s.sd = Eigen::Map<Eigen::VectorXd>(sds.data(), sds.size());
  s.Xs.resize(X.rows(), static_cast<Eigen::Index>(s.kept.size()));
  for (std::size_t k = 0; k < s.kept.size(); ++k)
    s.Xs.col(k) = (X.col(s.kept[k]).array() - s.mean(k)) / s.sd(k);
  return s;
}

// One penalized weighted least-squares solve by cyclic coordinate descent.
// omega need not sum to 1; denom(j) = sum_i omega_i Xs(i,j)^2.
void coordinate_descent(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& omega, double alpha, double lambda,
                        Eigen::VectorXd& beta, double& b0) {
  const Eigen::Index p = Xs.cols();
  Eigen::VectorXd denom(p);
  for (Eigen::Index j = 0; j < p; ++j)
    denom(j) = omega.dot(Xs.col(j).cwiseProduct(Xs.col(j)));
  const double wsum = omega.sum();
  Eigen::VectorXd r = z - Xs * beta;
  b0 = omega.dot(r) / wsum;
  r.array() -= b0;
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);
  for (int sweep = 0; sweep < kCdMaxSweeps; ++sweep) {
    double max_delta = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (denom(j) <= 0) continue;
      const double rho = omega.dot(Xs.col(j).cwiseProduct(r)) + denom(j) * beta(j);
      const double bj = soft_threshold(rho, l1) / (denom(j) + l2);
      if (bj != beta(j)) {
        r += Xs.col(j) * (beta(j) - bj);
        max_delta = std::max(max_delta, std::abs(bj - beta(j)));
        beta(j) = bj;
      }
    }
    const double db0 = omega.dot(r) / wsum;
    if (db0 != 0) {
      b0 += db0;
      r.array() -= db0;
      max_delta = std::max(max_delta, std::abs(db0));
    }
    if (max_delta < kCdTol) break;
  }
}

// Fits (beta, b0) on standardized columns at one lambda.
void fit_at_lambda(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& v, Family family, double alpha,
                   double lambda, Eigen::VectorXd& beta, double& b0) {
  if (family == Family::gaussian) {
    coordinate_descent(Xs, y, v, alpha, lambda, beta, b0);
    return;
  }
  for (int it = 0; it < kIrlsMaxIter; ++it) {
    Eigen::VectorXd eta = (Xs * beta).array() + b0;
    Eigen::VectorXd prob = eta.unaryExpr([](double e) {
      return std::clamp(sigmoid(e), kProbClip, 1.0 - kProbClip);
    });
    Eigen::VectorXd wpq = prob.cwiseProduct(Eigen::VectorXd::Ones(prob.size()) - prob);
    Eigen::VectorXd omega = v.cwiseProduct(wpq);
    Eigen::VectorXd z = eta + (y - prob).cwiseQuotient(wpq);
    const Eigen::VectorXd beta_old = beta;
    const double b0_old = b0;
    coordinate_descent(Xs, z, omega, alpha, lambda, beta, b0);
    const double delta = beta.size() ? (beta - beta_old).cwiseAbs().maxCoeff() : 0.0;
    if (delta < 1e-6 && std::abs(b0 - b0_old) < 1e-6) break;
  }
}

double lambda_max_standardized(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& v, double alpha) {
  const double ybar = v.dot(y);
  double m = 0;
  for (Eigen::Index j = 0; j < Xs.cols(); ++j)
    m = std::max(m, std::abs(v.dot(Xs.col(j).cwiseProduct(
                      (y.array() - ybar).matrix()))));
  return m / std::max(alpha, 1e-3);
}

class ElasticNetModel final : public FittedLearner {
 public:
  ElasticNetModel(LearnerSpec spec, int n_features, Eigen::VectorXd coef,
                  double intercept, double chosen_lambda)
      : FittedLearner(std::move(spec), n_features),
        coef_(std::move(coef)),
        intercept_(intercept),
        chosen_lambda_(chosen_lambda) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    check_query(X);
    Eigen::VectorXd eta = (X * coef_).array() + intercept_;
    if (spec_.family == Family::binomial)
      return eta.unaryExpr([](double e) { return sigmoid(e); });
    return eta;
  }

  const Eigen::VectorXd& coefficients() const { return coef_; }
  double intercept() const { return intercept_; }
  double chosen_lambda() const { return chosen_lambda_; }

 private:
  Eigen::VectorXd coef_;
  double intercept_;
  double chosen_lambda_;
};

}  // namespace

double elastic_net_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, double alpha) {
  Eigen::VectorXd v = w / w.sum();
  const Standardized s = standardize(X, v);
  return lambda_max_standardized(s.Xs, y, v, alpha);
}

LearnerPtr fit_elastic_net(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           std::uint64_t seed) {
  Eigen::VectorXd v = w / w.sum();
  if (spec.family == Family::binomial) {
    const double ybar = v.dot(y);
    if (ybar <= 0 || ybar >= 1)
      throw DataError("binomial elastic net requires both response classes");
  }
  const Standardized s = standardize(X, v);
  const Eigen::Index p = s.Xs.cols();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double b0 = 0;
  double chosen = spec.lambda;

  if (spec.lambda >= 0 || p == 0) {
    if (p > 0) fit_at_lambda(s.Xs, y, v, spec.family, spec.alpha, std::max(spec.lambda, 0.0), beta, b0);
    else b0 = v.dot(y);
  } else {
    // geometric path from lambda_max down 3 decades, chosen by 5-fold CV
    const double lmax = std::max(lambda_max_standardized(s.Xs, y, v, spec.alpha), 1e-10);
    const int npath = std::max(spec.path_length, 2);
    Eigen::VectorXd path(npath);
    for (int t = 0; t < npath; ++t)
      path(t) = lmax * std::pow(1e-3, static_cast<double>(t) / (npath - 1));

    const int kfold = 5;
    const Eigen::Index n = X.rows();
    std::vector<int> fold(n);
    {
      std::vector<int> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(derive_seed(seed, 0xe11a));
      std::shuffle(idx.begin(), idx.end(), rng);
      for (Eigen::Index i = 0; i < n; ++i) fold[idx[i]] = static_cast<int>(i % kfold);
    }
    Eigen::VectorXd cv_loss = Eigen::VectorXd::Zero(npath);
    for (int f = 0; f < kfold; ++f) {
      std::vector<int> tr, va;
      for (Eigen::Index i = 0; i < n; ++i) (fold[i] == f ? va : tr).push_back(static_cast<int>(i));
      if (tr.empty() || va.empty()) continue;
      Eigen::MatrixXd Xtr(tr.size(), p), Xva(va.size(), p);
      Eigen::VectorXd ytr(tr.size()), vtr(tr.size()), yva(va.size()), wva(va.size());
      for (std::size_t i = 0; i < tr.size(); ++i) {
        Xtr.row(i) = s.Xs.row(tr[i]);
        ytr(i) = y(tr[i]);
        vtr(i) = v(tr[i]);
      }
      for (std::size_t i = 0; i < va.size(); ++i) {
        Xva.row(i) = s.Xs.row(va[i]);
        yva(i) = y(va[i]);
        wva(i) = v(va[i]);
      }
      if (spec.family == Family::binomial) {
        const double m = vtr.dot(ytr) / vtr.sum();
        if (m <= 0 || m >= 1) continue;  // degenerate fold, skip
      }
      vtr /= vtr.sum();
      Eigen::VectorXd bf = Eigen::VectorXd::Zero(p);
      double b0f = 0;
      for (int t = 0; t < npath; ++t) {  // warm starts down the path
        fit_at_lambda(Xtr, ytr, vtr, spec.family, spec.alpha, path(t), bf, b0f);
        Eigen::VectorXd eta = (Xva * bf).array() + b0f;
        Eigen::VectorXd pred = spec.family == Family::binomial
                                   ? eta.unaryExpr([](double e) { return sigmoid(e); })
                                   : eta;
        cv_loss(t) += wva.dot((pred - yva).cwiseAbs2());
      }
    }
    int best = 0;
    cv_loss.minCoeff(&best);
    chosen = path(best);
    beta.setZero();
    for (int t = 0; t <= best; ++t)  // warm-start refit on full data
      fit_at_lambda(s.Xs, y, v, spec.family, spec.alpha, path(t), beta, b0);
  }

  // back to the original scale
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(X.cols());
  double intercept = b0;
  for (Eigen::Index k = 0; k < p; ++k) {
    coef(s.kept[k]) = beta(k) / s.sd(k);
    intercept -= beta(k) * s.mean(k) / s.sd(k);
  }
  return std::make_shared<ElasticNetModel>(spec, static_cast<int>(X.cols()),
                                           std::move(coef), intercept, chosen);
}

}  // namespace pattc
