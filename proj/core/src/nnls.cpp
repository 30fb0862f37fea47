#include <Eigen/QR>
#include <limits>
#include <vector>

#include "pattc/learn/super_learner.hpp"
#include "pattc/util/error.hpp"

namespace pattc {

// Lawson-Hanson active-set algorithm for min ||A x - b||^2, x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index p = A.cols();
  if (A.rows() != b.size()) throw ArgumentError("nnls: A rows must match b length");
  if (!A.allFinite() || !b.allFinite())
    throw ArgumentError("nnls: non-finite entries in the problem");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  std::vector<bool> passive(p, false);
  Eigen::VectorXd grad = A.transpose() * b;
  const double tol = 1e-12 * std::max(1.0, grad.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<int> idx;
    for (Eigen::Index j = 0; j < p; ++j)
      if (passive[j]) idx.push_back(static_cast<int>(j));
    Eigen::MatrixXd Ap(A.rows(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(k) = A.col(idx[k]);
    Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
    z.setZero();
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(k);
  };

  const int max_outer = 3 * static_cast<int>(p) + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    int j_enter = -1;
    double w_best = tol;
    for (Eigen::Index j = 0; j < p; ++j)
      if (!passive[j] && w(j) > w_best) {
        w_best = w(j);
        j_enter = static_cast<int>(j);
      }
    if (j_enter < 0) break;
    passive[j_enter] = true;

    Eigen::VectorXd z(p);
    for (int inner = 0; inner < max_outer; ++inner) {
      solve_passive(z);
      double alpha = std::numeric_limits<double>::infinity();
      bool feasible = true;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!passive[j] || z(j) > tol) continue;
        feasible = false;
        const double step = x(j) / (x(j) - z(j));
        alpha = std::min(alpha, step);
      }
      if (feasible) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < p; ++j)
        if (passive[j] && x(j) <= tol) {
          x(j) = 0;
          passive[j] = false;
        }
    }
  }
  return x.cwiseMax(0.0);
}

Eigen::VectorXd nnls_stack(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, bool* degenerate) {
  if (Z.rows() != y.size()) throw ArgumentError("nnls_stack: Z rows must match y");
  if (!Z.allFinite()) throw ArgumentError("nnls_stack: non-finite predictions");
  Eigen::VectorXd sqrtw = w.cwiseSqrt();
  Eigen::MatrixXd A = sqrtw.asDiagonal() * Z;
  Eigen::VectorXd b = sqrtw.cwiseProduct(y);
  Eigen::VectorXd x = nnls(A, b);
  const double total = x.sum();
  if (degenerate) *degenerate = total <= 0;
  if (total <= 0)
    return Eigen::VectorXd::Constant(Z.cols(), 1.0 / static_cast<double>(Z.cols()));
  return x / total;
}

}  // namespace pattc
