#include <doctest.h>

#include <functional>
#include <limits>
#include <random>

#include "pattc/learn/super_learner.hpp"

using namespace pattc;

namespace {

double sse(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
  return (A * x - b).squaredNorm();
}

// Exhaustive search over the weight simplex on a 0.01 grid; the reference
// oracle for nnls_stack on small problems.
Eigen::VectorXd simplex_grid_search(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
  const int p = static_cast<int>(Z.cols());
  const int steps = 100;
  Eigen::VectorXd best = Eigen::VectorXd::Zero(p);
  double best_loss = std::numeric_limits<double>::infinity();
  std::function<void(int, int, Eigen::VectorXd&)> rec = [&](int j, int left,
                                                            Eigen::VectorXd& w) {
    if (j == p - 1) {
      w(j) = left / 100.0;
      double loss = (Z * w - y).squaredNorm();
      if (loss < best_loss) {
        best_loss = loss;
        best = w;
      }
      return;
    }
    for (int s = 0; s <= left; ++s) {
      w(j) = s / 100.0;
      rec(j + 1, left - s, w);
    }
  };
  Eigen::VectorXd w(p);
  rec(0, steps, w);
  return best;
}

}  // namespace

TEST_SUITE("nnls") {

TEST_CASE("exact nonnegative solution is recovered") {
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 1, 0, 0;
  Eigen::VectorXd b(3);
  b << 1, 0, 0;
  Eigen::VectorXd x = nnls(A, b);
  CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(x(1) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("negativity constraint binds on a hand-worked 2-variable problem") {
  // Unconstrained least squares of b on (a1, a2) gives a negative second
  // coefficient; the NNLS solution clamps it at zero and regresses on a1 only.
  Eigen::MatrixXd A(3, 2);
  A << 1, -1, 1, -1, 0, 1;
  Eigen::VectorXd b(3);
  b << 2, 2, -1;
  Eigen::VectorXd x = nnls(A, b);
  CHECK(x(1) == 0.0);
  // regressing b on a1 alone: a1 = (1,1,0), b.a1 = 4, a1.a1 = 2 -> 2
  CHECK(x(0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("objective at the solution beats every unit vector") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd A(12, 3);
    Eigen::VectorXd b(12);
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 3; ++j) A(i, j) = g(rng);
      b(i) = g(rng);
    }
    Eigen::VectorXd x = nnls(A, b);
    CHECK(x.minCoeff() >= 0.0);
    const double loss = sse(A, b, x);
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
      // best nonnegative scalar multiple of column j
      double denom = A.col(j).squaredNorm();
      double c = std::max(0.0, A.col(j).dot(b) / denom);
      e(j) = c;
      CHECK(loss <= sse(A, b, e) + 1e-9);
    }
  }
}

TEST_CASE("stacking weights match the 0.01-grid simplex search") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 2 + (trial % 2);  // 2 or 3 candidates
    Eigen::MatrixXd Z(40, p);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
      y(i) = g(rng);
      for (int j = 0; j < p; ++j) Z(i, j) = y(i) + 0.5 * g(rng);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Ones(40);
    Eigen::VectorXd weights = nnls_stack(Z, y, w);
    CHECK(weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(weights.minCoeff() >= 0.0);
    Eigen::VectorXd grid = simplex_grid_search(Z, y);
    // the returned weights are the orthant optimum rescaled to sum 1, so the
    // comparison is scale-free: at its best common scale the NNLS ray beats
    // every simplex grid point
    const Eigen::VectorXd dir = Z * weights;
    const double s = dir.dot(y) / dir.squaredNorm();
    CHECK((s * dir - y).squaredNorm() <= (Z * grid - y).squaredNorm() + 1e-4);
  }
}

TEST_CASE("all-zero stack falls back to uniform weights and flags it") {
  // candidates anti-correlated with y drive every coefficient to zero
  Eigen::MatrixXd Z(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    y(i) = i;
    Z(i, 0) = -static_cast<double>(i);
    Z(i, 1) = -2.0 * i;
  }
  bool degenerate = false;
  Eigen::VectorXd weights = nnls_stack(Z, y, Eigen::VectorXd::Ones(6), &degenerate);
  CHECK(degenerate);
  CHECK(weights(0) == doctest::Approx(0.5));
  CHECK(weights(1) == doctest::Approx(0.5));
}

TEST_CASE("observation weights steer the stack") {
  // candidate 0 matches y on the first half, candidate 1 on the second;
  // concentrating observation weight picks the matching candidate.
  Eigen::MatrixXd Z(10, 2);
  Eigen::VectorXd y(10);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < 10; ++i) {
    y(i) = g(rng);
    Z(i, 0) = i < 5 ? y(i) : -y(i);
    Z(i, 1) = i < 5 ? -y(i) : y(i);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(10) * 1e-6;
  for (int i = 0; i < 5; ++i) w(i) = 1.0;
  Eigen::VectorXd weights = nnls_stack(Z, y, w);
  CHECK(weights(0) > 0.99);
}

}  // TEST_SUITE
