#pragma once

#include <array>

#include "pattc/data/dataset.hpp"

namespace pattc {

// A simulation run whose draw produced an unusable study (empty RCT, empty
// observational sample, or no treated population units).  Recorded as a
// missing run, never fatal.
struct DegenerateRun : std::runtime_error {
  explicit DegenerateRun(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimParams {
  std::array<double, 6> e{};  // e1..e6, grid-varied

  // fixed structural constants
  double g1 = 0.5, g2 = 0.25, g3 = 0.75;  // RCT eligibility index
  double h2 = 0.5, h3 = 0.5;              // compliance index
  double f1 = 0.25, f2 = 0.75;            // population treatment index
  double a = 1, c1 = 1, c2 = 2, c3 = 1, d = 1;  // outcome equation
  double rct_assign_prob = 0.5;

  int population_size = 30000;
  int draw_size = 5000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimDataset {
  Eigen::MatrixXd W;  // n x 4; the fourth column is hidden from estimators
  std::vector<std::int8_t> S, C, T, D;
  Eigen::VectorXd Y;
  Eigen::VectorXd b;      // per-unit effect, +1 or -1
  Eigen::VectorXd noise;  // U, kept so Y can be recomputed exactly

  std::size_t n_rows() const { return static_cast<std::size_t>(Y.size()); }

  // Exports the estimator-visible view: covariates w1..w3, T unknown for
  // population rows, C observed only in the RCT treated arm.
  Dataset to_dataset(const std::string& provenance) const;
};

struct Study {
  SimDataset rct;            // S=1 rows of the first draw
  SimDataset observational;  // S=0 rows of the second draw
  double rate_compliance = 0;  // mean C over the observational rows
  double rate_treatment = 0;   // mean T over the observational rows
  double rate_rct = 0;         // share of S=1 in the first draw
};

// Multivariate normal draw with the fixed mean vector and covariance
// (diagonal 2, stated off-diagonals), via Cholesky factorization.
Eigen::MatrixXd sample_covariates(std::size_t n, std::uint64_t seed);

Study generate_study(const SimParams& params);

// Mean unit effect over observational rows with D = 1.
double true_effect(const SimDataset& observational);

}  // namespace pattc
