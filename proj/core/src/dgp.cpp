#include "pattc/sim/dgp.hpp"

#include <Eigen/Cholesky>
#include <numeric>

#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

void SimParams::validate() const {
  if (population_size < 2 * draw_size)
    throw ArgumentError("population size must be at least twice the draw size");
  if (!(rct_assign_prob > 0 && rct_assign_prob < 1))
    throw ArgumentError("RCT assignment probability must lie in (0,1)");
  if (draw_size < 1) throw ArgumentError("draw size must be positive");
}

namespace {

Eigen::Matrix4d covariate_chol() {
  // The stated off-diagonal covariances with unit variances are not positive
  // definite; diagonal 2 is the smallest integer diagonal that is.
  Eigen::Matrix4d sigma;
  sigma << 2.0, 1.0, 0.5, 1.0,
           1.0, 2.0, 0.5, 1.0,
           0.5, 0.5, 2.0, 1.0,
           1.0, 1.0, 1.0, 2.0;
  return sigma.llt().matrixL();
}

const Eigen::Vector4d kCovariateMean(0.5, 1.0, -1.0, -1.0);

}  // namespace

Eigen::MatrixXd sample_covariates(std::size_t n, std::uint64_t seed) {
  static const Eigen::Matrix4d L = covariate_chol();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd W(n, 4);
  Eigen::Vector4d z;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) z(j) = normal(rng);
    W.row(i) = (kCovariateMean + L * z).transpose();
  }
  return W;
}

Dataset SimDataset::to_dataset(const std::string& provenance) const {
  const bool rct = provenance == "rct";
  Dataset out;
  out.provenance = provenance;
  out.covariate_names = {"w1", "w2", "w3"};
  out.covariates.resize(3);
  const std::size_t n = n_rows();
  for (int j = 0; j < 3; ++j) {
    out.covariates[j].resize(n);
    for (std::size_t i = 0; i < n; ++i) out.covariates[j][i] = W(i, j);
  }
  out.sample.assign(S.begin(), S.end());
  out.receipt.assign(D.begin(), D.end());
  out.outcome.resize(n);
  out.weight.assign(n, 1.0);
  out.assignment.resize(n);
  out.compliance.resize(n);
  out.cluster.resize(n);
  out.cluster_labels.resize(n);
  out.defier.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out.outcome[i] = Y(i);
    out.assignment[i] = rct ? tri_of(T[i] == 1) : Tri::Unknown;
    out.compliance[i] =
        (rct && T[i] == 1) ? tri_of(C[i] == 1) : Tri::Unknown;
    out.cluster[i] = static_cast<int>(i);
    out.cluster_labels[i] = std::to_string(i);
  }
  return out;
}

namespace {

SimDataset select_rows(const SimDataset& all, const std::vector<int>& rows) {
  SimDataset out;
  out.W.resize(rows.size(), 4);
  out.Y.resize(rows.size());
  out.b.resize(rows.size());
  out.noise.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.W.row(k) = all.W.row(rows[k]);
    out.Y(k) = all.Y(rows[k]);
    out.b(k) = all.b(rows[k]);
    out.noise(k) = all.noise(rows[k]);
    out.S.push_back(all.S[rows[k]]);
    out.C.push_back(all.C[rows[k]]);
    out.T.push_back(all.T[rows[k]]);
    out.D.push_back(all.D[rows[k]]);
  }
  return out;
}

}  // namespace

Study generate_study(const SimParams& params) {
  params.validate();
  const int N = params.population_size;
  const int n = params.draw_size;

  SimDataset pop;
  pop.W = sample_covariates(N, derive_seed(params.seed, 1));
  Rng rng(derive_seed(params.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution assign(params.rct_assign_prob);

  pop.S.resize(N);
  pop.C.resize(N);
  pop.T.resize(N);
  pop.D.resize(N);
  pop.Y.resize(N);
  pop.b.resize(N);
  pop.noise.resize(N);
  const auto& e = params.e;
  for (int i = 0; i < N; ++i) {
    const double w1 = pop.W(i, 0), w2 = pop.W(i, 1), w3 = pop.W(i, 2), w4 = pop.W(i, 3);
    const double R = normal(rng), Q = normal(rng), V = normal(rng), U = normal(rng);
    pop.S[i] = (e[1] + params.g1 * w1 + params.g2 * w2 + params.g3 * w3 +
                e[3] * w4 + R) > 0;
    pop.C[i] = (e[2] + params.h2 * w2 + params.h3 * w3 + e[4] * w4 + Q) > 0;
    const bool t_pop = (e[0] + params.f1 * w1 + params.f2 * w2 + e[5] * w4 + V) > 0;
    pop.T[i] = pop.S[i] ? static_cast<std::int8_t>(assign(rng))
                        : static_cast<std::int8_t>(t_pop);
    pop.D[i] = pop.T[i] && pop.C[i];
    pop.b(i) = w1 > 0.75 ? 1.0 : -1.0;
    pop.noise(i) = U;
    pop.Y(i) = params.a + pop.b(i) * pop.D[i] + params.c1 * w1 + params.c2 * w2 +
               params.c3 * w4 + params.d * U;
  }

  // two disjoint draws of n from the population
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  Rng draw_rng(derive_seed(params.seed, 3));
  std::shuffle(order.begin(), order.end(), draw_rng);

  std::vector<int> rct_rows, obs_rows;
  int n_s1 = 0;
  for (int k = 0; k < n; ++k) {
    if (pop.S[order[k]] == 1) {
      rct_rows.push_back(order[k]);
      ++n_s1;
    }
  }
  for (int k = n; k < 2 * n; ++k)
    if (pop.S[order[k]] == 0) obs_rows.push_back(order[k]);

  if (rct_rows.empty()) throw DegenerateRun("no RCT-eligible units in the draw");
  if (obs_rows.empty()) throw DegenerateRun("no population units in the draw");

  Study study;
  study.rct = select_rows(pop, rct_rows);
  study.observational = select_rows(pop, obs_rows);
  study.rate_rct = static_cast<double>(n_s1) / n;
  double sc = 0, st = 0;
  for (std::size_t i = 0; i < study.observational.n_rows(); ++i) {
    sc += study.observational.C[i];
    st += study.observational.T[i];
  }
  study.rate_compliance = sc / study.observational.n_rows();
  study.rate_treatment = st / study.observational.n_rows();

  bool any_pop_treated = false;
  for (auto d : study.observational.D) any_pop_treated |= d == 1;
  if (!any_pop_treated) throw DegenerateRun("no treated units in the population draw");
  return study;
}

double true_effect(const SimDataset& observational) {
  double sum = 0;
  int count = 0;
  for (std::size_t i = 0; i < observational.n_rows(); ++i)
    if (observational.D[i] == 1) {
      sum += observational.b(i);
      ++count;
    }
  if (count == 0) throw DataError("true effect undefined without treated units");
  return sum / count;
}

}  // namespace pattc
