#include <doctest.h>

#include <cmath>
#include <random>

#include "pattc/causal/compliance.hpp"
#include "pattc/causal/estimators.hpp"
#include "pattc/sim/dgp.hpp"
#include "pattc/util/error.hpp"

using namespace pattc;

namespace {

// Hand-rolled rows for the arithmetic oracles: (t, d, y, weight).
Dataset make_rct(const std::vector<std::array<double, 4>>& rows) {
  Dataset ds;
  ds.provenance = "rct";
  ds.covariate_names = {"w1"};
  ds.covariates.resize(1);
  int cl = 0;
  for (const auto& r : rows) {
    ds.covariates[0].push_back(0.0);
    ds.sample.push_back(1);
    ds.assignment.push_back(tri_of(r[0] != 0));
    ds.receipt.push_back(static_cast<std::int8_t>(r[1]));
    ds.compliance.push_back(r[0] != 0 ? tri_of(r[1] != 0) : Tri::Unknown);
    ds.outcome.push_back(r[2]);
    ds.weight.push_back(r[3]);
    ds.cluster.push_back(cl);
    ds.cluster_labels.push_back(std::to_string(cl));
    ++cl;
    ds.defier.push_back(r[0] == 0 && r[1] == 1 ? 1 : 0);
  }
  return ds;
}

FeatureSpec w_spec() {
  FeatureSpec spec;
  spec.numeric_columns = {"w1", "w2", "w3"};
  return spec;
}

std::vector<LearnerSpec> gbt(Family f, int depth) {
  return {LearnerSpec::make_gbt(f, 80, depth, 0.1)};
}

struct Fitted {
  Study study;
  Dataset rct, pop;
  ResponseModel response;
};

Fitted fit_pipeline(std::uint64_t seed) {
  SimParams p;
  p.e = {0, 0, 0, 0, 0, 0};
  p.population_size = 12000;
  p.draw_size = 2000;
  p.seed = seed;
  Fitted f{generate_study(p), {}, {}, {}};
  f.rct = f.study.rct.to_dataset("rct");
  f.pop = f.study.observational.to_dataset("observational");
  ComplianceModel cmodel =
      fit_compliance_model(f.rct, w_spec(), gbt(Family::binomial, 2), 5, seed + 1);
  std::vector<int> control_rows;
  for (std::size_t i = 0; i < f.rct.n_rows(); ++i)
    if (f.rct.assignment[i] == Tri::No && !f.rct.defier[i])
      control_rows.push_back(static_cast<int>(i));
  std::vector<int> pred = predict_control_compliers(
      cmodel, f.rct.subset(control_rows), cmodel.cutpoint.threshold);
  std::vector<int> full(f.rct.n_rows(), 0);
  for (std::size_t k = 0; k < control_rows.size(); ++k)
    full[control_rows[k]] = pred[k];
  f.response =
      fit_response_model(f.rct, full, w_spec(), gbt(Family::gaussian, 3), 5, seed + 2);
  return f;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("ITT is the weighted difference in arm means") {
  // treated: y=3 w=2, y=0 w=1  -> mean 2;  control: y=1 w=1 -> mean 1
  Dataset rct = make_rct({{1, 1, 3, 2}, {1, 0, 0, 1}, {0, 0, 1, 1}});
  EstimateReport itt = estimate_itt(rct);
  CHECK(itt.estimate == doctest::Approx((2.0 * 3 + 0) / 3.0 - 1.0).epsilon(1e-12));
}

TEST_CASE("ITT excludes flagged defiers") {
  Dataset rct = make_rct({{1, 1, 2, 1}, {0, 0, 1, 1}, {0, 1, 100, 1}});
  CHECK(rct.defier[2] == 1);
  EstimateReport itt = estimate_itt(rct);
  CHECK(itt.estimate == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ITT with an empty arm is a data error") {
  Dataset rct = make_rct({{1, 1, 2, 1}, {1, 1, 3, 1}});
  CHECK_THROWS_AS(estimate_itt(rct), DataError);
}

TEST_CASE("CACE equals ITT under full compliance") {
  Dataset rct = make_rct({{1, 1, 2, 1}, {1, 1, 4, 2}, {0, 0, 1, 1}, {0, 0, 0, 1}});
  EstimateReport itt = estimate_itt(rct);
  EstimateReport cace = estimate_cace(rct);
  CHECK(cace.estimate == itt.estimate);
}

TEST_CASE("CACE divides ITT by the treated-arm compliance share") {
  // treated arm: complier y=3, noncomplier y=1 (equal weight) -> mean 2,
  // share 0.5; control mean 1.  ITT = 1, CACE = 2.
  Dataset rct = make_rct({{1, 1, 3, 1}, {1, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}});
  EstimateReport cace = estimate_cace(rct);
  CHECK(cace.estimate == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("CACE with no treated compliers is an estimation error") {
  Dataset rct = make_rct({{1, 0, 3, 1}, {0, 0, 1, 1}});
  CHECK_THROWS_AS(estimate_cace(rct), EstimationError);
}

TEST_CASE("weighted compliance share uses survey weights") {
  // compliers carry weight 3 of a weight-4 treated arm -> share 0.75
  Dataset rct = make_rct({{1, 1, 2, 3}, {1, 0, 2, 1}, {0, 0, 0, 2}});
  EstimateReport itt = estimate_itt(rct);
  EstimateReport cace = estimate_cace(rct);
  CHECK(cace.estimate == doctest::Approx(itt.estimate / 0.75).epsilon(1e-12));
}

TEST_CASE("response counterfactuals on a D-dominated outcome") {
  // Y = 5 D exactly; a boosted response surface must learn a contrast near 5
  // and a D-free truth must yield exactly zero.
  SimParams p;
  p.e = {0, 0, 0, 0, 0, 0};
  p.population_size = 9000;
  p.draw_size = 1500;
  p.seed = 77;
  Study study = generate_study(p);
  Dataset rct = study.rct.to_dataset("rct");
  Dataset pop = study.observational.to_dataset("observational");
  for (std::size_t i = 0; i < rct.n_rows(); ++i) rct.outcome[i] = 5.0 * rct.receipt[i];

  std::vector<int> all_pred(rct.n_rows(), 1);  // treat every control as a complier
  ResponseModel model =
      fit_response_model(rct, all_pred, w_spec(), gbt(Family::gaussian, 3), 5, 5);
  EstimateReport est = estimate_pattc(model, pop);
  CHECK(est.estimate == doctest::Approx(5.0).epsilon(0.05));

  // constant outcome: the contrast collapses to zero regardless of D
  for (std::size_t i = 0; i < rct.n_rows(); ++i) rct.outcome[i] = 2.0;
  ResponseModel flat =
      fit_response_model(rct, all_pred, w_spec(), gbt(Family::gaussian, 3), 5, 5);
  EstimateReport zero = estimate_pattc(flat, pop);
  CHECK(zero.estimate == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("response training error sits near the conditional noise floor") {
  // the model sees (w1,w2,w3,D) but Y also carries the hidden w4 and U.  The
  // best achievable conditional MSE is Var(U) + Var(w4 | w1..w3) = 1 + 1.09;
  // in-sample the boosted trees overfit somewhat below that, but a grossly
  // under-fit model would land far above it
  Fitted f = fit_pipeline(113);
  const Dataset train = f.rct.subset(f.response.training_rows);
  const Eigen::VectorXd y1 = f.response.predict_counterfactual(train, 1);
  const Eigen::VectorXd y0 = f.response.predict_counterfactual(train, 0);
  double mse = 0;
  for (std::size_t i = 0; i < train.n_rows(); ++i) {
    const double fit = train.receipt[i] ? y1(i) : y0(i);
    mse += (train.outcome[i] - fit) * (train.outcome[i] - fit);
  }
  mse /= train.n_rows();
  CHECK(mse > 0.8);
  CHECK(mse < 2.5);
}

TEST_CASE("subgroup estimates reaggregate to the overall estimate") {
  Fitted f = fit_pipeline(101);
  // binary split of the population on the sign of w1
  Dataset pop = f.pop;
  pop.covariate_names.push_back("high_w1");
  pop.covariates.push_back({});
  for (std::size_t i = 0; i < pop.n_rows(); ++i)
    pop.covariates.back().push_back(pop.covariates[0][i] > 0.75 ? 1.0 : 0.0);

  EstimateReport overall = estimate_pattc(f.response, pop);
  std::vector<EstimateReport> groups = subgroup_effects(f.response, pop, "high_w1");
  REQUIRE(groups.size() == 2);

  double num = 0, den = 0;
  for (const auto& g : groups) {
    double gw = 0;
    const int level = g.subgroup.back() - '0';
    for (std::size_t i = 0; i < pop.n_rows(); ++i)
      if (pop.receipt[i] == 1 && pop.covariates.back()[i] == level)
        gw += pop.weight[i];
    num += g.estimate * gw;
    den += gw;
  }
  CHECK(num / den == doctest::Approx(overall.estimate).epsilon(1e-9));
}

TEST_CASE("subgroup covariate must be binary-encoded") {
  Fitted f = fit_pipeline(103);
  CHECK_THROWS_AS(subgroup_effects(f.response, f.pop, "w1"), ArgumentError);
  CHECK_THROWS_AS(subgroup_effects(f.response, f.pop, "absent"), ArgumentError);
}

TEST_CASE("estimates are invariant to row order") {
  Fitted f = fit_pipeline(105);
  std::vector<int> perm(f.pop.n_rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::mt19937_64 rng(9);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset shuffled = f.pop.subset(perm);
  EstimateReport a = estimate_pattc(f.response, f.pop);
  EstimateReport b = estimate_pattc(f.response, shuffled);
  CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-12));
}

TEST_CASE("estimates are invariant to a global weight rescaling") {
  Fitted f = fit_pipeline(107);
  Dataset scaled = f.pop;
  for (auto& w : scaled.weight) w *= 12.5;
  EstimateReport a = estimate_pattc(f.response, f.pop);
  EstimateReport b = estimate_pattc(f.response, scaled);
  CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-12));
}

TEST_CASE("PATT model trains on every arm, PATT-C only on compliers") {
  Fitted f = fit_pipeline(109);
  ResponseModel patt =
      fit_patt_response_model(f.rct, w_spec(), gbt(Family::gaussian, 3), 5, 3);
  std::size_t eligible = 0;
  for (std::size_t i = 0; i < f.rct.n_rows(); ++i) eligible += !f.rct.defier[i];
  CHECK(patt.training_rows.size() == eligible);
  CHECK(f.response.training_rows.size() < patt.training_rows.size());
}

TEST_CASE("population without treated rows cannot be contrasted") {
  Fitted f = fit_pipeline(111);
  std::vector<int> untreated;
  for (std::size_t i = 0; i < f.pop.n_rows(); ++i)
    if (f.pop.receipt[i] == 0) untreated.push_back(static_cast<int>(i));
  Dataset none = f.pop.subset(untreated);
  CHECK_THROWS_AS(estimate_pattc(f.response, none), DataError);
}

}  // TEST_SUITE
