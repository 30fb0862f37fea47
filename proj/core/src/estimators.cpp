#include "pattc/causal/estimators.hpp"

#include <cmath>

#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

namespace {

struct ArmMeans {
  double treated = 0, control = 0;
};

ArmMeans weighted_arm_means(const Dataset& rct) {
  double wy1 = 0, w1 = 0, wy0 = 0, w0 = 0;
  for (std::size_t i = 0; i < rct.n_rows(); ++i) {
    if (rct.defier[i] || !known(rct.assignment[i])) continue;
    if (rct.assignment[i] == Tri::Yes) {
      wy1 += rct.weight[i] * rct.outcome[i];
      w1 += rct.weight[i];
    } else {
      wy0 += rct.weight[i] * rct.outcome[i];
      w0 += rct.weight[i];
    }
  }
  if (w1 <= 0 || w0 <= 0) throw DataError("ITT requires both assignment arms");
  return {wy1 / w1, wy0 / w0};
}

Eigen::MatrixXd design_with_receipt(const Dataset& data, const FeatureSpec& spec,
                                    std::optional<int> forced_d) {
  DesignMatrix base = build_design_matrix(data, spec);
  Eigen::MatrixXd X(base.X.rows(), base.X.cols() + 1);
  X.leftCols(base.X.cols()) = base.X;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    X(i, base.X.cols()) =
        forced_d ? static_cast<double>(*forced_d)
                 : static_cast<double>(data.receipt[i]);
  return X;
}

ResponseModel fit_response_on_rows(const Dataset& rct, const std::vector<int>& rows,
                                   const FeatureSpec& spec,
                                   const std::vector<LearnerSpec>& learners,
                                   int cv_folds, std::uint64_t seed) {
  if (rows.empty()) throw DataError("no training rows for the response model");
  const Dataset train = rct.subset(rows);
  bool d0 = false, d1 = false;
  for (auto d : train.receipt) (d ? d1 : d0) = true;
  if (!d0 || !d1)
    throw DataError("treatment received is constant in the response training set");

  Eigen::MatrixXd X = design_with_receipt(train, spec, std::nullopt);
  Eigen::VectorXd y(train.n_rows()), w(train.n_rows());
  for (std::size_t i = 0; i < train.n_rows(); ++i) {
    y(i) = train.outcome[i];
    w(i) = train.weight[i];
  }
  std::vector<LearnerSpec> specs = learners;
  for (auto& s : specs) s.family = Family::gaussian;

  ResponseModel model;
  model.features = spec;
  model.training_rows = rows;
  CVPlan plan = CVPlan::make(train.n_rows(), cv_folds, derive_seed(seed, 11));
  model.ensemble = fit_super_learner(specs, X, y, w, plan, derive_seed(seed, 12));
  return model;
}

EstimateReport counterfactual_contrast(const ResponseModel& model,
                                       const Dataset& population,
                                       const std::string& kind,
                                       const std::string& subgroup = {}) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < population.n_rows(); ++i)
    if (population.receipt[i] == 1) rows.push_back(static_cast<int>(i));
  if (rows.empty()) throw DataError("no treated population rows (D = 1)");

  const Dataset treated = population.subset(rows);
  const Eigen::VectorXd y1 = model.predict_counterfactual(treated, 1);
  const Eigen::VectorXd y0 = model.predict_counterfactual(treated, 0);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < treated.n_rows(); ++i) {
    num += treated.weight[i] * (y1(i) - y0(i));
    den += treated.weight[i];
  }
  EstimateReport rep;
  rep.estimator = kind;
  rep.subgroup = subgroup;
  rep.estimate = num / den;
  return rep;
}

}  // namespace

EstimateReport estimate_itt(const Dataset& rct) {
  const ArmMeans m = weighted_arm_means(rct);
  EstimateReport rep;
  rep.estimator = "ITT";
  rep.estimate = m.treated - m.control;
  return rep;
}

EstimateReport estimate_cace(const Dataset& rct) {
  const EstimateReport itt = estimate_itt(rct);
  double w_treated = 0, w_complied = 0;
  for (std::size_t i = 0; i < rct.n_rows(); ++i) {
    if (rct.defier[i] || rct.assignment[i] != Tri::Yes) continue;
    w_treated += rct.weight[i];
    if (rct.receipt[i] == 1) w_complied += rct.weight[i];
  }
  if (w_complied <= 0) throw EstimationError("no treated compliers: CACE undefined");
  EstimateReport rep;
  rep.estimator = "CACE";
  rep.estimate = itt.estimate / (w_complied / w_treated);
  return rep;
}

Eigen::VectorXd ResponseModel::predict_counterfactual(const Dataset& data, int d) const {
  return ensemble.predict(design_with_receipt(data, features, d));
}

ResponseModel fit_response_model(const Dataset& rct,
                                 const std::vector<int>& predicted_compliance,
                                 const FeatureSpec& spec,
                                 const std::vector<LearnerSpec>& learners,
                                 int cv_folds, std::uint64_t seed) {
  if (predicted_compliance.size() != rct.n_rows())
    throw ArgumentError("predicted compliance vector must align with the RCT rows");
  std::vector<int> rows;
  for (std::size_t i = 0; i < rct.n_rows(); ++i) {
    if (rct.sample[i] != 1 || rct.defier[i]) continue;
    const bool observed_complier =
        rct.assignment[i] == Tri::Yes && rct.compliance[i] == Tri::Yes;
    const bool predicted_complier =
        rct.assignment[i] == Tri::No && predicted_compliance[i] == 1;
    if (observed_complier || predicted_complier) rows.push_back(static_cast<int>(i));
  }
  return fit_response_on_rows(rct, rows, spec, learners, cv_folds, seed);
}

EstimateReport estimate_pattc(const ResponseModel& model, const Dataset& population) {
  return counterfactual_contrast(model, population, "PATT-C");
}

ResponseModel fit_patt_response_model(const Dataset& rct, const FeatureSpec& spec,
                                      const std::vector<LearnerSpec>& learners,
                                      int cv_folds, std::uint64_t seed) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < rct.n_rows(); ++i)
    if (rct.sample[i] == 1 && !rct.defier[i]) rows.push_back(static_cast<int>(i));
  return fit_response_on_rows(rct, rows, spec, learners, cv_folds, seed);
}

EstimateReport estimate_patt(const ResponseModel& model, const Dataset& population) {
  return counterfactual_contrast(model, population, "PATT");
}

EstimateReport estimate_patt(const Dataset& rct, const Dataset& population,
                             const FeatureSpec& spec,
                             const std::vector<LearnerSpec>& learners,
                             int cv_folds, std::uint64_t seed) {
  const ResponseModel model =
      fit_patt_response_model(rct, spec, learners, cv_folds, seed);
  return counterfactual_contrast(model, population, "PATT");
}

std::vector<EstimateReport> subgroup_effects(const ResponseModel& model,
                                             const Dataset& population,
                                             const std::string& covariate) {
  const int j = population.covariate_index(covariate);
  if (j < 0) throw ArgumentError("unknown subgroup covariate: " + covariate);
  for (double v : population.covariates[j])
    if (v != 0.0 && v != 1.0)
      throw ArgumentError("subgroup covariate must be binary-encoded: " + covariate);

  std::vector<EstimateReport> out;
  for (int level = 0; level <= 1; ++level) {
    std::vector<int> rows;
    for (std::size_t i = 0; i < population.n_rows(); ++i)
      if (population.covariates[j][i] == level) rows.push_back(static_cast<int>(i));
    bool any_treated = false;
    for (int i : rows) any_treated |= population.receipt[i] == 1;
    if (rows.empty() || !any_treated) continue;  // skipped with warning upstream
    out.push_back(counterfactual_contrast(model, population.subset(rows), "PATT-C",
                                          covariate + "=" + std::to_string(level)));
  }
  return out;
}

}  // namespace pattc
