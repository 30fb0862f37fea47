#pragma once

#include <optional>

#include "pattc/data/dataset.hpp"
#include "pattc/learn/super_learner.hpp"

namespace pattc {

struct EstimateReport {
  std::string estimator;  // "PATT-C" | "PATT" | "CACE" | "ITT"
  std::string subgroup;   // empty for the overall estimate
  double estimate = 0;
  std::optional<double> ci_low, ci_high;
  std::string weight_scheme = "survey";
};

// Survey-weighted difference in mean outcomes by assignment arm.  Flagged
// defier rows are excluded.
EstimateReport estimate_itt(const Dataset& rct);

// ITT scaled by the treated-arm compliance share Pr(D=1 | T=1, S=1), so full
// compliance gives CACE = ITT.
EstimateReport estimate_cace(const Dataset& rct);

// Response surface over compliers: ensemble regression of Y on (W, D).
struct ResponseModel {
  EnsembleModel ensemble;  // gaussian
  FeatureSpec features;
  std::vector<int> training_rows;  // indices into the source RCT dataset

  // Predicts every row of `data` with treatment receipt forced to d.
  Eigen::VectorXd predict_counterfactual(const Dataset& data, int d) const;
};

// Trains on observed treated-arm compliers plus control-arm rows flagged as
// predicted compliers.  `predicted_compliance` is aligned to the rct rows and
// consulted only for control-arm entries.
ResponseModel fit_response_model(const Dataset& rct,
                                 const std::vector<int>& predicted_compliance,
                                 const FeatureSpec& spec,
                                 const std::vector<LearnerSpec>& learners,
                                 int cv_folds, std::uint64_t seed);

// Counterfactual contrast averaged over treated population rows (D = 1),
// weighted by the population survey weights.
EstimateReport estimate_pattc(const ResponseModel& model, const Dataset& population);

// Same contrast but with the response surface fit on every RCT row, no
// compliance adjustment.
ResponseModel fit_patt_response_model(const Dataset& rct, const FeatureSpec& spec,
                                      const std::vector<LearnerSpec>& learners,
                                      int cv_folds, std::uint64_t seed);
EstimateReport estimate_patt(const ResponseModel& model, const Dataset& population);
EstimateReport estimate_patt(const Dataset& rct, const Dataset& population,
                             const FeatureSpec& spec,
                             const std::vector<LearnerSpec>& learners,
                             int cv_folds, std::uint64_t seed);

// PATT-C restricted to each level of a binary-encoded population covariate.
std::vector<EstimateReport> subgroup_effects(const ResponseModel& model,
                                             const Dataset& population,
                                             const std::string& covariate);

}  // namespace pattc
