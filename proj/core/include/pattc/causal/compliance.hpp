#pragma once

#include "pattc/data/dataset.hpp"
#include "pattc/learn/super_learner.hpp"

namespace pattc {

struct CutpointReport {
  double threshold = 0;
  double tpr = 0;
  double tnr = 0;
  double distance = 0;  // sqrt((1-TPR)^2 + (1-TNR)^2)
};

// Threshold minimizing the Euclidean distance between the ROC point and the
// (0,1) corner; candidate thresholds are every distinct score plus {0, 1};
// ties resolve toward the larger threshold.  Classification rule is
// score >= threshold.
CutpointReport roc_optimal_cutpoint(const Eigen::VectorXd& scores,
                                    const std::vector<int>& labels);

struct ComplianceDiagnostics {
  double accuracy = 0;     // in-sample, at the chosen cut-point
  double cv_accuracy = 0;  // out-of-fold, at the chosen cut-point
  double tpr = 0;
  double tnr = 0;
  double threshold = 0;
};

struct ComplianceModel {
  EnsembleModel ensemble;  // binomial
  FeatureSpec features;
  CutpointReport cutpoint;  // tuned on out-of-fold scores
  ComplianceDiagnostics diagnostics;

  Eigen::VectorXd score(const Dataset& data) const;
};

// Trains the compliance ensemble on the RCT treated arm (observed C only).
// Treatment assignment and sample membership are never features; cv_folds
// controls the stacking plan.
ComplianceModel fit_compliance_model(const Dataset& rct, const FeatureSpec& spec,
                                     const std::vector<LearnerSpec>& learners,
                                     int cv_folds, std::uint64_t seed);

// 1{score >= threshold} for every control-arm row.
std::vector<int> predict_control_compliers(const ComplianceModel& model,
                                           const Dataset& rct_controls,
                                           double threshold);

// Recomputes in-sample accuracy on a treated dataset with observed C.
ComplianceDiagnostics compliance_diagnostics(const ComplianceModel& model,
                                             const Dataset& treated);

}  // namespace pattc
