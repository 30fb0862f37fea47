#include "pattc/causal/compliance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

CutpointReport roc_optimal_cutpoint(const Eigen::VectorXd& scores,
                                    const std::vector<int>& labels) {
  if (scores.size() != static_cast<Eigen::Index>(labels.size()))
    throw ArgumentError("scores and labels length mismatch");
  int pos = 0, neg = 0;
  for (int l : labels) (l ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw ArgumentError("roc cut-point requires both classes");
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (scores(i) < 0 || scores(i) > 1)
      throw ArgumentError("scores must lie in [0,1]");

  std::set<double> grid{0.0, 1.0};
  for (Eigen::Index i = 0; i < scores.size(); ++i) grid.insert(scores(i));

  CutpointReport best;
  best.distance = std::numeric_limits<double>::infinity();
  for (double t : grid) {  // ascending; <= keeps the larger threshold on ties
    int tp = 0, fp = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      if (scores(i) >= t) (labels[i] ? tp : fp)++;
    const double tpr = static_cast<double>(tp) / pos;
    const double fpr = static_cast<double>(fp) / neg;
    const double dist = std::sqrt((1.0 - tpr) * (1.0 - tpr) + fpr * fpr);
    if (dist <= best.distance) {
      best.threshold = t;
      best.tpr = tpr;
      best.tnr = 1.0 - fpr;
      best.distance = dist;
    }
  }
  return best;
}

Eigen::VectorXd ComplianceModel::score(const Dataset& data) const {
  return ensemble.predict(build_design_matrix(data, features).X);
}

namespace {

void forbid_assignment_features(const Dataset& data, const FeatureSpec& spec) {
  auto forbid = [&spec](const std::string& col) {
    if (col == spec.assign_col || col == spec.sample_col ||
        col == spec.receipt_col || col == spec.compliance_col)
      throw ArgumentError("compliance features must not include " + col);
  };
  (void)data;
  for (const auto& c : spec.numeric_columns) forbid(c);
  for (const auto& c : spec.categorical_columns) forbid(c);
}

double accuracy_at(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                   double threshold) {
  int correct = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if ((scores(i) >= threshold ? 1 : 0) == labels[i]) correct++;
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace

ComplianceModel fit_compliance_model(const Dataset& rct, const FeatureSpec& spec,
                                     const std::vector<LearnerSpec>& learners,
                                     int cv_folds, std::uint64_t seed) {
  forbid_assignment_features(rct, spec);
  std::vector<int> rows;
  for (std::size_t i = 0; i < rct.n_rows(); ++i)
    if (rct.sample[i] == 1 && rct.assignment[i] == Tri::Yes &&
        known(rct.compliance[i]) && !rct.defier[i])
      rows.push_back(static_cast<int>(i));
  if (rows.empty())
    throw DataError("no treated-arm rows with observed compliance");

  const Dataset treated = rct.subset(rows);
  int n1 = 0, n0 = 0;
  for (Tri c : treated.compliance) (c == Tri::Yes ? n1 : n0)++;
  if (n1 < 2 || n0 < 2)
    throw DataError("treated arm needs at least 2 rows of each compliance class");

  DesignMatrix design = build_design_matrix(treated, spec);
  Eigen::VectorXd y(treated.n_rows()), w(treated.n_rows());
  std::vector<int> labels(treated.n_rows());
  for (std::size_t i = 0; i < treated.n_rows(); ++i) {
    labels[i] = treated.compliance[i] == Tri::Yes ? 1 : 0;
    y(i) = labels[i];
    w(i) = treated.weight[i];
  }

  std::vector<LearnerSpec> specs = learners;
  for (auto& s : specs) s.family = Family::binomial;

  CVPlan plan = CVPlan::make(treated.n_rows(), cv_folds, derive_seed(seed, 1));
  Eigen::VectorXd oof;
  ComplianceModel model;
  model.ensemble =
      fit_super_learner(specs, design.X, y, w, plan, derive_seed(seed, 2), &oof);
  model.features = spec;
  model.cutpoint = roc_optimal_cutpoint(oof, labels);

  const Eigen::VectorXd in_sample = model.ensemble.predict(design.X);
  model.diagnostics.threshold = model.cutpoint.threshold;
  model.diagnostics.accuracy = accuracy_at(in_sample, labels, model.cutpoint.threshold);
  model.diagnostics.cv_accuracy = accuracy_at(oof, labels, model.cutpoint.threshold);
  model.diagnostics.tpr = model.cutpoint.tpr;
  model.diagnostics.tnr = model.cutpoint.tnr;
  return model;
}

std::vector<int> predict_control_compliers(const ComplianceModel& model,
                                           const Dataset& rct_controls,
                                           double threshold) {
  for (std::size_t i = 0; i < rct_controls.n_rows(); ++i)
    if (rct_controls.sample[i] != 1 || rct_controls.assignment[i] != Tri::No)
      throw ArgumentError("predict_control_compliers expects S=1, T=0 rows only");
  const Eigen::VectorXd s = model.score(rct_controls);
  std::vector<int> out(rct_controls.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s(i) >= threshold ? 1 : 0;
  return out;
}

ComplianceDiagnostics compliance_diagnostics(const ComplianceModel& model,
                                             const Dataset& treated) {
  std::vector<int> labels;
  std::vector<int> rows;
  for (std::size_t i = 0; i < treated.n_rows(); ++i) {
    if (!known(treated.compliance[i]))
      throw DataError("diagnostics require observed compliance");
    rows.push_back(static_cast<int>(i));
    labels.push_back(treated.compliance[i] == Tri::Yes ? 1 : 0);
  }
  const Eigen::VectorXd scores = model.score(treated);
  ComplianceDiagnostics d = model.diagnostics;
  d.accuracy = accuracy_at(scores, labels, model.cutpoint.threshold);
  int tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = scores(i) >= model.cutpoint.threshold ? 1 : 0;
    if (labels[i]) (pred ? tp : fn)++;
    else (pred ? fp : tn)++;
  }
  if (tp + fn > 0) d.tpr = static_cast<double>(tp) / (tp + fn);
  if (tn + fp > 0) d.tnr = static_cast<double>(tn) / (tn + fp);
  return d;
}

}  // namespace pattc
