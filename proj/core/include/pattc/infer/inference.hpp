#pragma once

#include <array>
#include <functional>

#include "pattc/data/dataset.hpp"

namespace pattc {

struct BootstrapPlan {
  int replicates = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
};

struct BootstrapResult {
  double point = 0;
  double se = 0;
  double ci_low = 0, ci_high = 0;  // percentile interval
  int failed_replicates = 0;
  std::vector<double> replicates;
};

// Resamples whole clusters with replacement; each drawn cluster contributes
// all of its rows.  Replicate seeds derive from (plan.seed, replicate index).
BootstrapResult cluster_bootstrap(const std::function<double(const Dataset&)>& statistic,
                                  const Dataset& data, const BootstrapPlan& plan);

struct PlaceboReport {
  double rct_mean = 0;   // weighted mean outcome of RCT compliers on treatment
  double pop_mean = 0;   // weighted mean of predicted treated counterfactuals
  double difference = 0;
  double p_value = 1;
};

// Compares observed complier outcomes against model-adjusted population
// counterfactuals; p-value is a two-sided bootstrap tail probability of the
// centered difference (clusters on the RCT side, rows on the population side).
PlaceboReport placebo_test(const Dataset& rct, const Eigen::VectorXd& predicted_y11,
                           const Eigen::VectorXd& pop_weights,
                           const BootstrapPlan& plan);

// effect_gap * pr_defier / (pr_complier - pr_defier)
double defier_bias(double pr_defier, double pr_complier, double effect_gap);

struct DefierCensus {
  // counts[t][d]
  std::array<std::array<long, 2>, 2> counts{};
  long total = 0;
  double pr_defier = 0;    // share with T=0, D=1
  double pr_complier = 0;  // share with D = T
  double bias_multiplier = 0;
};

DefierCensus defier_census(const Dataset& rct);

}  // namespace pattc
