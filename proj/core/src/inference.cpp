#include "pattc/infer/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

namespace {

double percentile(std::vector<double> sorted, double q) {
  // linear interpolation between order statistics
  if (sorted.empty()) return 0;
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

void validate_plan(const BootstrapPlan& plan) {
  if (plan.replicates < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  if (!(plan.level > 0 && plan.level < 1))
    throw ArgumentError("confidence level must lie in (0,1)");
}

}  // namespace

BootstrapResult cluster_bootstrap(const std::function<double(const Dataset&)>& statistic,
                                  const Dataset& data, const BootstrapPlan& plan) {
  validate_plan(plan);
  // rows grouped by cluster code
  std::vector<int> codes = data.cluster;
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  if (codes.size() < 2) throw DataError("cluster bootstrap needs at least 2 clusters");
  std::vector<std::vector<int>> rows_of(codes.size());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const auto it = std::lower_bound(codes.begin(), codes.end(), data.cluster[i]);
    rows_of[it - codes.begin()].push_back(static_cast<int>(i));
  }

  BootstrapResult result;
  result.point = statistic(data);
  result.replicates.reserve(plan.replicates);
  const std::size_t n_clusters = codes.size();
  for (int r = 0; r < plan.replicates; ++r) {
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<std::size_t> pick(0, n_clusters - 1);
    std::vector<int> rows;
    rows.reserve(data.n_rows());
    for (std::size_t c = 0; c < n_clusters; ++c) {
      const auto& chosen = rows_of[pick(rng)];
      rows.insert(rows.end(), chosen.begin(), chosen.end());
    }
    try {
      result.replicates.push_back(statistic(data.subset(rows)));
    } catch (const std::exception&) {
      result.failed_replicates++;
    }
  }
  if (result.replicates.size() < 2)
    throw EstimationError("too few successful bootstrap replicates");

  const double mean = std::accumulate(result.replicates.begin(),
                                      result.replicates.end(), 0.0) /
                      result.replicates.size();
  double ss = 0;
  for (double v : result.replicates) ss += (v - mean) * (v - mean);
  result.se = std::sqrt(ss / (result.replicates.size() - 1));

  std::vector<double> sorted = result.replicates;
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - plan.level) / 2.0;
  result.ci_low = percentile(sorted, tail);
  result.ci_high = percentile(sorted, 1.0 - tail);
  return result;
}

PlaceboReport placebo_test(const Dataset& rct, const Eigen::VectorXd& predicted_y11,
                           const Eigen::VectorXd& pop_weights,
                           const BootstrapPlan& plan) {
  validate_plan(plan);
  if (predicted_y11.size() != pop_weights.size())
    throw ArgumentError("counterfactuals and population weights must align");
  if (predicted_y11.size() == 0) throw DataError("empty population group");

  std::vector<int> complier_rows;
  for (std::size_t i = 0; i < rct.n_rows(); ++i)
    if (rct.sample[i] == 1 && rct.assignment[i] == Tri::Yes &&
        rct.compliance[i] == Tri::Yes && rct.receipt[i] == 1)
      complier_rows.push_back(static_cast<int>(i));
  if (complier_rows.empty()) throw DataError("no RCT compliers on treatment");
  const Dataset compliers = rct.subset(complier_rows);

  auto weighted_mean = [](const Dataset& d) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      num += d.weight[i] * d.outcome[i];
      den += d.weight[i];
    }
    return num / den;
  };

  PlaceboReport report;
  report.rct_mean = weighted_mean(compliers);
  report.pop_mean = pop_weights.dot(predicted_y11) / pop_weights.sum();
  report.difference = report.rct_mean - report.pop_mean;

  // clusters of compliers on the RCT side
  std::vector<int> codes = compliers.cluster;
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  std::vector<std::vector<int>> rows_of(codes.size());
  for (std::size_t i = 0; i < compliers.n_rows(); ++i) {
    const auto it = std::lower_bound(codes.begin(), codes.end(), compliers.cluster[i]);
    rows_of[it - codes.begin()].push_back(static_cast<int>(i));
  }

  const Eigen::Index n_pop = predicted_y11.size();
  int extreme = 0;
  for (int r = 0; r < plan.replicates; ++r) {
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(r)));
    double num1 = 0, den1 = 0;
    std::uniform_int_distribution<std::size_t> pick_cluster(0, codes.size() - 1);
    for (std::size_t c = 0; c < codes.size(); ++c)
      for (int i : rows_of[pick_cluster(rng)]) {
        num1 += compliers.weight[i] * compliers.outcome[i];
        den1 += compliers.weight[i];
      }
    double num2 = 0, den2 = 0;
    std::uniform_int_distribution<Eigen::Index> pick_row(0, n_pop - 1);
    for (Eigen::Index i = 0; i < n_pop; ++i) {
      const Eigen::Index j = pick_row(rng);
      num2 += pop_weights(j) * predicted_y11(j);
      den2 += pop_weights(j);
    }
    if (den1 <= 0 || den2 <= 0) continue;
    const double delta = num1 / den1 - num2 / den2;
    if (std::abs(delta - report.difference) >= std::abs(report.difference)) extreme++;
  }
  report.p_value =
      static_cast<double>(extreme + 1) / static_cast<double>(plan.replicates + 1);
  return report;
}

double defier_bias(double pr_defier, double pr_complier, double effect_gap) {
  if (pr_defier < 0 || pr_complier > 1)
    throw ArgumentError("proportions must lie in [0,1]");
  if (pr_complier <= pr_defier)
    throw EstimationError("bias multiplier undefined: complier share must exceed defier share");
  return effect_gap * pr_defier / (pr_complier - pr_defier);
}

DefierCensus defier_census(const Dataset& rct) {
  DefierCensus census;
  for (std::size_t i = 0; i < rct.n_rows(); ++i) {
    if (!known(rct.assignment[i])) continue;
    const int t = rct.assignment[i] == Tri::Yes ? 1 : 0;
    const int d = rct.receipt[i];
    census.counts[t][d]++;
    census.total++;
  }
  if (census.total == 0) return census;
  census.pr_defier = static_cast<double>(census.counts[0][1]) / census.total;
  census.pr_complier =
      static_cast<double>(census.counts[0][0] + census.counts[1][1]) / census.total;
  if (census.pr_complier > census.pr_defier)
    census.bias_multiplier =
        census.pr_defier / (census.pr_complier - census.pr_defier);
  return census;
}

}  // namespace pattc
