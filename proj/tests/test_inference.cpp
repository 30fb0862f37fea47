#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pattc/infer/inference.hpp"
#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

using namespace pattc;

namespace {

// Minimal dataset: outcomes with explicit cluster codes, unit weights.
Dataset make_clustered(const std::vector<double>& y, const std::vector<int>& cluster) {
  Dataset ds;
  ds.provenance = "rct";
  for (std::size_t i = 0; i < y.size(); ++i) {
    ds.sample.push_back(1);
    ds.assignment.push_back(Tri::Yes);
    ds.receipt.push_back(1);
    ds.compliance.push_back(Tri::Yes);
    ds.outcome.push_back(y[i]);
    ds.weight.push_back(1.0);
    ds.cluster.push_back(cluster[i]);
    ds.defier.push_back(0);
  }
  int max_cl = 0;
  for (int c : cluster) max_cl = std::max(max_cl, c);
  for (int c = 0; c <= max_cl; ++c) ds.cluster_labels.push_back(std::to_string(c));
  return ds;
}

double mean_stat(const Dataset& d) {
  double s = 0;
  for (double v : d.outcome) s += v;
  return s / d.n_rows();
}

Dataset census_rows(long n00, long n01, long n10, long n11) {
  Dataset ds;
  long i = 0;
  auto add = [&](long n, Tri t, int d) {
    for (long k = 0; k < n; ++k) {
      ds.sample.push_back(1);
      ds.assignment.push_back(t);
      ds.receipt.push_back(static_cast<std::int8_t>(d));
      ds.compliance.push_back(Tri::Unknown);
      ds.outcome.push_back(0.0);
      ds.weight.push_back(1.0);
      ds.cluster.push_back(static_cast<int>(i));
      ds.cluster_labels.push_back(std::to_string(i));
      ds.defier.push_back(t == Tri::No && d == 1 ? 1 : 0);
      ++i;
    }
  };
  add(n00, Tri::No, 0);
  add(n01, Tri::No, 1);
  add(n10, Tri::Yes, 0);
  add(n11, Tri::Yes, 1);
  return ds;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("a constant statistic has zero spread") {
  Dataset ds = make_clustered({1, 2, 3, 4}, {0, 1, 2, 3});
  BootstrapPlan plan{200, 5, 0.95};
  auto res = cluster_bootstrap([](const Dataset&) { return 7.5; }, ds, plan);
  CHECK(res.point == 7.5);
  CHECK(res.se == 0.0);
  CHECK(res.ci_low == 7.5);
  CHECK(res.ci_high == 7.5);
  CHECK(res.failed_replicates == 0);
}

TEST_CASE("two-cluster replicates enumerate the three compositions") {
  // clusters {0} -> y = 2 and {1} -> y = 6; every resample mean is one of
  // {2, 4, 6}
  Dataset ds = make_clustered({2, 6}, {0, 1});
  BootstrapPlan plan{500, 11, 0.95};
  auto res = cluster_bootstrap(mean_stat, ds, plan);
  for (double v : res.replicates)
    CHECK((v == 2.0 || v == 4.0 || v == 6.0));
  // all three compositions occur over 500 draws
  std::set<double> seen(res.replicates.begin(), res.replicates.end());
  CHECK(seen.size() == 3);
}

TEST_CASE("replicate draws can be re-derived from the plan seed") {
  // independent reconstruction of replicate r: same generator, same picks
  Dataset ds = make_clustered({1, 2, 3, 10, 20}, {0, 0, 1, 2, 2});
  BootstrapPlan plan{50, 77, 0.95};
  auto res = cluster_bootstrap(mean_stat, ds, plan);
  REQUIRE(res.replicates.size() == 50);
  std::vector<std::vector<double>> cluster_y = {{1, 2}, {3}, {10, 20}};
  for (int r = 0; r < 50; ++r) {
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<std::size_t> pick(0, 2);
    double sum = 0;
    std::size_t count = 0;
    for (int c = 0; c < 3; ++c)
      for (double v : cluster_y[pick(rng)]) {
        sum += v;
        ++count;
      }
    CHECK(res.replicates[r] == sum / count);
  }
}

TEST_CASE("bootstrap SE approaches the analytic SE of a mean") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0, 2);
  const int n = 50;
  std::vector<double> y(n);
  std::vector<int> cl(n);
  for (int i = 0; i < n; ++i) {
    y[i] = g(rng);
    cl[i] = i;  // singleton clusters: ordinary bootstrap of the mean
  }
  Dataset ds = make_clustered(y, cl);
  BootstrapPlan plan{4000, 3, 0.95};
  auto res = cluster_bootstrap(mean_stat, ds, plan);
  double m = 0, ss = 0;
  for (double v : y) m += v;
  m /= n;
  for (double v : y) ss += (v - m) * (v - m);
  const double analytic = std::sqrt(ss / n / n);  // sd with 1/n divisor, over sqrt(n)
  CHECK(res.se == doctest::Approx(analytic).epsilon(0.1));
  CHECK(res.ci_low < res.ci_high);
  CHECK(res.ci_low < res.point);
  CHECK(res.ci_high > res.point);
}

TEST_CASE("failing replicates are counted, not fatal") {
  Dataset ds = make_clustered({1, 2, 3, 4}, {0, 1, 2, 3});
  BootstrapPlan plan{100, 19, 0.95};
  auto stat = [](const Dataset& d) {
    // refuse any resample that dropped cluster 0
    bool has0 = false;
    for (int c : d.cluster) has0 |= c == 0;
    if (!has0) throw EstimationError("cluster 0 missing");
    return mean_stat(d);
  };
  auto res = cluster_bootstrap(stat, ds, plan);
  CHECK(res.failed_replicates > 0);
  CHECK(res.failed_replicates + static_cast<int>(res.replicates.size()) == 100);
}

TEST_CASE("bootstrap input validation") {
  Dataset one = make_clustered({1, 2}, {0, 0});
  BootstrapPlan plan{100, 1, 0.95};
  CHECK_THROWS_AS(cluster_bootstrap(mean_stat, one, plan), DataError);
  Dataset ds = make_clustered({1, 2}, {0, 1});
  CHECK_THROWS_AS(cluster_bootstrap(mean_stat, ds, BootstrapPlan{1, 1, 0.95}),
                  ArgumentError);
  CHECK_THROWS_AS(cluster_bootstrap(mean_stat, ds, BootstrapPlan{100, 1, 1.0}),
                  ArgumentError);
}

TEST_CASE("placebo test accepts matching distributions and rejects a shift") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(5.0, 1.0);
  const int n = 400;
  std::vector<double> y(n);
  std::vector<int> cl(n);
  for (int i = 0; i < n; ++i) {
    y[i] = g(rng);
    cl[i] = i;
  }
  Dataset rct = make_clustered(y, cl);
  Eigen::VectorXd y11(n), w = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) y11(i) = g(rng);
  BootstrapPlan plan{400, 31, 0.95};

  PlaceboReport same = placebo_test(rct, y11, w, plan);
  CHECK(same.p_value > 0.05);
  CHECK(same.difference == doctest::Approx(same.rct_mean - same.pop_mean));

  Eigen::VectorXd raised = y11.array() + 2.0;
  PlaceboReport shifted = placebo_test(rct, raised, w, plan);
  CHECK(shifted.p_value < 0.05);
  CHECK(shifted.difference < -1.0);
}

TEST_CASE("placebo test validation") {
  Dataset rct = make_clustered({1, 2, 3}, {0, 1, 2});
  Eigen::VectorXd y11(2), w(3);
  y11 << 1, 2;
  w << 1, 1, 1;
  BootstrapPlan plan{100, 1, 0.95};
  CHECK_THROWS_AS(placebo_test(rct, y11, w, plan), ArgumentError);
  // no treated compliers at all
  Dataset controls = make_clustered({1, 2}, {0, 1});
  for (auto& t : controls.assignment) t = Tri::No;
  for (auto& d : controls.receipt) d = 0;
  Eigen::VectorXd ok = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(placebo_test(controls, ok, ok, plan), DataError);
}

TEST_CASE("defier bias formula") {
  CHECK(defier_bias(0.1, 0.9, 2.0) == doctest::Approx(2.0 * 0.1 / 0.8).epsilon(1e-12));
  CHECK(defier_bias(0.0, 0.5, 3.0) == 0.0);
  CHECK_THROWS_AS(defier_bias(-0.1, 0.5, 1.0), ArgumentError);
  CHECK_THROWS_AS(defier_bias(0.3, 0.2, 1.0), EstimationError);
  CHECK_THROWS_AS(defier_bias(0.5, 0.5, 1.0), EstimationError);
}

TEST_CASE("defier census counts a constructed two-by-two table") {
  Dataset ds = census_rows(3, 1, 2, 4);
  DefierCensus census = defier_census(ds);
  CHECK(census.counts[0][0] == 3);
  CHECK(census.counts[0][1] == 1);
  CHECK(census.counts[1][0] == 2);
  CHECK(census.counts[1][1] == 4);
  CHECK(census.total == 10);
  CHECK(census.pr_defier == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(census.pr_complier == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(census.bias_multiplier == doctest::Approx(0.1 / 0.6).epsilon(1e-12));
  // the multiplier is the unit-gap bias
  CHECK(census.bias_multiplier ==
        doctest::Approx(defier_bias(census.pr_defier, census.pr_complier, 1.0)));
}

TEST_CASE("census ignores rows with unknown assignment and survives permutation") {
  Dataset ds = census_rows(2, 1, 1, 2);
  ds.assignment[0] = Tri::Unknown;
  DefierCensus census = defier_census(ds);
  CHECK(census.total == 5);
  CHECK(census.counts[0][0] == 1);

  std::vector<int> perm(ds.n_rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  DefierCensus again = defier_census(ds.subset(perm));
  CHECK(again.counts == census.counts);
  CHECK(again.bias_multiplier == census.bias_multiplier);
}

}  // TEST_SUITE
