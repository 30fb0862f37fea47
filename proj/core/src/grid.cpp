#include "pattc/sim/grid.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "pattc/causal/compliance.hpp"
#include "pattc/causal/estimators.hpp"
#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

namespace {

double rmse_against_truth(const std::vector<double>& est,
                          const std::vector<double>& truth) {
  double ss = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double err = est[i] - truth[i];
    ss += err * err;
  }
  return std::sqrt(ss / est.size());
}

FeatureSpec sim_feature_spec() {
  FeatureSpec spec;
  spec.numeric_columns = {"w1", "w2", "w3"};
  return spec;
}

}  // namespace

SimResult run_cell(const SimParams& params, int runs, const PipelineConfig& pipeline) {
  if (runs < 1) throw ArgumentError("run count must be >= 1");
  SimResult result;
  result.e = params.e;
  result.runs_attempted = runs;
  const FeatureSpec spec = sim_feature_spec();

  double rate_c = 0, rate_t = 0, rate_s = 0;
  for (int r = 0; r < runs; ++r) {
    SimParams run_params = params;
    run_params.seed = derive_seed(params.seed, static_cast<std::uint64_t>(r));
    try {
      const Study study = generate_study(run_params);
      const Dataset rct = study.rct.to_dataset("rct");
      const Dataset obs = study.observational.to_dataset("observational");

      const ComplianceModel cmodel =
          fit_compliance_model(rct, spec, pipeline.compliance_learners,
                               pipeline.cv_folds, derive_seed(run_params.seed, 101));

      std::vector<int> control_rows;
      for (std::size_t i = 0; i < rct.n_rows(); ++i)
        if (rct.assignment[i] == Tri::No) control_rows.push_back(static_cast<int>(i));
      std::vector<int> predicted(rct.n_rows(), 0);
      if (!control_rows.empty()) {
        const std::vector<int> hats = predict_control_compliers(
            cmodel, rct.subset(control_rows), cmodel.cutpoint.threshold);
        for (std::size_t k = 0; k < control_rows.size(); ++k)
          predicted[control_rows[k]] = hats[k];
      }

      const ResponseModel rmodel =
          fit_response_model(rct, predicted, spec, pipeline.response_learners,
                             pipeline.cv_folds, derive_seed(run_params.seed, 102));

      result.pattc.push_back(estimate_pattc(rmodel, obs).estimate);
      result.patt.push_back(
          estimate_patt(rct, obs, spec, pipeline.response_learners,
                        pipeline.cv_folds, derive_seed(run_params.seed, 103))
              .estimate);
      result.cace.push_back(estimate_cace(rct).estimate);
      result.truth.push_back(true_effect(study.observational));

      rate_c += study.rate_compliance;
      rate_t += study.rate_treatment;
      rate_s += study.rate_rct;
      result.runs_ok++;
    } catch (const DegenerateRun&) {
      // recorded as a missing run
    } catch (const DataError&) {
      // single-class compliance, empty arm, ... same treatment
    } catch (const EstimationError&) {
    }
  }

  if (result.runs_ok == 0) {
    result.missing = true;
    return result;
  }
  result.rate_compliance = rate_c / result.runs_ok;
  result.rate_treatment = rate_t / result.runs_ok;
  result.rate_rct = rate_s / result.runs_ok;
  result.rmse_pattc = rmse_against_truth(result.pattc, result.truth);
  result.rmse_patt = rmse_against_truth(result.patt, result.truth);
  result.rmse_cace = rmse_against_truth(result.cace, result.truth);
  return result;
}

std::size_t GridSpec::n_cells() const {
  std::size_t n = 1;
  for (const auto& v : values) {
    if (v.empty()) throw ArgumentError("every grid parameter needs at least one value");
    n *= v.size();
  }
  return n;
}

std::array<std::vector<double>, 6> draw_grid_values(int per_param, std::uint64_t seed) {
  if (per_param < 1) throw ArgumentError("grid draws per parameter must be >= 1");
  std::array<std::vector<double>, 6> out;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& list : out)
    for (int k = 0; k < per_param; ++k) list.push_back(normal(rng));
  return out;
}

std::vector<SimResult> run_grid(const GridSpec& grid, const PipelineConfig& pipeline,
                                int threads) {
  const std::size_t n_cells = grid.n_cells();
  std::vector<SimResult> results(n_cells);

  auto run_one = [&](std::size_t cell) {
    SimParams params;
    params.population_size = grid.population_size;
    params.draw_size = grid.draw_size;
    params.seed = derive_seed(grid.seed, cell);
    std::size_t rem = cell;
    for (int p = 5; p >= 0; --p) {
      params.e[p] = grid.values[p][rem % grid.values[p].size()];
      rem /= grid.values[p].size();
    }
    results[cell] = run_cell(params, grid.runs, pipeline);
    results[cell].cell_index = static_cast<int>(cell);
  };

  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::size_t cell = 0; cell < n_cells; ++cell) run_one(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t cell = next.fetch_add(1); cell < n_cells;
             cell = next.fetch_add(1))
          run_one(cell);
      });
    for (auto& th : pool) th.join();
  }
  return results;
}

namespace {

double axis_rate(const SimResult& r, RateAxis axis) {
  switch (axis) {
    case RateAxis::compliance: return r.rate_compliance;
    case RateAxis::treatment: return r.rate_treatment;
    case RateAxis::rct_eligibility: return r.rate_rct;
  }
  return 0;
}

int rate_bin(double rate) {
  return std::min(static_cast<int>(rate * 10.0), 9);
}

}  // namespace

std::vector<RmseBin> summarize_rmse(const std::vector<SimResult>& results,
                                    RateAxis axis1, std::optional<RateAxis> axis2) {
  if (results.empty()) throw ArgumentError("no results to summarize");
  const int n2 = axis2 ? 10 : 1;
  std::vector<RmseBin> bins(10 * n2);
  for (int b1 = 0; b1 < 10; ++b1)
    for (int b2 = 0; b2 < n2; ++b2) {
      bins[b1 * n2 + b2].bin1 = b1;
      bins[b1 * n2 + b2].bin2 = axis2 ? b2 : -1;
    }
  for (const auto& r : results) {
    if (r.missing) continue;
    const int b1 = rate_bin(axis_rate(r, axis1));
    const int b2 = axis2 ? rate_bin(axis_rate(r, *axis2)) : 0;
    RmseBin& bin = bins[b1 * n2 + b2];
    bin.rmse_pattc += r.rmse_pattc;
    bin.rmse_patt += r.rmse_patt;
    bin.rmse_cace += r.rmse_cace;
    bin.n_cells++;
  }
  for (auto& bin : bins) {
    if (bin.n_cells == 0) continue;
    bin.rmse_pattc /= bin.n_cells;
    bin.rmse_patt /= bin.n_cells;
    bin.rmse_cace /= bin.n_cells;
  }
  return bins;
}

}  // namespace pattc
