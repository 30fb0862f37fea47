#pragma once

#include <optional>

#include "pattc/learn/learner.hpp"
#include "pattc/sim/dgp.hpp"

namespace pattc {

// Learner roster applied inside each simulation run.  The default mirrors the
// simulation-study pipeline: a single gradient-boosting candidate for both
// the compliance and the response model.
struct PipelineConfig {
  std::vector<LearnerSpec> compliance_learners{
      LearnerSpec::make_gbt(Family::binomial, 100, 2, 0.1)};
  std::vector<LearnerSpec> response_learners{
      LearnerSpec::make_gbt(Family::gaussian, 100, 3, 0.1)};
  int cv_folds = 5;
};

struct SimResult {
  int cell_index = 0;
  std::array<double, 6> e{};
  int runs_attempted = 0;
  int runs_ok = 0;
  bool missing = false;  // every run degenerate

  std::vector<double> pattc, patt, cace, truth;  // per successful run
  double rmse_pattc = 0, rmse_patt = 0, rmse_cace = 0;
  double rate_compliance = 0, rate_treatment = 0, rate_rct = 0;  // run averages
};

SimResult run_cell(const SimParams& params, int runs, const PipelineConfig& pipeline);

struct GridSpec {
  std::array<std::vector<double>, 6> values;  // e1..e6 value lists
  int runs = 10;
  std::uint64_t seed = 0;
  int population_size = 30000;
  int draw_size = 5000;

  std::size_t n_cells() const;
};

// Draws per_param standard-normal grid values for every e-parameter.
std::array<std::vector<double>, 6> draw_grid_values(int per_param, std::uint64_t seed);

// Cartesian product over the value lists; cells execute independently (up to
// `threads` in parallel) with per-cell seeds derived from (seed, cell index),
// so parallel and serial runs produce identical results.
std::vector<SimResult> run_grid(const GridSpec& grid, const PipelineConfig& pipeline,
                                int threads);

enum class RateAxis { compliance, treatment, rct_eligibility };

struct RmseBin {
  int bin1 = 0;            // 10-point bin index, 0..9
  int bin2 = -1;           // second axis, or -1 for one-dimensional binning
  int n_cells = 0;         // 0 marks a missing (white) tile
  double rmse_pattc = 0, rmse_patt = 0, rmse_cace = 0;
};

// Average RMSE per estimator per 10-point rate bin.
std::vector<RmseBin> summarize_rmse(const std::vector<SimResult>& results,
                                    RateAxis axis1,
                                    std::optional<RateAxis> axis2 = std::nullopt);

}  // namespace pattc
