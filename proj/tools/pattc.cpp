// Batch entry point: binds a JSON config to the estimation, simulation,
// placebo, and diagnostics pipelines and writes CSV result tables plus a
// JSON run manifest.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "pattc/causal/compliance.hpp"
#include "pattc/causal/estimators.hpp"
#include "pattc/infer/inference.hpp"
#include "pattc/sim/grid.hpp"
#include "pattc/util/csv.hpp"
#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pattc;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Context {
  json config;
  fs::path config_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool verbose = false;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : config_dir / path;
  }
  void log(const std::string& msg) const {
    if (verbose) std::cerr << msg << "\n";
  }
};

FeatureSpec parse_features(const json& j) {
  FeatureSpec spec;
  if (j.contains("numeric")) spec.numeric_columns = j["numeric"].get<std::vector<std::string>>();
  if (j.contains("categorical"))
    spec.categorical_columns = j["categorical"].get<std::vector<std::string>>();
  if (j.contains("interactions"))
    for (const auto& pair : j["interactions"])
      spec.interactions.emplace_back(pair.at(0).get<std::string>(),
                                     pair.at(1).get<std::string>());
  spec.outcome_rescale = j.value("outcome_rescale", 1.0);
  if (j.contains("columns")) {
    const auto& c = j["columns"];
    spec.outcome_col = c.value("outcome", spec.outcome_col);
    spec.receipt_col = c.value("receipt", spec.receipt_col);
    spec.assign_col = c.value("assignment", spec.assign_col);
    spec.compliance_col = c.value("compliance", spec.compliance_col);
    spec.sample_col = c.value("sample", spec.sample_col);
    spec.weight_col = c.value("weight", spec.weight_col);
    spec.cluster_col = c.value("cluster", spec.cluster_col);
  }
  return spec;
}

std::vector<LearnerSpec> parse_learners(const json& j) {
  std::vector<LearnerSpec> out;
  for (const auto& l : j) {
    const std::string kind = l.at("kind").get<std::string>();
    if (kind == "gbt") {
      out.push_back(LearnerSpec::make_gbt(Family::gaussian, l.value("trees", 100),
                                          l.value("depth", 3), l.value("rate", 0.1)));
    } else if (kind == "elastic_net") {
      out.push_back(LearnerSpec::make_elastic_net(
          Family::gaussian, l.value("alpha", 1.0), l.value("lambda", -1.0)));
    } else if (kind == "random_forest") {
      auto s = LearnerSpec::make_random_forest(Family::gaussian, l.value("trees", 200),
                                               l.value("preds", 1));
      s.min_leaf = l.value("min_leaf", 5);
      out.push_back(s);
    } else if (kind == "poly_ridge") {
      out.push_back(LearnerSpec::make_poly_ridge(Family::gaussian, l.value("degree", 2),
                                                 l.value("lambda", 1e-3)));
    } else {
      throw ArgumentError("unknown learner kind in config: " + kind);
    }
  }
  if (out.empty()) throw ArgumentError("learner roster is empty");
  return out;
}

BootstrapPlan parse_bootstrap(const json& j, std::uint64_t seed) {
  BootstrapPlan plan;
  plan.replicates = j.value("replicates", 1000);
  plan.level = j.value("level", 0.95);
  plan.seed = derive_seed(seed, 0xb001);
  return plan;
}

void write_manifest(const Context& ctx, const std::string& command, json extra) {
  extra["command"] = command;
  extra["seed"] = ctx.seed;
  extra["threads"] = ctx.threads;
  extra["version"] = kVersion;
  extra["config"] = ctx.config;
  std::ofstream out(ctx.out_dir / "manifest.json");
  out << extra.dump(2) << "\n";
}

void write_cv_report(const fs::path& path, const CVReport& report) {
  csv::Table t;
  t.header = {"algorithm", "mean_mse", "se", "min", "max", "weight"};
  for (const auto& row : report.rows)
    t.rows.push_back({row.label, csv::format_double(row.mean_mse),
                      csv::format_double(row.se), csv::format_double(row.min),
                      csv::format_double(row.max), csv::format_double(row.weight)});
  csv::write_file(path.string(), t);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Context& ctx) {
  const json& sim = ctx.config.at("simulate");
  std::vector<std::string> violations;
  if (!sim.contains("grid")) violations.push_back("simulate.grid missing");
  if (sim.value("runs", 10) < 1) violations.push_back("simulate.runs must be >= 1");
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "config error: " << v << "\n";
    return 1;
  }

  GridSpec grid;
  grid.runs = sim.value("runs", 10);
  grid.seed = ctx.seed;
  grid.population_size = sim.value("population_size", 30000);
  grid.draw_size = sim.value("draw_size", 5000);
  const json& g = sim.at("grid");
  if (g.contains("draws_per_param")) {
    grid.values = draw_grid_values(g["draws_per_param"].get<int>(),
                                   derive_seed(ctx.seed, 0x6e1d));
  } else {
    const char* keys[6] = {"e1", "e2", "e3", "e4", "e5", "e6"};
    for (int p = 0; p < 6; ++p)
      grid.values[p] = g.at(keys[p]).get<std::vector<double>>();
  }

  PipelineConfig pipeline;
  if (sim.contains("pipeline")) {
    const json& pl = sim["pipeline"];
    pipeline.cv_folds = pl.value("cv_folds", 5);
    if (pl.contains("compliance_learners"))
      pipeline.compliance_learners = parse_learners(pl["compliance_learners"]);
    if (pl.contains("response_learners"))
      pipeline.response_learners = parse_learners(pl["response_learners"]);
  }

  ctx.log("running " + std::to_string(grid.n_cells()) + " grid cells");
  const std::vector<SimResult> results = run_grid(grid, pipeline, ctx.threads);

  csv::Table cells;
  cells.header = {"cell", "e1", "e2", "e3", "e4", "e5", "e6",
                  "runs_ok", "runs_attempted", "rate_compliance",
                  "rate_treatment", "rate_rct", "estimator", "rmse"};
  for (const auto& r : results) {
    const std::array<std::pair<const char*, double>, 3> rows = {
        {{"PATT-C", r.rmse_pattc}, {"PATT", r.rmse_patt}, {"CACE", r.rmse_cace}}};
    for (const auto& [name, rmse] : rows) {
      std::vector<std::string> row = {
          std::to_string(r.cell_index),
          csv::format_double(r.e[0]), csv::format_double(r.e[1]),
          csv::format_double(r.e[2]), csv::format_double(r.e[3]),
          csv::format_double(r.e[4]), csv::format_double(r.e[5]),
          std::to_string(r.runs_ok), std::to_string(r.runs_attempted)};
      if (r.missing) {
        row.insert(row.end(), {"NA", "NA", "NA", name, "NA"});
      } else {
        row.insert(row.end(), {csv::format_double(r.rate_compliance),
                               csv::format_double(r.rate_treatment),
                               csv::format_double(r.rate_rct), name,
                               csv::format_double(rmse)});
      }
      cells.rows.push_back(std::move(row));
    }
  }
  csv::write_file((ctx.out_dir / "cells.csv").string(), cells);

  csv::Table bins;
  bins.header = {"axis1", "axis2", "bin1", "bin2", "estimator", "avg_rmse", "n_cells"};
  auto axis_name = [](RateAxis a) {
    switch (a) {
      case RateAxis::compliance: return "compliance";
      case RateAxis::treatment: return "treatment";
      case RateAxis::rct_eligibility: return "rct_eligibility";
    }
    return "";
  };
  auto emit = [&](RateAxis a1, std::optional<RateAxis> a2) {
    for (const auto& bin : summarize_rmse(results, a1, a2)) {
      const std::array<std::pair<const char*, double>, 3> est = {
          {{"PATT-C", bin.rmse_pattc}, {"PATT", bin.rmse_patt}, {"CACE", bin.rmse_cace}}};
      for (const auto& [name, rmse] : est)
        bins.rows.push_back({axis_name(a1), a2 ? axis_name(*a2) : "NA",
                             std::to_string(bin.bin1),
                             bin.bin2 >= 0 ? std::to_string(bin.bin2) : "NA", name,
                             bin.n_cells ? csv::format_double(rmse) : "NA",
                             std::to_string(bin.n_cells)});
    }
  };
  emit(RateAxis::compliance, std::nullopt);
  emit(RateAxis::treatment, std::nullopt);
  emit(RateAxis::rct_eligibility, std::nullopt);
  emit(RateAxis::compliance, RateAxis::rct_eligibility);
  emit(RateAxis::compliance, RateAxis::treatment);
  csv::write_file((ctx.out_dir / "bins.csv").string(), bins);

  double sum_pattc = 0, sum_patt = 0, sum_cace = 0;
  int n_ok = 0;
  for (const auto& r : results)
    if (!r.missing) {
      sum_pattc += r.rmse_pattc;
      sum_patt += r.rmse_patt;
      sum_cace += r.rmse_cace;
      n_ok++;
    }
  json manifest;
  manifest["grid"] = {{"runs", grid.runs},
                      {"population_size", grid.population_size},
                      {"draw_size", grid.draw_size},
                      {"cells", results.size()},
                      {"cells_ok", n_ok}};
  const char* keys[6] = {"e1", "e2", "e3", "e4", "e5", "e6"};
  for (int p = 0; p < 6; ++p) manifest["grid"]["values"][keys[p]] = grid.values[p];
  if (n_ok > 0)
    manifest["grand_mean_rmse"] = {{"PATT-C", sum_pattc / n_ok},
                                   {"PATT", sum_patt / n_ok},
                                   {"CACE", sum_cace / n_ok}};
  write_manifest(ctx, "simulate", manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct EstimateInputs {
  Dataset rct, obs;
  FeatureSpec features;
  std::vector<LearnerSpec> learners;
  int cv_folds = 10;
  bool weighted_fitting = true;
  BootstrapPlan bootstrap;
};

EstimateInputs load_estimate_inputs(const Context& ctx, const json& section) {
  EstimateInputs in;
  in.features = parse_features(section.at("features"));
  const char delim = section.value("delimiter", std::string(",")).at(0);
  LoadReport rct_report, obs_report;
  in.rct = load_table(ctx.resolve(section.at("rct_file").get<std::string>()).string(),
                      in.features, "rct", delim, &rct_report);
  in.obs = load_table(
      ctx.resolve(section.at("observational_file").get<std::string>()).string(),
      in.features, "observational", delim, &obs_report);
  ctx.log("rct rows: " + std::to_string(rct_report.rows_kept) + " (dropped " +
          std::to_string(rct_report.rows_dropped) + ", defiers " +
          std::to_string(rct_report.defiers_flagged) + ")");
  ctx.log("observational rows: " + std::to_string(obs_report.rows_kept));
  if (in.features.outcome_rescale != 1.0)
    in.obs = rescale_outcome(in.obs, in.features.outcome_rescale);
  in.learners = section.contains("learners")
                    ? parse_learners(section["learners"])
                    : std::vector<LearnerSpec>{
                          LearnerSpec::make_gbt(Family::gaussian, 100, 3, 0.1)};
  in.cv_folds = section.value("cv_folds", 10);
  in.weighted_fitting = section.value("weighted_fitting", true);
  in.bootstrap = parse_bootstrap(section.value("bootstrap", json::object()), ctx.seed);
  return in;
}

Dataset fitting_view(const Dataset& data, bool weighted) {
  if (weighted) return data;
  Dataset copy = data;
  std::fill(copy.weight.begin(), copy.weight.end(), 1.0);
  return copy;
}

int cmd_estimate(const Context& ctx) {
  EstimateInputs in = load_estimate_inputs(ctx, ctx.config.at("estimate"));

  bool any_pop_treated = false;
  for (auto d : in.obs.receipt) any_pop_treated |= d == 1;
  if (!any_pop_treated)
    throw DataError("observational file has no treated rows (D = 1)");

  const Dataset rct_fit = fitting_view(in.rct, in.weighted_fitting);

  const ComplianceModel cmodel = fit_compliance_model(
      rct_fit, in.features, in.learners, in.cv_folds, derive_seed(ctx.seed, 1));

  std::vector<int> control_rows;
  for (std::size_t i = 0; i < in.rct.n_rows(); ++i)
    if (in.rct.sample[i] == 1 && in.rct.assignment[i] == Tri::No && !in.rct.defier[i])
      control_rows.push_back(static_cast<int>(i));
  std::vector<int> predicted(in.rct.n_rows(), 0);
  if (!control_rows.empty()) {
    const auto hats = predict_control_compliers(cmodel, in.rct.subset(control_rows),
                                                cmodel.cutpoint.threshold);
    for (std::size_t k = 0; k < control_rows.size(); ++k)
      predicted[control_rows[k]] = hats[k];
  }

  const ResponseModel rmodel =
      fit_response_model(rct_fit, predicted, in.features, in.learners, in.cv_folds,
                         derive_seed(ctx.seed, 2));

  const ResponseModel patt_model = fit_patt_response_model(
      rct_fit, in.features, in.learners, in.cv_folds, derive_seed(ctx.seed, 3));

  std::vector<EstimateReport> reports;
  reports.push_back(estimate_itt(in.rct));
  reports.push_back(estimate_cace(in.rct));
  reports.push_back(estimate_pattc(rmodel, in.obs));
  reports.push_back(estimate_patt(patt_model, in.obs));

  // CIs: RCT-side cluster bootstrap for ITT/CACE; population-side cluster
  // bootstrap with the fitted response surface held fixed for PATT-C/PATT.
  auto attach_ci = [&](EstimateReport& rep,
                       const std::function<double(const Dataset&)>& stat,
                       const Dataset& data) {
    BootstrapPlan plan = in.bootstrap;
    plan.seed = derive_seed(in.bootstrap.seed, std::hash<std::string>{}(rep.estimator));
    const BootstrapResult b = cluster_bootstrap(stat, data, plan);
    rep.ci_low = b.ci_low;
    rep.ci_high = b.ci_high;
  };
  attach_ci(reports[0], [](const Dataset& d) { return estimate_itt(d).estimate; }, in.rct);
  attach_ci(reports[1], [](const Dataset& d) { return estimate_cace(d).estimate; }, in.rct);
  attach_ci(reports[2],
            [&](const Dataset& d) { return estimate_pattc(rmodel, d).estimate; }, in.obs);
  attach_ci(reports[3],
            [&](const Dataset& d) { return estimate_patt(patt_model, d).estimate; },
            in.obs);

  const json& section = ctx.config.at("estimate");
  if (section.contains("subgroups"))
    for (const auto& col : section["subgroups"])
      for (auto& rep : subgroup_effects(rmodel, in.obs, col.get<std::string>()))
        reports.push_back(rep);

  csv::Table est;
  est.header = {"estimator", "subgroup", "estimate", "ci_low", "ci_high"};
  for (const auto& rep : reports)
    est.rows.push_back({rep.estimator, rep.subgroup.empty() ? "overall" : rep.subgroup,
                        csv::format_double(rep.estimate),
                        rep.ci_low ? csv::format_double(*rep.ci_low) : "NA",
                        rep.ci_high ? csv::format_double(*rep.ci_high) : "NA"});
  csv::write_file((ctx.out_dir / "estimates.csv").string(), est);

  write_cv_report(ctx.out_dir / "compliance_cv.csv", cmodel.ensemble.cv_report);
  write_cv_report(ctx.out_dir / "response_cv.csv", rmodel.ensemble.cv_report);

  csv::Table cut;
  cut.header = {"threshold", "tpr", "tnr", "distance", "accuracy", "cv_accuracy"};
  cut.rows.push_back({csv::format_double(cmodel.cutpoint.threshold),
                      csv::format_double(cmodel.cutpoint.tpr),
                      csv::format_double(cmodel.cutpoint.tnr),
                      csv::format_double(cmodel.cutpoint.distance),
                      csv::format_double(cmodel.diagnostics.accuracy),
                      csv::format_double(cmodel.diagnostics.cv_accuracy)});
  csv::write_file((ctx.out_dir / "cutpoint.csv").string(), cut);

  // predicted counterfactuals for the treated population rows (placebo input)
  std::vector<int> treated_pop;
  for (std::size_t i = 0; i < in.obs.n_rows(); ++i)
    if (in.obs.receipt[i] == 1) treated_pop.push_back(static_cast<int>(i));
  const Dataset pop_treated = in.obs.subset(treated_pop);
  const Eigen::VectorXd y11 = rmodel.predict_counterfactual(pop_treated, 1);
  const Eigen::VectorXd y10 = rmodel.predict_counterfactual(pop_treated, 0);
  csv::Table cf;
  cf.header = {"row", "y11_hat", "y10_hat", "weight"};
  for (std::size_t k = 0; k < treated_pop.size(); ++k)
    cf.rows.push_back({std::to_string(treated_pop[k]), csv::format_double(y11(k)),
                       csv::format_double(y10(k)),
                       csv::format_double(pop_treated.weight[k])});
  csv::write_file((ctx.out_dir / "counterfactuals.csv").string(), cf);

  write_manifest(ctx, "estimate",
                 json{{"rct_rows", in.rct.n_rows()}, {"obs_rows", in.obs.n_rows()}});
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_placebo(const Context& ctx) {
  const json& section = ctx.config.at("placebo");
  FeatureSpec features = parse_features(section.at("features"));
  const char delim = section.value("delimiter", std::string(",")).at(0);
  const Dataset rct =
      load_table(ctx.resolve(section.at("rct_file").get<std::string>()).string(),
                 features, "rct", delim);

  const fs::path cf_path =
      ctx.resolve(section.at("counterfactuals_file").get<std::string>());
  if (!fs::exists(cf_path))
    throw DataError("missing predicted counterfactuals (run estimate first): " +
                    cf_path.string());
  const csv::Table cf = csv::read_file(cf_path.string());
  const int y11_col = cf.column("y11_hat");
  const int w_col = cf.column("weight");
  if (y11_col < 0 || w_col < 0)
    throw SchemaError("counterfactuals file needs y11_hat and weight columns");
  Eigen::VectorXd y11(cf.rows.size()), w(cf.rows.size());
  for (std::size_t i = 0; i < cf.rows.size(); ++i) {
    y11(i) = std::stod(cf.rows[i][y11_col]);
    w(i) = std::stod(cf.rows[i][w_col]);
  }

  const BootstrapPlan plan =
      parse_bootstrap(section.value("bootstrap", json::object()), ctx.seed);
  const PlaceboReport report = placebo_test(rct, y11, w, plan);

  csv::Table t;
  t.header = {"rct_complier_mean", "adjusted_population_mean", "difference", "p_value"};
  t.rows.push_back({csv::format_double(report.rct_mean),
                    csv::format_double(report.pop_mean),
                    csv::format_double(report.difference),
                    csv::format_double(report.p_value)});
  csv::write_file((ctx.out_dir / "placebo.csv").string(), t);
  write_manifest(ctx, "placebo", {});
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_diagnose(const Context& ctx) {
  const json& section = ctx.config.at("diagnose");
  FeatureSpec features = parse_features(section.at("features"));
  const char delim = section.value("delimiter", std::string(",")).at(0);
  const Dataset rct =
      load_table(ctx.resolve(section.at("rct_file").get<std::string>()).string(),
                 features, "rct", delim);

  const std::vector<LearnerSpec> learners =
      section.contains("learners") ? parse_learners(section["learners"])
                                   : std::vector<LearnerSpec>{LearnerSpec::make_gbt(
                                         Family::binomial, 100, 2, 0.1)};
  const ComplianceModel cmodel =
      fit_compliance_model(rct, features, learners, section.value("cv_folds", 10),
                           derive_seed(ctx.seed, 1));

  csv::Table diag;
  diag.header = {"accuracy", "cv_accuracy", "tpr", "tnr", "threshold"};
  diag.rows.push_back({csv::format_double(cmodel.diagnostics.accuracy),
                       csv::format_double(cmodel.diagnostics.cv_accuracy),
                       csv::format_double(cmodel.diagnostics.tpr),
                       csv::format_double(cmodel.diagnostics.tnr),
                       csv::format_double(cmodel.diagnostics.threshold)});
  csv::write_file((ctx.out_dir / "diagnostics.csv").string(), diag);

  const DefierCensus census = defier_census(rct);
  csv::Table cen;
  cen.header = {"assignment", "d0", "d1", "total"};
  for (int t = 0; t < 2; ++t)
    cen.rows.push_back({std::to_string(t), std::to_string(census.counts[t][0]),
                        std::to_string(census.counts[t][1]),
                        std::to_string(census.counts[t][0] + census.counts[t][1])});
  cen.rows.push_back({"total",
                      std::to_string(census.counts[0][0] + census.counts[1][0]),
                      std::to_string(census.counts[0][1] + census.counts[1][1]),
                      std::to_string(census.total)});
  csv::write_file((ctx.out_dir / "defier_census.csv").string(), cen);

  csv::Table mult;
  mult.header = {"pr_defier", "pr_complier", "bias_multiplier"};
  mult.rows.push_back({csv::format_double(census.pr_defier),
                       csv::format_double(census.pr_complier),
                       csv::format_double(census.bias_multiplier)});
  csv::write_file((ctx.out_dir / "defier_multiplier.csv").string(), mult);

  write_manifest(ctx, "diagnose", {});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PATT-C estimation and simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_override, "output directory (overrides config)");
  app.add_option("--threads", threads, "worker thread cap");
  app.add_flag("--verbose", verbose, "log progress to stderr");

  auto* sim = app.add_subcommand("simulate", "run the estimator-comparison grid");
  auto* est = app.add_subcommand("estimate", "run the full estimation pipeline");
  auto* pla = app.add_subcommand("placebo", "equivalence placebo test");
  auto* dia = app.add_subcommand("diagnose", "compliance diagnostics and defier census");

  CLI11_PARSE(app, argc, argv);

  try {
    Context ctx;
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open config: " << config_path << "\n";
      return 1;
    }
    ctx.config = json::parse(in);
    ctx.config_dir = fs::absolute(fs::path(config_path)).parent_path();
    if (!ctx.config.contains("seed")) {
      std::cerr << "config error: a base seed is mandatory\n";
      return 1;
    }
    ctx.seed = ctx.config["seed"].get<std::uint64_t>();
    const std::string out_dir =
        !out_override.empty() ? out_override
                              : ctx.config.value("output_dir", std::string("out"));
    ctx.out_dir = fs::path(out_dir).is_absolute() ? fs::path(out_dir)
                                                  : ctx.config_dir / out_dir;
    fs::create_directories(ctx.out_dir);
    ctx.threads = threads > 0 ? threads : ctx.config.value("threads", 1);
    ctx.verbose = verbose;

    if (sim->parsed()) return cmd_simulate(ctx);
    if (est->parsed()) return cmd_estimate(ctx);
    if (pla->parsed()) return cmd_placebo(ctx);
    if (dia->parsed()) return cmd_diagnose(ctx);
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
