#include "pattc/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "pattc/util/csv.hpp"
#include "pattc/util/error.hpp"

namespace pattc {

int Dataset::covariate_index(const std::string& name) const {
  for (std::size_t j = 0; j < covariate_names.size(); ++j)
    if (covariate_names[j] == name) return static_cast<int>(j);
  return -1;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.covariate_names = covariate_names;
  out.cluster_labels = cluster_labels;
  out.provenance = provenance;
  out.covariates.resize(covariates.size());
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    out.covariates[j].reserve(rows.size());
    for (int i : rows) out.covariates[j].push_back(covariates[j][i]);
  }
  auto pick = [&rows](const auto& src, auto& dst) {
    dst.reserve(rows.size());
    for (int i : rows) dst.push_back(src[i]);
  };
  pick(sample, out.sample);
  pick(assignment, out.assignment);
  pick(receipt, out.receipt);
  pick(compliance, out.compliance);
  pick(outcome, out.outcome);
  pick(weight, out.weight);
  pick(cluster, out.cluster);
  pick(defier, out.defier);
  return out;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool is_na(const std::string& s) { return s.empty() || s == "NA"; }

}  // namespace

Dataset load_table(const std::string& path, const FeatureSpec& spec,
                   const std::string& provenance, char delim,
                   LoadReport* report) {
  const csv::Table table = csv::read_file(path, delim);
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep.rows_read = table.rows.size();

  auto require = [&table](const std::string& name) {
    int j = table.column(name);
    if (j < 0) throw SchemaError("missing required column: " + name);
    return j;
  };
  const int yj = require(spec.outcome_col);
  const int dj = require(spec.receipt_col);
  const int tj = table.column(spec.assign_col);
  const int cj = table.column(spec.compliance_col);
  const int sj = table.column(spec.sample_col);
  const int wj = table.column(spec.weight_col);
  const int clj = table.column(spec.cluster_col);

  std::vector<std::string> cov_cols = spec.numeric_columns;
  cov_cols.insert(cov_cols.end(), spec.categorical_columns.begin(),
                  spec.categorical_columns.end());
  std::vector<int> cov_idx;
  for (const auto& name : cov_cols) cov_idx.push_back(require(name));

  Dataset out;
  out.provenance = provenance;
  out.covariate_names = cov_cols;
  out.covariates.resize(cov_cols.size());
  const std::int8_t default_sample = (provenance == "rct") ? 1 : 0;
  std::map<std::string, int> cluster_codes;

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) {
      rep.rows_dropped++;
      rep.messages.push_back("row " + std::to_string(i + 1) + ": field count mismatch");
      continue;
    }
    std::vector<double> covs(cov_idx.size());
    double y = 0, w = 1;
    bool ok = true;
    for (std::size_t k = 0; k < cov_idx.size() && ok; ++k)
      ok = parse_double(row[cov_idx[k]], covs[k]);
    ok = ok && parse_double(row[yj], y);
    if (ok && wj >= 0) ok = parse_double(row[wj], w) && w > 0;
    double dval = 0;
    ok = ok && parse_double(row[dj], dval) && (dval == 0 || dval == 1);
    Tri t = Tri::Unknown, c = Tri::Unknown;
    if (tj >= 0 && !is_na(row[tj])) {
      double tv;
      ok = ok && parse_double(row[tj], tv) && (tv == 0 || tv == 1);
      if (ok) t = tri_of(tv == 1);
    }
    if (cj >= 0 && !is_na(row[cj])) {
      double cv;
      ok = ok && parse_double(row[cj], cv) && (cv == 0 || cv == 1);
      if (ok) c = tri_of(cv == 1);
    }
    std::int8_t s = default_sample;
    if (sj >= 0) {
      double sv;
      ok = ok && parse_double(row[sj], sv) && (sv == 0 || sv == 1);
      if (ok) s = static_cast<std::int8_t>(sv);
    }
    if (!ok) {
      rep.rows_dropped++;
      rep.messages.push_back("row " + std::to_string(i + 1) + ": type coercion failed");
      continue;
    }
    // Compliance is unobservable for RCT controls regardless of the file.
    if (s == 1 && t == Tri::No) c = Tri::Unknown;

    int cluster_code;
    if (clj >= 0) {
      auto [it, inserted] =
          cluster_codes.emplace(row[clj], static_cast<int>(out.cluster_labels.size()));
      if (inserted) out.cluster_labels.push_back(row[clj]);
      cluster_code = it->second;
    } else {
      cluster_code = static_cast<int>(out.cluster_labels.size());
      out.cluster_labels.push_back(std::to_string(cluster_code));
    }

    const bool defier = (s == 1 && t == Tri::No && dval == 1);
    if (defier) rep.defiers_flagged++;

    for (std::size_t k = 0; k < covs.size(); ++k) out.covariates[k].push_back(covs[k]);
    out.sample.push_back(s);
    out.assignment.push_back(t);
    out.receipt.push_back(static_cast<std::int8_t>(dval));
    out.compliance.push_back(c);
    out.outcome.push_back(y);
    out.weight.push_back(w);
    out.cluster.push_back(cluster_code);
    out.defier.push_back(defier ? 1 : 0);
  }
  rep.rows_kept = out.n_rows();
  return out;
}

void write_table(const std::string& path, const Dataset& data, char delim) {
  csv::Table t;
  t.header = data.covariate_names;
  t.header.insert(t.header.end(), {"s", "t", "d", "c", "y", "weight", "cluster"});
  t.rows.reserve(data.n_rows());
  auto tri_str = [](Tri v) {
    return v == Tri::Unknown ? std::string("NA")
                             : std::to_string(static_cast<int>(v));
  };
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(t.header.size());
    for (const auto& col : data.covariates) row.push_back(csv::format_double(col[i]));
    row.push_back(std::to_string(static_cast<int>(data.sample[i])));
    row.push_back(tri_str(data.assignment[i]));
    row.push_back(std::to_string(static_cast<int>(data.receipt[i])));
    row.push_back(tri_str(data.compliance[i]));
    row.push_back(csv::format_double(data.outcome[i]));
    row.push_back(csv::format_double(data.weight[i]));
    row.push_back(data.cluster_labels[data.cluster[i]]);
    t.rows.push_back(std::move(row));
  }
  csv::write_file(path, t, delim);
}

Dataset rescale_outcome(const Dataset& data, double factor) {
  if (!(factor > 0)) throw ArgumentError("rescale factor must be positive");
  Dataset out = data;
  for (double& y : out.outcome) y *= factor;
  return out;
}

DesignMatrix build_design_matrix(const Dataset& data, const FeatureSpec& spec) {
  const std::size_t n = data.n_rows();
  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;

  for (const auto& name : spec.numeric_columns) {
    int j = data.covariate_index(name);
    if (j < 0) throw ArgumentError("design spec references missing column: " + name);
    cols.push_back(data.covariates[j]);
    names.push_back(name);
  }
  for (const auto& name : spec.categorical_columns) {
    int j = data.covariate_index(name);
    if (j < 0) throw ArgumentError("design spec references missing column: " + name);
    std::set<std::string> level_set;
    for (double v : data.covariates[j]) level_set.insert(csv::format_double(v));
    std::vector<std::string> levels(level_set.begin(), level_set.end());
    std::sort(levels.begin(), levels.end());
    // lexicographically first level is the reference
    for (std::size_t l = 1; l < levels.size(); ++l) {
      std::vector<double> dummy(n);
      for (std::size_t i = 0; i < n; ++i)
        dummy[i] = csv::format_double(data.covariates[j][i]) == levels[l] ? 1.0 : 0.0;
      cols.push_back(std::move(dummy));
      names.push_back(name + "=" + levels[l]);
    }
  }
  auto encoded_index = [&names](const std::string& name) {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<int>(j);
    return -1;
  };
  const std::size_t n_base = cols.size();
  for (const auto& [a, b] : spec.interactions) {
    int ja = encoded_index(a), jb = encoded_index(b);
    if (ja < 0 || jb < 0 || static_cast<std::size_t>(ja) >= n_base ||
        static_cast<std::size_t>(jb) >= n_base)
      throw ArgumentError("interaction references missing encoded column: " + a + ":" + b);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = cols[ja][i] * cols[jb][i];
    cols.push_back(std::move(prod));
    names.push_back(a + ":" + b);
  }

  DesignMatrix out;
  out.names = std::move(names);
  out.X.resize(n, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) out.X(i, j) = cols[j][i];
  return out;
}

}  // namespace pattc
