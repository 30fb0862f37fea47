#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pattc {

// Tri-state for fields whose observability is asymmetric: treatment
// assignment is unobserved for population rows and compliance is unobserved
// outside the RCT treated arm.
enum class Tri : std::int8_t { No = 0, Yes = 1, Unknown = -1 };

inline bool known(Tri t) { return t != Tri::Unknown; }
inline Tri tri_of(bool b) { return b ? Tri::Yes : Tri::No; }

// Column roles plus feature-construction rules for one input table.
struct FeatureSpec {
  std::vector<std::string> numeric_columns;
  std::vector<std::string> categorical_columns;
  // Pairs of *encoded* column names (e.g. {"wave=2", "hhsize=2"}); each pair
  // contributes one elementwise-product column.
  std::vector<std::pair<std::string, std::string>> interactions;
  double outcome_rescale = 1.0;

  std::string outcome_col = "y";
  std::string receipt_col = "d";
  std::string assign_col = "t";        // optional in the file
  std::string compliance_col = "c";    // optional in the file
  std::string sample_col = "s";        // optional; provenance fills it in
  std::string weight_col = "weight";   // optional; defaults to 1
  std::string cluster_col = "cluster"; // optional; each row its own cluster
};

// Column-oriented study table.  Immutable by convention after load; every
// transforming operation returns a new Dataset.
struct Dataset {
  std::vector<std::string> covariate_names;
  std::vector<std::vector<double>> covariates;  // covariates[col][row]
  std::vector<std::int8_t> sample;              // S: 1 = RCT, 0 = population
  std::vector<Tri> assignment;                  // T
  std::vector<std::int8_t> receipt;             // D
  std::vector<Tri> compliance;                  // C
  std::vector<double> outcome;                  // Y
  std::vector<double> weight;
  std::vector<int> cluster;                     // codes into cluster_labels
  std::vector<std::string> cluster_labels;
  std::vector<std::uint8_t> defier;             // S=1, T=0, D=1 rows, flagged not dropped
  std::string provenance;                       // "rct" | "observational"

  std::size_t n_rows() const { return outcome.size(); }
  std::size_t n_covariates() const { return covariate_names.size(); }
  int covariate_index(const std::string& name) const;  // -1 if absent
  Dataset subset(const std::vector<int>& rows) const;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped = 0;   // type-coercion or nonpositive-weight failures
  std::size_t defiers_flagged = 0;
  std::vector<std::string> messages;
};

Dataset load_table(const std::string& path, const FeatureSpec& spec,
                   const std::string& provenance, char delim = ',',
                   LoadReport* report = nullptr);

void write_table(const std::string& path, const Dataset& data, char delim = ',');

// Returns a copy with every outcome multiplied by factor (> 0).
Dataset rescale_outcome(const Dataset& data, double factor);

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
};

// Encodes covariates into a numeric design matrix: numeric columns first (in
// spec order), then dummies for each categorical level above the
// lexicographically first, then interaction products.  Deterministic.
DesignMatrix build_design_matrix(const Dataset& data, const FeatureSpec& spec);

}  // namespace pattc
