#ifndef PRICELAB_CONFIG_HPP
#define PRICELAB_CONFIG_HPP

#include <string>
#include <vector>

#include "pricelab/afd_fit.hpp"
#include "pricelab/harness.hpp"

namespace pricelab {

// One row of the interpretability tables: a small market given literally
// (U, z, V, elasticities) plus the attribute-price box to optimize over.
struct InterpretScenario {
  std::string name;
  Eigen::MatrixXd u;
  Eigen::VectorXd z;
  Eigen::MatrixXd v;  // omitted in the file -> identity
  double alpha_self = 0.15;
  double alpha_cross = 0.15;
  Eigen::VectorXd theta_lower;
  Eigen::VectorXd theta_upper;
};

struct AfdFitConfig {
  std::string input_path;
  TableSchema schema;
  double lambda = 1.0;
  std::uint64_t split_seed = 1;
  bool decompositions = false;  // also write the per-record breakdown CSV
};

struct BenchSetting {
  int n_products = 0;
  int n_attributes = 0;
};

struct BenchConfig {
  std::vector<BenchSetting> settings;
  std::vector<std::string> learners;
  int rounds = 200;  // measured horizon per cell
  std::uint64_t seed = 1;
};

struct OutputConfig {
  std::string directory = "results";
};

// The whole config file. Sections are optional; each command checks that
// the section it needs is present.
struct CliConfig {
  ExperimentConfig experiment;
  std::vector<InterpretScenario> interpret;
  AfdFitConfig afdfit;
  BenchConfig bench;
  OutputConfig output;
  bool has_experiment = false;
  bool has_interpret = false;
  bool has_afdfit = false;
  bool has_bench = false;
};

// Parses the JSON config (comments allowed), applies --set overrides
// (dotted key paths, values parsed as JSON where possible), and validates.
// Unknown keys anywhere are fatal, reported with their dotted path.
CliConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides);

// As above from a string; used by the loader and the tests.
CliConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides);

}  // namespace pricelab

#endif
