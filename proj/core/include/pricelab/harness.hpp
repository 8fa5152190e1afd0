#ifndef PRICELAB_HARNESS_HPP
#define PRICELAB_HARNESS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pricelab/algorithms.hpp"
#include "pricelab/market_model.hpp"
#include "pricelab/regimes.hpp"

namespace pricelab {

// Hyperparameters shared by the learner factory. Step and perturbation
// schedules follow eta = eta0 * T^{-1/2}, eps = eps0 * T^{-1/4}.
struct LearnerParams {
  double eta0 = 1.0;
  double eps0 = 1.0;
  bool strict_clip = false;
  bool two_point = false;
  int explore_len = 0;  // EE; 0 -> overdetermined default
  int phase_len = 0;    // EE; 0 -> 10 * explore_len
  double ridge_lambda = 1.0;
  double opok_alpha = -1.0;  // < 0 -> 1/T
  double opok_mu = 1e-3;
};

struct ExperimentConfig {
  std::string name = "experiment";
  int n_products = 60;
  int n_attributes = 6;
  BlockStructure blocks;  // empty -> ring blocks spanning N and d
  RegimeSpec regime;
  MarketInitParams init;
  std::string learner = "adept";
  LearnerParams params;
  double box_radius = 5.0;   // attribute box theta_base +- r
  double ball_radius = 5.0;  // price ball around p0 = U theta_base
  // Baseline attribute prices are the wide-box static optimum of the
  // initial market state scaled by this factor (the seller starts near,
  // but not at, the optimal price sheet).
  double theta_base_scale = 0.9;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int parallelism = 4;

  void apply_defaults();  // fills blocks and regime defaults
  void validate() const;
  // Canonical serialization; its FNV-1a hash is the config digest.
  std::string canonical_string() const;
  std::string digest() const;
};

// Per-round sums sufficient for any fixed-point comparator:
// sum_t M_t and sum_t U z_t in product space.
struct TrajectorySums {
  Eigen::MatrixXd m_sum;
  Eigen::VectorXd uz_sum;
  int rounds = 0;
};

TrajectorySums accumulate_trajectory(EnvironmentTrajectory& trajectory);

// Best fixed point in hindsight and its cumulative expected revenue.
struct Comparator {
  Eigen::VectorXd prices;        // p_c (product space)
  Eigen::VectorXd theta;         // filled in attribute-box mode
  bool attribute_mode = false;
  double value = 0.0;            // sum_t R_t at the comparator point
};

// Attribute-box comparator: static_optimum on the summed quadratic.
Comparator compute_comparator(const TrajectorySums& sums,
                              const FeatureMatrix& u,
                              const AttributeBox& box);
// Price-ball comparator: projected gradient with exact ball projection.
Comparator compute_comparator(const TrajectorySums& sums,
                              const FeatureMatrix& u, const PriceBall& ball);

struct RunResult {
  std::vector<double> revenue_expected;
  std::vector<double> revenue_realized;
  std::vector<double> regret_inst;           // vs expected revenue
  std::vector<double> regret_cum;
  std::vector<double> regret_inst_realized;  // secondary, vs realized revenue
  Comparator comparator;
  double seconds_per_epoch = 0.0;  // learner propose+observe only
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string learner_snapshot;
  Eigen::VectorXd theta_base;
};

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed);

// All configured seeds, up to config.parallelism runs concurrently,
// results ordered by seed position.
std::vector<RunResult> run_all_seeds(const ExperimentConfig& config);

struct AggregateCurves {
  std::vector<double> mean;
  std::vector<double> sd;  // sample standard deviation
};

AggregateCurves aggregate_runs(const std::vector<RunResult>& results);
AggregateCurves aggregate_series(const std::vector<std::vector<double>>& series);

struct TailSlopeReport {
  double rho = 0.5;
  int t0 = 0;        // 1-based window start
  int t_end = 0;     // T
  double r_t0 = 0.0;
  double r_end = 0.0;
  double alpha_hat = 0.0;
};

// Secant slope of log R(t) between t0 = floor((1-rho)T) and T.
TailSlopeReport tail_slope(const std::vector<double>& regret_cum, double rho);

// Learner-only per-epoch wall clock at this config and seed.
double measure_runtime(const ExperimentConfig& config, std::uint64_t seed);

// --- result files ---------------------------------------------------------

// CSV: t,revenue_expected,revenue_realized,regret_inst,regret_cum,
// regret_inst_realized. 9 significant digits, LF endings.
void write_run_csv(const std::string& path, const RunResult& result);
// JSON summary: digest, seed, comparator, tail slope, timing, snapshot.
void write_run_json(const std::string& path, const RunResult& result,
                    const ExperimentConfig& config);
void write_aggregate_csv(const std::string& path, const AggregateCurves& agg);

std::string run_file_stem(const ExperimentConfig& config, std::uint64_t seed);

// The learner factory used by the harness and the bench command.
std::unique_ptr<Learner> make_learner(const std::string& id,
                                      const LearnerParams& params,
                                      const FeatureMatrix& u,
                                      const AttributeBox& box,
                                      const PriceBall& ball, int horizon);

// Baseline attribute prices: wide-box static optimum of the initial state,
// scaled. Shared by run_experiment and the interpretability command.
Eigen::VectorXd derive_theta_base(const FeatureMatrix& u,
                                  const MarketSnapshot& first,
                                  double scale);

}  // namespace pricelab

#endif
