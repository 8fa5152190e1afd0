#include "pricelab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace pricelab {

using nlohmann::json;

void ExperimentConfig::apply_defaults() {
  if (blocks.attribute_sets.empty()) {
    const int n_blocks = n_attributes;
    if (n_blocks < 1 || n_products % n_blocks != 0)
      throw ConfigError(
          "ExperimentConfig: cannot derive default blocks; N must be a "
          "multiple of d (or give an explicit block structure)");
    blocks = BlockStructure::ring(n_blocks, n_products / n_blocks,
                                  n_attributes, std::min(3, n_attributes),
                                  0.5, 2);
  }
  regime.apply_defaults();
}

void ExperimentConfig::validate() const {
  if (n_products < 1 || n_attributes < 1)
    throw ConfigError("ExperimentConfig: N and d must be >= 1");
  blocks.validate(n_products, n_attributes);
  regime.validate();
  if (seeds.empty()) throw ConfigError("ExperimentConfig: seeds are empty");
  if (box_radius <= 0 || ball_radius <= 0)
    throw ConfigError("ExperimentConfig: box and ball radii must be > 0");
  if (learner != "adept" && learner != "gdg" && learner != "ee" &&
      learner != "opok" && learner != "noop")
    throw ConfigError("ExperimentConfig: unknown learner '" + learner + "'");
  if (parallelism < 1)
    throw ConfigError("ExperimentConfig: parallelism must be >= 1");
}

std::string ExperimentConfig::canonical_string() const {
  std::ostringstream os;
  os << "name=" << name << ";N=" << n_products << ";d=" << n_attributes
     << ";learner=" << learner << ";regime=" << to_string(regime.kind)
     << ";T=" << regime.horizon << ";sigma2=" << format_g9(regime.noise_variance)
     << ";shocks=";
  for (int s : regime.shock_times) os << s << ",";
  os << ";drift=" << format_g9(regime.drift_sigma_z) << ","
     << format_g9(regime.drift_sigma_v) << ";init=" << format_g9(init.z_lo)
     << "," << format_g9(init.z_hi) << "," << format_g9(init.lambda_lo) << ","
     << format_g9(init.lambda_hi) << "," << format_g9(init.alpha)
     << ";blocks=" << blocks.n_blocks << "x" << blocks.block_size << ",p="
     << format_g9(blocks.bernoulli_p) << ",cap=" << blocks.active_cap
     << ",sets=";
  for (const auto& set : blocks.attribute_sets) {
    for (int j : set) os << j << ".";
    os << "|";
  }
  os << ";eta0=" << format_g9(params.eta0) << ";eps0=" << format_g9(params.eps0)
     << ";strict=" << params.strict_clip << ";two_point=" << params.two_point
     << ";m=" << params.explore_len << ";phase=" << params.phase_len
     << ";lambda=" << format_g9(params.ridge_lambda)
     << ";opok_alpha=" << format_g9(params.opok_alpha)
     << ";mu=" << format_g9(params.opok_mu)
     << ";box_r=" << format_g9(box_radius) << ";ball_r=" << format_g9(ball_radius)
     << ";base_scale=" << format_g9(theta_base_scale) << ";seeds=";
  for (std::uint64_t s : seeds) os << s << ",";
  return os.str();
}

std::string ExperimentConfig::digest() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_string())));
  return buf;
}

namespace {

// M_t for a snapshot: the misspecified override when present, otherwise
// the operator assembled from the demand equation.
Eigen::MatrixXd round_operator(const MarketSnapshot& snap,
                               const FeatureMatrix& u) {
  if (snap.operator_override) return *snap.operator_override;
  return assemble_elasticity_operator(u, snap.state).m;
}

double expected_revenue(const Eigen::VectorXd& p, const Eigen::VectorXd& uz,
                        const Eigen::MatrixXd& m) {
  return p.dot(uz) - p.dot(m * p);
}

}  // namespace

TrajectorySums accumulate_trajectory(EnvironmentTrajectory& trajectory) {
  const FeatureMatrix& u = trajectory.feature_matrix();
  const int n = u.n_products();
  const int horizon = trajectory.spec().horizon;
  TrajectorySums sums;
  sums.m_sum = Eigen::MatrixXd::Zero(n, n);
  sums.uz_sum = Eigen::VectorXd::Zero(n);
  sums.rounds = horizon;

  long cached_epoch = -1;
  Eigen::MatrixXd m;
  for (int t = 1; t <= horizon; ++t) {
    const MarketSnapshot& snap = trajectory.at(t);
    if (trajectory.state_epoch() != cached_epoch) {
      m = round_operator(snap, u);
      cached_epoch = trajectory.state_epoch();
    }
    sums.m_sum += m;
    sums.uz_sum += u.entries * snap.state.z;
  }
  return sums;
}

Comparator compute_comparator(const TrajectorySums& sums,
                              const FeatureMatrix& u,
                              const AttributeBox& box) {
  Comparator comp;
  comp.attribute_mode = true;
  RevenueQuadratic quad;
  const Eigen::MatrixXd a =
      u.entries.transpose() * sums.m_sum * u.entries;
  quad.a = 0.5 * (a + a.transpose());
  quad.b = u.entries.transpose() * sums.uz_sum;
  const AttributeBounds bounds = box.absolute_bounds();
  try {
    comp.theta = static_optimum(quad, bounds);
  } catch (const AssumptionViolation&) {
    // Non-PSD summed quadratic (possible under the misspecified regime):
    // plain clipped gradient ascent with a conservative step.
    std::cerr << "[harness] summed quadratic is not concave; falling back "
                 "to clipped gradient ascent\n";
    const double step = 1.0 / (2.0 * spectral_norm_sym(quad.a) + 1e-12);
    Eigen::VectorXd theta = bounds.midpoint();
    for (int it = 0; it < 100000; ++it) {
      const Eigen::VectorXd next =
          bounds.clip(theta + step * (quad.b - 2.0 * quad.a * theta));
      if ((next - theta).cwiseAbs().maxCoeff() < 1e-10) { theta = next; break; }
      theta = next;
    }
    comp.theta = theta;
  }
  comp.prices = u.entries * comp.theta;
  comp.value = comp.theta.dot(quad.b) - comp.theta.dot(quad.a * comp.theta);
  return comp;
}

Comparator compute_comparator(const TrajectorySums& sums,
                              const FeatureMatrix& u, const PriceBall& ball) {
  Comparator comp;
  comp.attribute_mode = false;
  const Eigen::MatrixXd m = 0.5 * (sums.m_sum + sums.m_sum.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double snorm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -kPsdTol * snorm)
    std::cerr << "[harness] summed operator is not PSD; comparator is a "
                 "stationary point of gradient ascent only\n";
  const double step = 1.0 / (2.0 * snorm + 1e-12);
  Eigen::VectorXd p = ball.center;
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd grad = sums.uz_sum - 2.0 * (m * p);
    const Eigen::VectorXd next =
        project_onto_ball(p + step * grad, ball.center, ball.radius);
    const double move = (next - p).norm();
    p = next;
    if (move <= 1e-8) break;
  }
  comp.prices = p;
  comp.value = p.dot(sums.uz_sum) - p.dot(m * p);
  return comp;
}

std::unique_ptr<Learner> make_learner(const std::string& id,
                                      const LearnerParams& params,
                                      const FeatureMatrix& u,
                                      const AttributeBox& box,
                                      const PriceBall& ball, int horizon) {
  const double t = static_cast<double>(horizon);
  const double eta = params.eta0 / std::sqrt(t);
  const double eps = params.eps0 / std::pow(t, 0.25);
  if (id == "adept") {
    AdeptOptions opt;
    opt.eta = eta;
    opt.epsilon = eps;
    opt.strict_clip = params.strict_clip;
    opt.two_point = params.two_point;
    return std::make_unique<AdeptLearner>(u, box, opt);
  }
  if (id == "gdg") {
    GdgOptions opt;
    opt.eta = eta;
    opt.epsilon = eps;
    return std::make_unique<GdgLearner>(u, ball, opt);
  }
  if (id == "ee") {
    EeOptions opt;
    opt.explore_len = params.explore_len;
    opt.phase_len = params.phase_len;
    opt.ridge_lambda = params.ridge_lambda;
    return std::make_unique<EeLearner>(u, box, opt);
  }
  if (id == "opok") {
    OpokOptions opt;
    opt.eta = eta;
    opt.delta = eps;
    opt.alpha = params.opok_alpha >= 0 ? params.opok_alpha : 1.0 / t;
    opt.mu = params.opok_mu;
    return std::make_unique<OpokLearner>(u, ball, opt);
  }
  if (id == "noop") return std::make_unique<NoopLearner>(ball.center);
  throw ConfigError("make_learner: unknown learner '" + id + "'");
}

Eigen::VectorXd derive_theta_base(const FeatureMatrix& u,
                                  const MarketSnapshot& first, double scale) {
  const Eigen::MatrixXd m = round_operator(first, u);
  RevenueQuadratic quad;
  const Eigen::MatrixXd a = u.entries.transpose() * m * u.entries;
  quad.a = 0.5 * (a + a.transpose());
  quad.b = u.entries.transpose() * (u.entries * first.state.z);
  // Wide nonnegative box: generous upper bound from the diagonal scale.
  double hi = 1.0;
  for (int j = 0; j < quad.b.size(); ++j) {
    const double diag = std::max(quad.a(j, j), 1e-9);
    hi = std::max(hi, 10.0 * std::abs(quad.b[j]) / diag);
  }
  AttributeBounds wide{Eigen::VectorXd::Zero(quad.b.size()),
                       Eigen::VectorXd::Constant(quad.b.size(), hi)};
  return scale * static_optimum(quad, wide);
}

RunResult run_experiment(const ExperimentConfig& config_in,
                         std::uint64_t seed) {
  ExperimentConfig config = config_in;
  config.apply_defaults();
  config.validate();

  const Rng root(seed);
  Rng u_rng = root.child("u-gen");
  const FeatureMatrix u = generate_feature_matrix(
      config.n_products, config.n_attributes, config.blocks, u_rng);

  RegimeSpec regime = config.regime;
  regime.seed = root.child("environment").seed();
  EnvironmentTrajectory trajectory(regime, u, config.init);

  const Eigen::VectorXd theta_base =
      derive_theta_base(u, trajectory.at(1), config.theta_base_scale);
  const AttributeBox box = AttributeBox::symmetric(theta_base,
                                                   config.box_radius);
  const PriceBall ball{u.entries * theta_base, config.ball_radius};

  const TrajectorySums sums = accumulate_trajectory(trajectory);
  const Comparator comparator = config.learner == "adept"
                                    ? compute_comparator(sums, u, box)
                                    : compute_comparator(sums, u, ball);

  auto learner = make_learner(config.learner, config.params, u, box, ball,
                              regime.horizon);
  Rng noise_rng = root.child("noise");
  Rng learner_rng = root.child("learner");

  const int horizon = regime.horizon;
  RunResult result;
  result.seed = seed;
  result.config_digest = config.digest();
  result.comparator = comparator;
  result.theta_base = theta_base;
  result.revenue_expected.resize(horizon);
  result.revenue_realized.resize(horizon);
  result.regret_inst.resize(horizon);
  result.regret_cum.resize(horizon);
  result.regret_inst_realized.resize(horizon);

  using clock = std::chrono::steady_clock;
  std::chrono::nanoseconds learner_time{0};
  long cached_epoch = -1;
  Eigen::MatrixXd m;
  double cum = 0.0;
  int first_negative_round = 0;
  long negative_rounds = 0;
  double comparator_value = 0.0;

  for (int t = 1; t <= horizon; ++t) {
    const MarketSnapshot& snap = trajectory.at(t);
    if (trajectory.state_epoch() != cached_epoch) {
      m = round_operator(snap, u);
      cached_epoch = trajectory.state_epoch();
    }
    const Eigen::VectorXd uz = u.entries * snap.state.z;

    const auto t_propose = clock::now();
    const Eigen::VectorXd p = learner->propose(learner_rng);
    learner_time += clock::now() - t_propose;

    const Eigen::VectorXd noise =
        sample_noise(config.n_products, regime.noise_variance, noise_rng);
    const Eigen::VectorXd q = uz - m * p + noise;
    const double realized = realized_revenue(p, q);

    const auto t_observe = clock::now();
    learner->observe(realized);
    learner_time += clock::now() - t_observe;

    const double expected = expected_revenue(p, uz, m);
    const double comp_t = expected_revenue(comparator.prices, uz, m);
    comparator_value += comp_t;
    const double inst = comp_t - expected;
    cum += inst;

    result.revenue_expected[t - 1] = expected;
    result.revenue_realized[t - 1] = realized;
    result.regret_inst[t - 1] = inst;
    result.regret_cum[t - 1] = cum;
    result.regret_inst_realized[t - 1] = comp_t - realized;
    if (inst < 0) {
      if (first_negative_round == 0) first_negative_round = t;
      ++negative_rounds;
    }
  }
  if (first_negative_round > 0 &&
      trajectory.spec().kind != RegimeKind::stationary) {
    // Expected under regime change: the fixed comparator can trail the
    // learner within a phase. Logged once per run.
    std::cerr << "[harness] " << negative_rounds
              << " rounds with negative instantaneous regret (first at t="
              << first_negative_round << ")\n";
  }
  result.comparator.value = comparator_value;
  result.seconds_per_epoch =
      std::chrono::duration<double>(learner_time).count() / horizon;
  result.learner_snapshot = learner->snapshot_json();
  return result;
}

std::vector<RunResult> run_all_seeds(const ExperimentConfig& config) {
  const std::size_t n = config.seeds.size();
  std::vector<RunResult> results(n);
  const int workers =
      std::max(1, std::min<int>(config.parallelism, static_cast<int>(n)));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          results[i] = run_experiment(config, config.seeds[i]);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed = true;
          error_message = e.what();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed) throw NumericError("run failed: " + error_message);
  return results;
}

AggregateCurves aggregate_series(
    const std::vector<std::vector<double>>& series) {
  if (series.size() < 2)
    throw ConfigError("aggregate: need at least 2 runs");
  const std::size_t len = series.front().size();
  for (const auto& s : series)
    if (s.size() != len) throw ConfigError("aggregate: length mismatch");
  AggregateCurves agg;
  agg.mean.resize(len);
  agg.sd.resize(len);
  const double n = static_cast<double>(series.size());
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& s : series) sum += s[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : series) ss += (s[t] - mean) * (s[t] - mean);
    agg.mean[t] = mean;
    agg.sd[t] = std::sqrt(ss / (n - 1.0));
  }
  return agg;
}

AggregateCurves aggregate_runs(const std::vector<RunResult>& results) {
  std::vector<std::vector<double>> series;
  series.reserve(results.size());
  for (const auto& r : results) series.push_back(r.regret_cum);
  return aggregate_series(series);
}

TailSlopeReport tail_slope(const std::vector<double>& regret_cum, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ConfigError("tail_slope: rho must be in (0, 1)");
  const int horizon = static_cast<int>(regret_cum.size());
  if (horizon < 2) throw ConfigError("tail_slope: series too short");
  TailSlopeReport report;
  report.rho = rho;
  report.t0 = std::max(1, static_cast<int>(std::floor((1.0 - rho) * horizon)));
  report.t_end = horizon;
  report.r_t0 = regret_cum[report.t0 - 1];
  report.r_end = regret_cum[horizon - 1];
  if (report.r_t0 <= 0.0 || report.r_end <= 0.0)
    throw NumericError(
        "tail_slope: cumulative regret is not positive at the window "
        "endpoints (R(t0)=" + format_g9(report.r_t0) + ", R(T)=" +
        format_g9(report.r_end) + "); use a larger t0 (smaller rho)");
  report.alpha_hat = (std::log(report.r_end) - std::log(report.r_t0)) /
                     (std::log(static_cast<double>(report.t_end)) -
                      std::log(static_cast<double>(report.t0)));
  return report;
}

double measure_runtime(const ExperimentConfig& config, std::uint64_t seed) {
  return run_experiment(config, seed).seconds_per_epoch;
}

std::string run_file_stem(const ExperimentConfig& config, std::uint64_t seed) {
  return config.name + "_" + config.learner + "_" +
         to_string(config.regime.kind) + "_" + std::to_string(seed);
}

void write_run_csv(const std::string& path, const RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open " + path + " for writing");
  out << "t,revenue_expected,revenue_realized,regret_inst,regret_cum,"
         "regret_inst_realized\n";
  for (std::size_t t = 0; t < result.regret_cum.size(); ++t) {
    out << (t + 1) << ',' << format_g9(result.revenue_expected[t]) << ','
        << format_g9(result.revenue_realized[t]) << ','
        << format_g9(result.regret_inst[t]) << ','
        << format_g9(result.regret_cum[t]) << ','
        << format_g9(result.regret_inst_realized[t]) << '\n';
  }
}

void write_run_json(const std::string& path, const RunResult& result,
                    const ExperimentConfig& config) {
  json j;
  j["config_digest"] = result.config_digest;
  j["seed"] = result.seed;
  j["learner"] = config.learner;
  j["regime"] = to_string(config.regime.kind);
  j["horizon"] = config.regime.horizon;
  j["comparator"]["value"] = result.comparator.value;
  j["comparator"]["mode"] =
      result.comparator.attribute_mode ? "attribute_box" : "price_ball";
  j["comparator"]["prices"] = std::vector<double>(
      result.comparator.prices.data(),
      result.comparator.prices.data() + result.comparator.prices.size());
  if (result.comparator.attribute_mode)
    j["comparator"]["theta"] = std::vector<double>(
        result.comparator.theta.data(),
        result.comparator.theta.data() + result.comparator.theta.size());
  j["theta_base"] = std::vector<double>(
      result.theta_base.data(),
      result.theta_base.data() + result.theta_base.size());
  try {
    const TailSlopeReport ts = tail_slope(result.regret_cum, 0.5);
    j["tail_slope"] = {{"rho", ts.rho},
                       {"t0", ts.t0},
                       {"alpha_hat", ts.alpha_hat},
                       {"r_t0", ts.r_t0},
                       {"r_end", ts.r_end}};
  } catch (const std::exception&) {
    j["tail_slope"] = nullptr;
  }
  j["seconds_per_epoch"] = result.seconds_per_epoch;
  j["learner_snapshot"] = json::parse(result.learner_snapshot);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

void write_aggregate_csv(const std::string& path,
                         const AggregateCurves& agg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open " + path + " for writing");
  out << "t,regret_cum_mean,regret_cum_sd\n";
  for (std::size_t t = 0; t < agg.mean.size(); ++t)
    out << (t + 1) << ',' << format_g9(agg.mean[t]) << ','
        << format_g9(agg.sd[t]) << '\n';
}

}  // namespace pricelab
