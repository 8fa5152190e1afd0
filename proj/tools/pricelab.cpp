// Command-line front end: simulate / interpret / tailslope / afdfit / bench.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pricelab/afd_fit.hpp"
#include "pricelab/config.hpp"
#include "pricelab/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pricelab;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // --set KEY=VALUE
  std::string seeds;                   // --seeds comma list
  std::string out_dir;                 // --out
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool config_required) {
  auto* opt = cmd->add_option("--config", args->config_path, "Config file");
  if (config_required) opt->required();
  cmd->add_option("--set", args->overrides,
                  "Override a config key, dotted path (KEY=VALUE)");
  cmd->add_option("--seeds", args->seeds, "Comma-separated seed list");
  cmd->add_option("--out", args->out_dir, "Output directory root");
  cmd->add_flag("--quiet", args->quiet, "Suppress the summary line");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    std::size_t used = 0;
    const unsigned long long v = std::stoull(token, &used);
    if (used != token.size())
      throw ConfigError("--seeds: cannot parse '" + token + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

// Precedence: --out, then PRICELAB_OUT, then the config's output.directory.
fs::path output_root(const CommonArgs& args, const CliConfig& cfg) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("PRICELAB_OUT"); env && *env)
    return env;
  return cfg.output.directory;
}

// Exclusive lock file in the output directory; a second command over the
// same directory fails instead of interleaving writes.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".pricelab.lock") {
    fs::create_directories(dir);
    std::ofstream probe(path_, std::ios::app);
    if (fs::exists(path_) && fs::file_size(path_) > 0)
      throw NumericError("output directory " + dir.string() +
                         " is locked by another command (remove " +
                         path_.string() + " if stale)");
    std::ofstream lock(path_, std::ios::trunc);
    lock << "locked\n";
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
};

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(buffer.str())));
  return hex;
}

void write_manifest(const fs::path& dir,
                    const std::vector<fs::path>& artifacts) {
  json j;
  j["artifacts"] = json::array();
  for (const auto& path : artifacts)
    j["artifacts"].push_back(
        {{"file", path.filename().string()}, {"digest", file_digest(path)}});
  std::ofstream out(dir / "MANIFEST.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

int cmd_simulate(const CommonArgs& args) {
  CliConfig cfg = load_config(args.config_path, args.overrides);
  if (!cfg.has_experiment)
    throw ConfigError("simulate: config has no experiment section");
  if (!args.seeds.empty()) cfg.experiment.seeds = parse_seeds(args.seeds);

  const fs::path dir = output_root(args, cfg) / cfg.experiment.name;
  DirLock lock(dir);

  const std::vector<RunResult> runs = run_all_seeds(cfg.experiment);
  std::vector<fs::path> artifacts;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string stem =
        run_file_stem(cfg.experiment, cfg.experiment.seeds[i]);
    const fs::path csv = dir / (stem + ".csv");
    const fs::path js = dir / (stem + ".json");
    write_run_csv(csv.string(), runs[i]);
    write_run_json(js.string(), runs[i], cfg.experiment);
    artifacts.push_back(csv);
    artifacts.push_back(js);
  }

  double slope_mean = 0.0;
  bool slope_ok = true;
  std::string slope_error;
  double final_mean = 0.0, final_sd = 0.0;
  if (runs.size() >= 2) {
    const AggregateCurves agg = aggregate_runs(runs);
    const fs::path agg_csv = dir / (cfg.experiment.name + "_aggregate.csv");
    write_aggregate_csv(agg_csv.string(), agg);
    artifacts.push_back(agg_csv);
    final_mean = agg.mean.back();
    final_sd = agg.sd.back();
    try {
      slope_mean = tail_slope(agg.mean, 0.5).alpha_hat;
    } catch (const std::exception& e) {
      slope_ok = false;
      slope_error = e.what();
    }
  } else {
    final_mean = runs.front().regret_cum.back();
    try {
      slope_mean = tail_slope(runs.front().regret_cum, 0.5).alpha_hat;
    } catch (const std::exception& e) {
      slope_ok = false;
      slope_error = e.what();
    }
  }
  write_manifest(dir, artifacts);
  if (!args.quiet) {
    std::cout << cfg.experiment.name << ": final cumulative regret "
              << format_g9(final_mean) << " +- " << format_g9(final_sd)
              << ", tail slope ";
    if (slope_ok)
      std::cout << format_g9(slope_mean);
    else
      std::cout << "n/a (" << slope_error << ")";
    std::cout << " [" << runs.size() << " seeds, T="
              << cfg.experiment.regime.horizon << ", results in "
              << dir.string() << "]\n";
  }
  return 0;
}

int cmd_interpret(const CommonArgs& args) {
  const CliConfig cfg = load_config(args.config_path, args.overrides);
  if (!cfg.has_interpret)
    throw ConfigError("interpret: config has no interpret section");
  const fs::path dir = output_root(args, cfg) / "interpret";
  DirLock lock(dir);
  const fs::path csv_path = dir / "interpret.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  csv << "scenario,index,z,theta_star,price\n";

  for (const auto& sc : cfg.interpret) {
    try {
      double cap = 1.0;
      for (int i = 0; i < sc.u.rows(); ++i)
        for (int j = 0; j < sc.u.cols(); ++j)
          cap = std::max(cap, sc.u(i, j));
      const FeatureMatrix u =
          FeatureMatrix::create(sc.u, static_cast<int>(cap));
      MarketState state;
      state.z = sc.z;
      state.V = sc.v;
      state.alpha =
          ElasticityCoefficients::uniform(u.n_products(), sc.alpha_cross);
      state.alpha.self.setConstant(sc.alpha_self);
      state.validate(u);
      const RevenueQuadratic quad = revenue_quadratic(u, state);
      const AttributeBounds box{sc.theta_lower, sc.theta_upper};
      const Eigen::VectorXd theta = static_optimum(quad, box);
      const Eigen::VectorXd prices = prices_from_attributes(u, theta);

      if (!args.quiet) {
        std::cout << sc.name << ":\n  z = [";
        for (int j = 0; j < sc.z.size(); ++j)
          std::cout << (j ? ", " : "") << format_g9(sc.z[j]);
        std::cout << "]\n  theta* = [";
        for (int j = 0; j < theta.size(); ++j)
          std::cout << (j ? ", " : "") << format_g9(theta[j]);
        std::cout << "]\n  p = U theta* = [";
        for (int i = 0; i < prices.size(); ++i)
          std::cout << (i ? ", " : "") << format_g9(prices[i]);
        std::cout << "]\n";
      }
      const int rows = std::max(sc.z.size(), prices.size());
      for (int r = 0; r < rows; ++r) {
        csv << sc.name << ',' << r << ','
            << (r < sc.z.size() ? format_g9(sc.z[r]) : "") << ','
            << (r < theta.size() ? format_g9(theta[r]) : "") << ','
            << (r < prices.size() ? format_g9(prices[r]) : "") << '\n';
      }
    } catch (const std::exception& e) {
      std::cerr << "scenario '" << sc.name << "' failed: " << e.what()
                << "\n";
      csv << sc.name << ",,,," << '\n';
    }
  }
  csv.close();
  write_manifest(dir, {csv_path});
  return 0;
}

int cmd_tailslope(const std::string& csv_path, double rho,
                  const CommonArgs& args) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ConfigError("tailslope: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("tailslope: " + csv_path + " is empty");
  // Locate the regret_cum column in the header.
  int target = -1, col = 0;
  std::stringstream header(line);
  std::string name;
  while (std::getline(header, name, ',')) {
    if (!name.empty() && name.back() == '\r') name.pop_back();
    if (name == "regret_cum") target = col;
    ++col;
  }
  if (target < 0)
    throw ConfigError("tailslope: " + csv_path +
                      " has no regret_cum column");
  std::vector<double> regret;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    for (int c = 0; c <= target; ++c)
      if (!std::getline(row, cell, ','))
        throw ConfigError("tailslope: short row in " + csv_path);
    regret.push_back(std::stod(cell));
  }
  const TailSlopeReport report = tail_slope(regret, rho);
  if (!args.quiet)
    std::cout << "tail slope alpha_hat = " << format_g9(report.alpha_hat)
              << " over [t0=" << report.t0 << ", T=" << report.t_end
              << "], R(t0)=" << format_g9(report.r_t0)
              << ", R(T)=" << format_g9(report.r_end) << "\n";

  fs::path dir;
  if (!args.out_dir.empty())
    dir = args.out_dir;
  else if (const char* env = std::getenv("PRICELAB_OUT"); env && *env)
    dir = env;
  else
    dir = fs::path(csv_path).parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  json j = {{"rho", report.rho},
            {"t0", report.t0},
            {"t_end", report.t_end},
            {"r_t0", report.r_t0},
            {"r_end", report.r_end},
            {"alpha_hat", report.alpha_hat},
            {"source", fs::path(csv_path).filename().string()}};
  std::ofstream out(dir / "tailslope.json", std::ios::binary);
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_afdfit(const CommonArgs& args) {
  const CliConfig cfg = load_config(args.config_path, args.overrides);
  if (!cfg.has_afdfit)
    throw ConfigError("afdfit: config has no afdfit section");
  const fs::path dir = output_root(args, cfg) / "afdfit";
  DirLock lock(dir);

  const IngestResult table =
      ingest_table(cfg.afdfit.input_path, cfg.afdfit.schema);
  const EncodedDesign design =
      one_hot_encode(table.records, cfg.afdfit.schema.attribute_columns);
  Eigen::VectorXd y(static_cast<int>(table.records.size()));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    y[static_cast<int>(i)] = table.records[i].price;
    ids.push_back(table.records[i].id);
  }
  const FitResult fit =
      ridge_fit(design, y, cfg.afdfit.lambda, cfg.afdfit.split_seed, ids);

  std::vector<fs::path> artifacts;
  const fs::path coef = dir / "coefficients.csv";
  const fs::path summary = dir / "fit_summary.json";
  write_coefficients_csv(coef.string(), fit);
  write_fit_summary_json(summary.string(), fit, table.skipped);
  artifacts = {coef, summary};
  if (cfg.afdfit.decompositions) {
    const fs::path dec = dir / "decompositions.csv";
    write_decompositions_csv(dec.string(), fit, table.records);
    artifacts.push_back(dec);
  }
  write_manifest(dir, artifacts);
  if (!args.quiet)
    std::cout << "afdfit: R^2 train " << format_g9(fit.r_squared_train)
              << ", test " << format_g9(fit.r_squared_test) << " ("
              << fit.n_records << " records, " << fit.n_features
              << " features, " << table.skipped << " skipped, lambda "
              << format_g9(fit.lambda) << ")\n";
  return 0;
}

int cmd_bench(const CommonArgs& args) {
  const CliConfig cfg = load_config(args.config_path, args.overrides);
  if (!cfg.has_bench)
    throw ConfigError("bench: config has no bench section");
  const fs::path dir = output_root(args, cfg) / "bench";
  DirLock lock(dir);

  const fs::path csv_path = dir / "bench.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  csv << "n_products,n_attributes,learner,seconds_per_epoch\n";
  if (!args.quiet) {
    std::cout << "N,d";
    for (const auto& learner : cfg.bench.learners) std::cout << "," << learner;
    std::cout << "\n";
  }
  for (const auto& setting : cfg.bench.settings) {
    if (!args.quiet)
      std::cout << setting.n_products << "," << setting.n_attributes;
    for (const auto& learner : cfg.bench.learners) {
      ExperimentConfig exp;
      exp.name = "bench";
      exp.n_products = setting.n_products;
      exp.n_attributes = setting.n_attributes;
      exp.regime.kind = RegimeKind::stationary;
      exp.regime.horizon = cfg.bench.rounds;
      exp.learner = learner;
      exp.seeds = {cfg.bench.seed};
      const double seconds = measure_runtime(exp, cfg.bench.seed);
      if (!(seconds > 0.0) || !std::isfinite(seconds))
        throw NumericError("bench: nonpositive per-epoch time measured");
      csv << setting.n_products << ',' << setting.n_attributes << ','
          << learner << ',' << format_g9(seconds) << '\n';
      if (!args.quiet) std::cout << "," << format_g9(seconds);
    }
    if (!args.quiet) std::cout << "\n";
  }
  csv.close();
  write_manifest(dir, {csv_path});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-pricing simulation laboratory"};
  app.require_subcommand(1);

  CommonArgs sim_args, interp_args, tail_args, fit_args, bench_args;
  std::string tail_csv;
  double rho = 0.5;

  auto* sim = app.add_subcommand("simulate", "Run learner x regime x seeds");
  add_common(sim, &sim_args, true);
  auto* interp =
      app.add_subcommand("interpret", "Attribute-price tables for small "
                                      "hand-specified markets");
  add_common(interp, &interp_args, true);
  auto* tail = app.add_subcommand("tailslope",
                                  "Log-log tail slope of a regret CSV");
  tail->add_option("csv", tail_csv, "Run CSV with a regret_cum column")
      ->required();
  tail->add_option("--rho", rho, "Tail window fraction (default 0.5)");
  add_common(tail, &tail_args, false);
  auto* fit = app.add_subcommand("afdfit",
                                 "Fit attribute-level prices to a CSV");
  add_common(fit, &fit_args, true);
  auto* bench = app.add_subcommand("bench", "Per-epoch learner runtime grid");
  add_common(bench, &bench_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are configuration failures
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (interp->parsed()) return cmd_interpret(interp_args);
    if (tail->parsed()) return cmd_tailslope(tail_csv, rho, tail_args);
    if (fit->parsed()) return cmd_afdfit(fit_args);
    if (bench->parsed()) return cmd_bench(bench_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
