#include "pricelab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pricelab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      fail(path.empty() ? key : path + "." + key, "unknown key");
}

double get_number(const json& obj, const std::string& path,
                  const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& path, const std::string& key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    fail(path + "." + key, "expected an integer");
  return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& path,
              const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) fail(path + "." + key, "expected a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& path,
                       const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

Eigen::VectorXd get_vector(const json& node, const std::string& path) {
  if (!node.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd v(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number())
      fail(path + "[" + std::to_string(i) + "]", "expected a number");
    v[static_cast<int>(i)] = node[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd get_matrix(const json& node, const std::string& path) {
  if (!node.is_array() || node.empty() || !node[0].is_array())
    fail(path, "expected an array of number arrays");
  const std::size_t cols = node[0].size();
  Eigen::MatrixXd m(node.size(), cols);
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_array() || node[i].size() != cols)
      fail(path + "[" + std::to_string(i) + "]",
           "ragged rows in matrix literal");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!node[i][j].is_number())
        fail(path + "[" + std::to_string(i) + "]", "expected a number");
      m(static_cast<int>(i), static_cast<int>(j)) = node[i][j].get<double>();
    }
  }
  return m;
}

void parse_blocks(const json& node, const std::string& path,
                  BlockStructure* blocks) {
  require_keys(node, path,
               {"n_blocks", "block_size", "attribute_sets", "bernoulli_p",
                "active_cap"});
  blocks->n_blocks = get_int(node, path, "n_blocks", blocks->n_blocks);
  blocks->block_size = get_int(node, path, "block_size", blocks->block_size);
  blocks->bernoulli_p =
      get_number(node, path, "bernoulli_p", blocks->bernoulli_p);
  blocks->active_cap = get_int(node, path, "active_cap", blocks->active_cap);
  if (node.contains("attribute_sets")) {
    const json& sets = node["attribute_sets"];
    if (!sets.is_array()) fail(path + ".attribute_sets", "expected an array");
    blocks->attribute_sets.clear();
    for (const auto& set : sets) {
      if (!set.is_array())
        fail(path + ".attribute_sets", "expected arrays of indices");
      std::vector<int> indices;
      for (const auto& j : set) indices.push_back(j.get<int>());
      blocks->attribute_sets.push_back(std::move(indices));
    }
  }
}

void parse_params(const json& node, const std::string& path,
                  LearnerParams* params) {
  require_keys(node, path,
               {"eta0", "eps0", "strict_clip", "two_point", "explore_len",
                "phase_len", "ridge_lambda", "opok_alpha", "opok_mu"});
  params->eta0 = get_number(node, path, "eta0", params->eta0);
  params->eps0 = get_number(node, path, "eps0", params->eps0);
  params->strict_clip =
      get_bool(node, path, "strict_clip", params->strict_clip);
  params->two_point = get_bool(node, path, "two_point", params->two_point);
  params->explore_len =
      get_int(node, path, "explore_len", params->explore_len);
  params->phase_len = get_int(node, path, "phase_len", params->phase_len);
  params->ridge_lambda =
      get_number(node, path, "ridge_lambda", params->ridge_lambda);
  params->opok_alpha =
      get_number(node, path, "opok_alpha", params->opok_alpha);
  params->opok_mu = get_number(node, path, "opok_mu", params->opok_mu);
}

void parse_experiment(const json& node, ExperimentConfig* cfg) {
  const std::string path = "experiment";
  require_keys(node, path,
               {"name", "n_products", "n_attributes", "blocks", "regime",
                "horizon", "noise_variance", "shock_times", "drift_sigma_z",
                "drift_sigma_v", "init", "learner", "params", "box_radius",
                "ball_radius", "theta_base_scale", "seeds", "parallelism"});
  cfg->name = get_string(node, path, "name", cfg->name);
  cfg->n_products = get_int(node, path, "n_products", cfg->n_products);
  cfg->n_attributes = get_int(node, path, "n_attributes", cfg->n_attributes);
  if (node.contains("blocks"))
    parse_blocks(node["blocks"], path + ".blocks", &cfg->blocks);
  if (node.contains("regime"))
    cfg->regime.kind =
        regime_kind_from_string(get_string(node, path, "regime", ""));
  cfg->regime.horizon = get_int(node, path, "horizon", cfg->regime.horizon);
  cfg->regime.noise_variance =
      get_number(node, path, "noise_variance", cfg->regime.noise_variance);
  if (node.contains("shock_times")) {
    cfg->regime.shock_times.clear();
    for (const auto& t : node["shock_times"])
      cfg->regime.shock_times.push_back(t.get<int>());
  }
  cfg->regime.drift_sigma_z =
      get_number(node, path, "drift_sigma_z", cfg->regime.drift_sigma_z);
  cfg->regime.drift_sigma_v =
      get_number(node, path, "drift_sigma_v", cfg->regime.drift_sigma_v);
  if (node.contains("init")) {
    const json& init = node["init"];
    const std::string ipath = path + ".init";
    require_keys(init, ipath,
                 {"z_lo", "z_hi", "lambda_lo", "lambda_hi", "alpha"});
    cfg->init.z_lo = get_number(init, ipath, "z_lo", cfg->init.z_lo);
    cfg->init.z_hi = get_number(init, ipath, "z_hi", cfg->init.z_hi);
    cfg->init.lambda_lo =
        get_number(init, ipath, "lambda_lo", cfg->init.lambda_lo);
    cfg->init.lambda_hi =
        get_number(init, ipath, "lambda_hi", cfg->init.lambda_hi);
    cfg->init.alpha = get_number(init, ipath, "alpha", cfg->init.alpha);
  }
  cfg->learner = get_string(node, path, "learner", cfg->learner);
  if (node.contains("params"))
    parse_params(node["params"], path + ".params", &cfg->params);
  cfg->box_radius = get_number(node, path, "box_radius", cfg->box_radius);
  cfg->ball_radius = get_number(node, path, "ball_radius", cfg->ball_radius);
  cfg->theta_base_scale =
      get_number(node, path, "theta_base_scale", cfg->theta_base_scale);
  if (node.contains("seeds")) {
    cfg->seeds.clear();
    for (const auto& s : node["seeds"])
      cfg->seeds.push_back(s.get<std::uint64_t>());
  }
  cfg->parallelism = get_int(node, path, "parallelism", cfg->parallelism);
}

InterpretScenario parse_scenario(const json& node, const std::string& path) {
  require_keys(node, path,
               {"name", "u", "z", "v", "alpha_self", "alpha_cross",
                "theta_lower", "theta_upper"});
  InterpretScenario sc;
  sc.name = get_string(node, path, "name", "scenario");
  if (!node.contains("u")) fail(path, "missing key u");
  if (!node.contains("z")) fail(path, "missing key z");
  sc.u = get_matrix(node["u"], path + ".u");
  sc.z = get_vector(node["z"], path + ".z");
  sc.v = node.contains("v")
             ? get_matrix(node["v"], path + ".v")
             : Eigen::MatrixXd(Eigen::MatrixXd::Identity(sc.u.cols(),
                                                         sc.u.cols()));
  sc.alpha_self = get_number(node, path, "alpha_self", sc.alpha_self);
  sc.alpha_cross = get_number(node, path, "alpha_cross", sc.alpha_cross);
  if (!node.contains("theta_lower") || !node.contains("theta_upper"))
    fail(path, "missing theta_lower/theta_upper box bounds");
  sc.theta_lower = get_vector(node["theta_lower"], path + ".theta_lower");
  sc.theta_upper = get_vector(node["theta_upper"], path + ".theta_upper");
  if (sc.z.size() != sc.u.cols() || sc.theta_lower.size() != sc.u.cols() ||
      sc.theta_upper.size() != sc.u.cols() || sc.v.rows() != sc.u.cols() ||
      sc.v.cols() != sc.u.cols())
    fail(path, "z, v, and theta bounds must all have dimension u.cols()");
  return sc;
}

void parse_afdfit(const json& node, AfdFitConfig* cfg) {
  const std::string path = "afdfit";
  require_keys(node, path,
               {"input", "attribute_columns", "price_column", "id_column",
                "lambda", "split_seed", "decompositions"});
  cfg->input_path = get_string(node, path, "input", "");
  if (cfg->input_path.empty()) fail(path + ".input", "required");
  if (!node.contains("attribute_columns"))
    fail(path + ".attribute_columns", "required");
  cfg->schema.attribute_columns.clear();
  for (const auto& c : node["attribute_columns"])
    cfg->schema.attribute_columns.push_back(c.get<std::string>());
  if (cfg->schema.attribute_columns.empty())
    fail(path + ".attribute_columns", "must be nonempty");
  cfg->schema.price_column =
      get_string(node, path, "price_column", cfg->schema.price_column);
  cfg->schema.id_column =
      get_string(node, path, "id_column", cfg->schema.id_column);
  cfg->lambda = get_number(node, path, "lambda", cfg->lambda);
  cfg->split_seed = node.contains("split_seed")
                        ? node["split_seed"].get<std::uint64_t>()
                        : cfg->split_seed;
  cfg->decompositions =
      get_bool(node, path, "decompositions", cfg->decompositions);
}

void parse_bench(const json& node, BenchConfig* cfg) {
  const std::string path = "bench";
  require_keys(node, path, {"settings", "learners", "rounds", "seed"});
  if (!node.contains("settings") || !node.contains("learners"))
    fail(path, "settings and learners are required");
  cfg->settings.clear();
  for (const auto& s : node["settings"]) {
    if (!s.is_array() || s.size() != 2)
      fail(path + ".settings", "each setting is a [N, d] pair");
    cfg->settings.push_back({s[0].get<int>(), s[1].get<int>()});
  }
  cfg->learners.clear();
  for (const auto& l : node["learners"])
    cfg->learners.push_back(l.get<std::string>());
  if (cfg->settings.empty() || cfg->learners.empty())
    fail(path, "settings and learners must be nonempty");
  cfg->rounds = get_int(node, path, "rounds", cfg->rounds);
  if (cfg->rounds < 1) fail(path + ".rounds", "must be >= 1");
  cfg->seed =
      node.contains("seed") ? node["seed"].get<std::uint64_t>() : cfg->seed;
}

// --set experiment.horizon=100: walks/creates the dotted path. The value
// is parsed as JSON when it parses, else taken as a string.
void apply_override(json* doc, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + spec + "' is not KEY=VALUE");
  const std::string key_path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = doc;
  std::stringstream keys(key_path);
  std::string key;
  std::vector<std::string> parts;
  while (std::getline(keys, key, '.')) {
    if (key.empty())
      throw ConfigError("override '" + spec + "' has an empty key segment");
    parts.push_back(key);
  }
  try {
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (node->is_array()) {
        node = &node->at(std::stoul(parts[i]));
      } else {
        node = &(*node)[parts[i]];
      }
    }
    (*node)[parts.back()] = std::move(value);
  } catch (const std::exception& e) {
    throw ConfigError("override '" + spec + "': " + e.what());
  }
}

}  // namespace

CliConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides) {
  json doc = json::parse(text, nullptr, false, /*ignore_comments=*/true);
  if (doc.is_discarded())
    throw ConfigError("config: not valid JSON (comments are allowed)");
  for (const auto& spec : overrides) apply_override(&doc, spec);

  require_keys(doc, "", {"experiment", "interpret", "afdfit", "bench",
                         "output"});
  CliConfig cfg;
  if (doc.contains("experiment")) {
    cfg.has_experiment = true;
    parse_experiment(doc["experiment"], &cfg.experiment);
    cfg.experiment.apply_defaults();
    cfg.experiment.validate();
  }
  if (doc.contains("interpret")) {
    cfg.has_interpret = true;
    const json& node = doc["interpret"];
    if (!node.is_array()) fail("interpret", "expected an array of scenarios");
    for (std::size_t i = 0; i < node.size(); ++i)
      cfg.interpret.push_back(parse_scenario(
          node[i], "interpret[" + std::to_string(i) + "]"));
    if (cfg.interpret.empty()) fail("interpret", "must be nonempty");
  }
  if (doc.contains("afdfit")) {
    cfg.has_afdfit = true;
    parse_afdfit(doc["afdfit"], &cfg.afdfit);
  }
  if (doc.contains("bench")) {
    cfg.has_bench = true;
    parse_bench(doc["bench"], &cfg.bench);
  }
  if (doc.contains("output")) {
    const json& node = doc["output"];
    require_keys(node, "output", {"directory"});
    cfg.output.directory =
        get_string(node, "output", "directory", cfg.output.directory);
  }
  return cfg;
}

CliConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), overrides);
}

}  // namespace pricelab
