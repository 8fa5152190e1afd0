#include "pricelab/regimes.hpp"

#include <algorithm>
#include <cmath>

namespace pricelab {

BlockStructure BlockStructure::ring(int n_blocks, int block_size,
                                    int n_attributes, int set_size,
                                    double bernoulli_p, int active_cap) {
  BlockStructure blocks;
  blocks.n_blocks = n_blocks;
  blocks.block_size = block_size;
  blocks.bernoulli_p = bernoulli_p;
  blocks.active_cap = active_cap;
  for (int b = 0; b < n_blocks; ++b) {
    std::vector<int> set;
    for (int s = 0; s < set_size; ++s) set.push_back((b + s) % n_attributes);
    blocks.attribute_sets.push_back(std::move(set));
  }
  return blocks;
}

void BlockStructure::validate(int n_products, int n_attributes) const {
  if (n_blocks < 1 || block_size < 1 ||
      n_blocks * block_size != n_products)
    throw ConfigError("BlockStructure: n_blocks * block_size must equal N (" +
                      std::to_string(n_blocks) + " * " +
                      std::to_string(block_size) +
                      " != " + std::to_string(n_products) + ")");
  if (static_cast<int>(attribute_sets.size()) != n_blocks)
    throw ConfigError("BlockStructure: need one attribute set per block");
  for (const auto& set : attribute_sets) {
    if (set.empty()) throw ConfigError("BlockStructure: empty attribute set");
    for (int j : set)
      if (j < 0 || j >= n_attributes)
        throw ConfigError("BlockStructure: attribute index out of range");
  }
  if (active_cap < 1)
    throw ConfigError("BlockStructure: active_cap must be >= 1");
  if (bernoulli_p < 0.0 || bernoulli_p > 1.0)
    throw ConfigError("BlockStructure: bernoulli_p must be in [0, 1]");
}

std::string to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::stationary: return "stationary";
    case RegimeKind::shocks: return "shocks";
    case RegimeKind::drift: return "drift";
    case RegimeKind::misspecified: return "misspecified";
  }
  return "unknown";
}

RegimeKind regime_kind_from_string(const std::string& name) {
  if (name == "stationary" || name == "s1") return RegimeKind::stationary;
  if (name == "shocks" || name == "s2") return RegimeKind::shocks;
  if (name == "drift" || name == "s3") return RegimeKind::drift;
  if (name == "misspecified" || name == "s4") return RegimeKind::misspecified;
  throw ConfigError("unknown regime kind: " + name);
}

void RegimeSpec::apply_defaults() {
  if (kind == RegimeKind::shocks && shock_times.empty())
    shock_times = {horizon / 3, 2 * horizon / 3};
}

void RegimeSpec::validate() const {
  if (horizon < 1) throw ConfigError("RegimeSpec: horizon must be >= 1");
  if (noise_variance < 0)
    throw ConfigError("RegimeSpec: noise_variance must be >= 0");
  if (kind == RegimeKind::shocks) {
    for (int s : shock_times)
      if (s <= 1 || s >= horizon)
        throw ConfigError("RegimeSpec: shock time " + std::to_string(s) +
                          " not strictly inside (1, T)");
  }
}

FeatureMatrix generate_feature_matrix(int n_products, int n_attributes,
                                      const BlockStructure& blocks, Rng& rng) {
  blocks.validate(n_products, n_attributes);
  Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(n_products, n_attributes);
  for (int b = 0; b < blocks.n_blocks; ++b) {
    const auto& set = blocks.attribute_sets[b];
    for (int r = 0; r < blocks.block_size; ++r) {
      const int i = b * blocks.block_size + r;
      std::vector<int> active;
      for (int j : set)
        if (rng.uniform() < blocks.bernoulli_p) {
          entries(i, j) = 1.0;
          active.push_back(j);
        }
      if (active.empty()) {
        // A product must carry at least one attribute of its block.
        const int j = set[rng.integer(set.size())];
        entries(i, j) = 1.0;
      } else if (static_cast<int>(active.size()) > blocks.active_cap) {
        // Randomly retain exactly active_cap of the active attributes.
        std::vector<int> pool = active;
        for (int keep = 0; keep < blocks.active_cap; ++keep) {
          const std::size_t pick = keep + rng.integer(pool.size() - keep);
          std::swap(pool[keep], pool[pick]);
        }
        for (std::size_t drop = blocks.active_cap; drop < pool.size(); ++drop)
          entries(i, pool[drop]) = 0.0;
      }
    }
  }
  return FeatureMatrix::create(std::move(entries), 1);
}

namespace {

// Random orthogonal matrix: QR of a Gaussian matrix with the sign of the
// R diagonal fixed, so the distribution is Haar and the draw count is d*d.
Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
  Eigen::MatrixXd gauss(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) gauss(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace

MarketState init_market(int d, Rng& rng, const MarketInitParams& params) {
  if (d < 1) throw ConfigError("init_market: d must be >= 1");
  MarketState state;
  state.z = rng.uniform_vector(d, params.z_lo, params.z_hi);
  const Eigen::MatrixXd q = random_orthogonal(d, rng);
  const Eigen::VectorXd lambda =
      rng.uniform_vector(d, params.lambda_lo, params.lambda_hi);
  state.V = q * lambda.asDiagonal() * q.transpose();
  state.V = (0.5 * (state.V + state.V.transpose())).eval();
  // Dimension of alpha is unknown here; callers resize via the trajectory
  // (which knows N) or set it explicitly.
  state.alpha = ElasticityCoefficients::uniform(0, params.alpha);
  return state;
}

Eigen::MatrixXd project_pd(const Eigen::MatrixXd& s, double floor) {
  if (!s.allFinite()) throw NumericError("project_pd: non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * clamped.asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd make_misspecified_operator(int n, Rng& rng) {
  if (n < 1) throw ConfigError("make_misspecified_operator: n must be >= 1");
  const Eigen::MatrixXd q = random_orthogonal(n, rng);
  Eigen::VectorXd lambda(n);
  const double log_lo = std::log(0.01), log_hi = std::log(1.0);
  for (int i = 0; i < n; ++i)
    lambda[i] = std::exp(rng.uniform(log_lo, log_hi));
  return q * lambda.asDiagonal() * q.transpose();
}

Eigen::VectorXd sample_noise(int n, double variance, Rng& rng) {
  if (variance < 0) throw ConfigError("sample_noise: variance must be >= 0");
  if (variance == 0) return Eigen::VectorXd::Zero(n);
  return std::sqrt(variance) * rng.normal_vector(n);
}

EnvironmentTrajectory::EnvironmentTrajectory(RegimeSpec spec, FeatureMatrix u,
                                             MarketInitParams init)
    : spec_(std::move(spec)), u_(std::move(u)), init_(init) {
  spec_.apply_defaults();
  spec_.validate();
  reset();
}

void EnvironmentTrajectory::reset() {
  const Rng root(spec_.seed);
  init_rng_ = root.child("market-init");
  z_rng_ = root.child("z-path");
  v_rng_ = root.child("v-path");
  op_rng_ = root.child("operator");
  current_round_ = 0;
  state_epoch_ = 0;
}

MarketState EnvironmentTrajectory::draw_market(Rng& rng) const {
  MarketState state = init_market(u_.n_attributes(), rng, init_);
  state.alpha = ElasticityCoefficients::uniform(u_.n_products(), init_.alpha);
  return state;
}

void EnvironmentTrajectory::apply_alpha_mask(MarketState& state) const {
  // Substitution only between pairs with positive V-similarity; keeps all
  // Laplacian edge weights nonnegative for any PD V.
  const Eigen::MatrixXd g = u_.entries * state.V * u_.entries.transpose();
  const double tol = 1e-12 * std::max(g.cwiseAbs().maxCoeff(), 1.0);
  const int n = u_.n_products();
  state.alpha.cross = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && g(i, j) > tol) state.alpha.cross(i, j) = init_.alpha;
}

void EnvironmentTrajectory::advance() {
  const int next = current_round_ + 1;
  if (current_round_ == 0) {
    unmasked_ = draw_market(init_rng_);
    current_.operator_override.reset();
    if (spec_.kind == RegimeKind::misspecified)
      current_.operator_override =
          make_misspecified_operator(u_.n_products(), op_rng_);
    ++state_epoch_;
  } else {
    switch (spec_.kind) {
      case RegimeKind::stationary:
      case RegimeKind::misspecified:
        break;
      case RegimeKind::shocks:
        if (std::find(spec_.shock_times.begin(), spec_.shock_times.end(),
                      next) != spec_.shock_times.end()) {
          unmasked_ = draw_market(init_rng_);
          ++state_epoch_;
        }
        break;
      case RegimeKind::drift: {
        ++state_epoch_;
        unmasked_.z += spec_.drift_sigma_z * z_rng_.normal_vector(
                                                 u_.n_attributes());
        const int d = u_.n_attributes();
        Eigen::MatrixXd w(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            w(i, j) = spec_.drift_sigma_v * v_rng_.normal();
        // Noise applied to the symmetric part only.
        unmasked_.V = project_pd(unmasked_.V + 0.5 * (w + w.transpose()),
                                 kPdFloor);
        break;
      }
    }
  }
  current_round_ = next;
  current_.state = unmasked_;
  apply_alpha_mask(current_.state);
}

const MarketSnapshot& EnvironmentTrajectory::at(int t) {
  if (t < 1 || t > spec_.horizon)
    throw ConfigError("EnvironmentTrajectory: round " + std::to_string(t) +
                      " outside [1, " + std::to_string(spec_.horizon) + "]");
  if (t < current_round_) reset();
  while (current_round_ < t) advance();
  return current_;
}

}  // namespace pricelab
