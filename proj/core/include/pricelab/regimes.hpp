#ifndef PRICELAB_REGIMES_HPP
#define PRICELAB_REGIMES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pricelab/market_model.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

// Block layout of the structured feature matrix: B blocks of block_size
// products, block b activating attributes from S_b, consecutive blocks
// overlapping in at least one attribute.
struct BlockStructure {
  int n_blocks = 0;
  int block_size = 0;
  std::vector<std::vector<int>> attribute_sets;  // 0-based attribute indices
  double bernoulli_p = 0.5;
  int active_cap = 2;

  // Ring layout over d attributes: S_b = {b, b+1, ..., b+set_size-1} mod d.
  static BlockStructure ring(int n_blocks, int block_size, int n_attributes,
                             int set_size, double bernoulli_p, int active_cap);

  void validate(int n_products, int n_attributes) const;
};

enum class RegimeKind { stationary, shocks, drift, misspecified };

std::string to_string(RegimeKind kind);
RegimeKind regime_kind_from_string(const std::string& name);

struct RegimeSpec {
  RegimeKind kind = RegimeKind::stationary;
  int horizon = 1;
  double noise_variance = 0.5;
  std::vector<int> shock_times;       // shocks only; strictly inside (0, T)
  double drift_sigma_z = 1.0;         // drift only
  double drift_sigma_v = 0.31622776601683794;  // sqrt(0.1), per-entry s.d.
  std::uint64_t seed = 0;

  // Fills shock_times with floor(T/3), floor(2T/3) when empty.
  void apply_defaults();
  void validate() const;
};

// Ranges for the initial market state. Defaults bracket the toy values of
// the interpretability scenarios.
struct MarketInitParams {
  double z_lo = 50.0;
  double z_hi = 250.0;
  double lambda_lo = 0.5;
  double lambda_hi = 1.5;
  double alpha = 0.15;
};

// One round of the environment: the market state, and for the misspecified
// regime the full-rank N x N operator that replaces the assembled one.
struct MarketSnapshot {
  MarketState state;
  std::optional<Eigen::MatrixXd> operator_override;
};

inline constexpr double kPdFloor = 1e-6;

FeatureMatrix generate_feature_matrix(int n_products, int n_attributes,
                                      const BlockStructure& blocks, Rng& rng);

// z uniform on [z_lo, z_hi]; V = Q diag(lambda) Q' with random orthogonal Q
// and lambda uniform on [lambda_lo, lambda_hi]; uniform alpha.
MarketState init_market(int d, Rng& rng, const MarketInitParams& params = {});

// Symmetrize, eigendecompose, clamp eigenvalues to at least `floor`.
Eigen::MatrixXd project_pd(const Eigen::MatrixXd& s, double floor = kPdFloor);

// Full-rank PSD operator with log-uniform spectrum on [0.01, 1].
Eigen::MatrixXd make_misspecified_operator(int n, Rng& rng);

Eigen::VectorXd sample_noise(int n, double variance, Rng& rng);

// Reproducible per-round market evolution. Rounds are served sequentially;
// asking for an earlier round replays the trajectory from the start, so
// any access order yields the same states.
//
// The cross elasticities emitted each round are masked to pairs with
// positive V-similarity, which keeps every substitution edge weight
// nonnegative (assumption A2) under arbitrary V evolution.
class EnvironmentTrajectory {
 public:
  EnvironmentTrajectory(RegimeSpec spec, FeatureMatrix u,
                        MarketInitParams init = {});

  // State for round t (1-based, t in [1, horizon]).
  const MarketSnapshot& at(int t);

  const RegimeSpec& spec() const { return spec_; }
  const FeatureMatrix& feature_matrix() const { return u_; }

  // Increments whenever the served state actually changes (every round
  // under drift, at shocks otherwise once); lets callers cache work
  // derived from the state.
  long state_epoch() const { return state_epoch_; }

 private:
  void reset();
  void advance();  // current_round_ -> current_round_ + 1
  MarketState draw_market(Rng& rng) const;
  void apply_alpha_mask(MarketState& state) const;

  RegimeSpec spec_;
  FeatureMatrix u_;
  MarketInitParams init_;
  int current_round_ = 0;
  long state_epoch_ = 0;
  MarketSnapshot current_;
  MarketState unmasked_;  // drift carries state forward without the mask
  Rng init_rng_{0};       // initial state, and shock regeneration
  Rng z_rng_{0};          // drift increments of z
  Rng v_rng_{0};          // drift increments of V
  Rng op_rng_{0};         // misspecified operator
};

}  // namespace pricelab

#endif
