#ifndef PRICELAB_MARKET_MODEL_HPP
#define PRICELAB_MARKET_MODEL_HPP

#include <vector>

#include <Eigen/Dense>

#include "pricelab/common.hpp"

namespace pricelab {

// Tolerances used throughout: eigenvalue checks are relative to the
// spectral norm of the matrix under test.
inline constexpr double kPsdTol = 1e-9;

// N x d product-attribute matrix with discrete nonnegative entries.
struct FeatureMatrix {
  Eigen::MatrixXd entries;  // integer levels in {0, ..., level_cap}
  int level_cap = 1;

  int n_products() const { return static_cast<int>(entries.rows()); }
  int n_attributes() const { return static_cast<int>(entries.cols()); }

  // Validates integrality, the level cap, and the no-all-zero-row rule.
  static FeatureMatrix create(Eigen::MatrixXd entries, int level_cap = 1);
};

// Self (alpha_ii) and cross (alpha_ij) price sensitivities. The cross
// diagonal is ignored by every consumer: the (p_j - p_i) term vanishes
// at j == i.
struct ElasticityCoefficients {
  Eigen::VectorXd self;   // length N, >= 0
  Eigen::MatrixXd cross;  // N x N, >= 0, zero diagonal by convention

  static ElasticityCoefficients uniform(int n, double value);
};

// Baseline demand z in attribute space, attribute-interaction matrix V,
// and elasticity coefficients.
struct MarketState {
  Eigen::VectorXd z;  // length d
  Eigen::MatrixXd V;  // d x d, symmetric PSD
  ElasticityCoefficients alpha;

  // Checks symmetry and PSD-ness of V, nonnegative alpha, and (given the
  // feature matrix) nonnegative cross V-inner products (assumption A2).
  void validate(const FeatureMatrix& u) const;
};

struct AttributePriceVector {
  Eigen::VectorXd theta;  // length d
};

// Elementwise bounds on attribute prices.
struct AttributeBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool contains(const Eigen::VectorXd& theta, double tol = 0.0) const;
  Eigen::VectorXd clip(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd midpoint() const { return 0.5 * (lower + upper); }
};

// M = self_part + laplacian_part, where laplacian_part = D - W is the
// graph Laplacian of the symmetrized substitution weights.
struct ElasticityOperator {
  Eigen::MatrixXd m;
  Eigen::MatrixXd self_part;       // diagonal: alpha_ii <u_i,u_i>_V
  Eigen::MatrixXd laplacian_part;  // D - W
  Eigen::MatrixXd weights;         // W, symmetric, zero diagonal, >= 0
};

// Expected revenue R(theta) = theta' b - theta' A theta.
struct RevenueQuadratic {
  Eigen::MatrixXd a;  // d x d symmetric PSD
  Eigen::VectorXd b;  // length d
};

struct PdReport {
  bool is_psd = false;
  bool is_pd = false;
  bool gershgorin_dominant = false;
  std::vector<std::vector<int>> components;  // of the weight graph
};

// u_i' V u_j.
double v_inner(const Eigen::VectorXd& u_i, const Eigen::VectorXd& u_j,
               const Eigen::MatrixXd& v);

// p = U theta.
Eigen::VectorXd prices_from_attributes(const FeatureMatrix& u,
                                       const Eigen::VectorXd& theta);

// Assembles M from the demand equation: M(i,i) = alpha_ii <u_i,u_i>_V +
// sum_{j != i} w_ij, M(i,j) = -w_ij, with w_ij the symmetrized
// alpha-weighted V-inner products. Throws AssumptionViolation on a
// negative elasticity or a negative edge weight beyond tolerance,
// naming the offending pair.
ElasticityOperator assemble_elasticity_operator(const FeatureMatrix& u,
                                                const MarketState& state);

// Literal evaluation of the demand equation (raw asymmetric alpha):
// q(i) = u_i'z - alpha_ii <u_i,u_i>_V p(i)
//        + sum_j alpha_ij <u_i,u_j>_V (p(j) - p(i)) + eps(i).
Eigen::VectorXd demand(const FeatureMatrix& u, const MarketState& state,
                       const Eigen::VectorXd& p, const Eigen::VectorXd& eps);

// Money earned this round: <q, p>.
double realized_revenue(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// A = U' M U (symmetrized), b = U'U z.
RevenueQuadratic revenue_quadratic(const FeatureMatrix& u,
                                   const MarketState& state);

// Maximizer of R(theta) = theta'b - theta'A theta over the box, by
// projected gradient with step 1/(2 lambda_max(A) + 1e-12).
Eigen::VectorXd static_optimum(const RevenueQuadratic& quad,
                               const AttributeBounds& box);

// PSD/PD characterization of the assembled operator via the connected
// components of the weight graph: M is PD iff every component contains
// an index with positive self part.
PdReport pd_characterization(const ElasticityOperator& op);

// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double spectral_norm_sym(const Eigen::MatrixXd& s);

}  // namespace pricelab

#endif
