#include "pricelab/market_model.hpp"

#include <cmath>
#include <cstdio>
#include <deque>

namespace pricelab {

double spectral_norm_sym(const Eigen::MatrixXd& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

FeatureMatrix FeatureMatrix::create(Eigen::MatrixXd entries, int level_cap) {
  if (entries.rows() < 1 || entries.cols() < 1)
    throw ConfigError("FeatureMatrix: need N >= 1 and d >= 1");
  if (level_cap < 1) throw ConfigError("FeatureMatrix: level cap must be >= 1");
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      const double e = entries(i, j);
      if (e < 0 || e > level_cap || e != std::floor(e))
        throw ConfigError("FeatureMatrix: entry (" + std::to_string(i) + "," +
                          std::to_string(j) + ") = " + format_g9(e) +
                          " is not an integer in {0,...," +
                          std::to_string(level_cap) + "}");
      row_sum += e;
    }
    if (row_sum == 0.0)
      throw ConfigError("FeatureMatrix: row " + std::to_string(i) +
                        " has no active attribute");
  }
  return FeatureMatrix{std::move(entries), level_cap};
}

ElasticityCoefficients ElasticityCoefficients::uniform(int n, double value) {
  ElasticityCoefficients a;
  a.self = Eigen::VectorXd::Constant(n, value);
  a.cross = Eigen::MatrixXd::Constant(n, n, value);
  a.cross.diagonal().setZero();
  return a;
}

void MarketState::validate(const FeatureMatrix& u) const {
  const Eigen::Index d = V.rows();
  if (V.cols() != d || z.size() != d)
    throw ConfigError("MarketState: dimension mismatch between z and V");
  if (u.n_attributes() != d)
    throw ConfigError("MarketState: V dimension does not match feature matrix");
  const double vnorm = V.cwiseAbs().maxCoeff();
  if ((V - V.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(vnorm, 1.0))
    throw AssumptionViolation("MarketState: V is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V, Eigen::EigenvaluesOnly);
  const double snorm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -kPsdTol * snorm)
    throw AssumptionViolation("MarketState: V is not PSD (min eigenvalue " +
                              format_g9(es.eigenvalues().minCoeff()) + ")");
  if (alpha.self.minCoeff() < 0 || alpha.cross.minCoeff() < 0)
    throw AssumptionViolation("MarketState: negative elasticity coefficient");
  // A2: nonnegative cross V-inner products between distinct rows.
  const Eigen::MatrixXd g = u.entries * V * u.entries.transpose();
  const double gtol = 1e-9 * std::max(g.cwiseAbs().maxCoeff(), 1.0);
  for (int i = 0; i < u.n_products(); ++i)
    for (int j = i + 1; j < u.n_products(); ++j)
      if (g(i, j) < -gtol)
        throw AssumptionViolation(
            "MarketState: negative V-inner product between rows " +
            std::to_string(i) + " and " + std::to_string(j) + " (" +
            format_g9(g(i, j)) + ")");
}

bool AttributeBounds::contains(const Eigen::VectorXd& theta, double tol) const {
  return (theta.array() >= lower.array() - tol).all() &&
         (theta.array() <= upper.array() + tol).all();
}

Eigen::VectorXd AttributeBounds::clip(const Eigen::VectorXd& theta) const {
  return theta.cwiseMax(lower).cwiseMin(upper);
}

double v_inner(const Eigen::VectorXd& u_i, const Eigen::VectorXd& u_j,
               const Eigen::MatrixXd& v) {
  if (u_i.size() != v.rows() || u_j.size() != v.cols())
    throw ConfigError("v_inner: dimension mismatch");
  return u_i.dot(v * u_j);
}

Eigen::VectorXd prices_from_attributes(const FeatureMatrix& u,
                                       const Eigen::VectorXd& theta) {
  if (theta.size() != u.n_attributes())
    throw ConfigError("prices_from_attributes: theta has wrong length");
  return u.entries * theta;
}

ElasticityOperator assemble_elasticity_operator(const FeatureMatrix& u,
                                                const MarketState& state) {
  const int n = u.n_products();
  if (state.alpha.self.size() != n || state.alpha.cross.rows() != n)
    throw ConfigError("assemble_elasticity_operator: alpha dimension mismatch");
  if (state.alpha.self.minCoeff() < 0)
    throw AssumptionViolation("assemble_elasticity_operator: negative alpha_ii");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && state.alpha.cross(i, j) < 0)
        throw AssumptionViolation(
            "assemble_elasticity_operator: negative alpha for pair (" +
            std::to_string(i) + "," + std::to_string(j) + ")");

  // Gram matrix of V-inner products between product rows.
  const Eigen::MatrixXd g = u.entries * state.V * u.entries.transpose();

  ElasticityOperator op;
  op.weights = Eigen::MatrixXd::Zero(n, n);
  const double wtol = 1e-9 * std::max(g.cwiseAbs().maxCoeff(), 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w =
          0.5 * (state.alpha.cross(i, j) + state.alpha.cross(j, i)) * g(i, j);
      if (w < -wtol)
        throw AssumptionViolation(
            "assemble_elasticity_operator: negative edge weight for pair (" +
            std::to_string(i) + "," + std::to_string(j) + "): " +
            format_g9(w));
      const double wc = std::max(w, 0.0);
      op.weights(i, j) = wc;
      op.weights(j, i) = wc;
    }
  }
  op.self_part = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    op.self_part(i, i) = state.alpha.self[i] * g(i, i);
  const Eigen::VectorXd degree = op.weights.rowwise().sum();
  op.laplacian_part = Eigen::MatrixXd(degree.asDiagonal()) - op.weights;
  op.m = op.self_part + op.laplacian_part;
  return op;
}

Eigen::VectorXd demand(const FeatureMatrix& u, const MarketState& state,
                       const Eigen::VectorXd& p, const Eigen::VectorXd& eps) {
  const int n = u.n_products();
  if (p.size() != n || eps.size() != n)
    throw ConfigError("demand: price/noise vector has wrong length");
  const Eigen::MatrixXd g = u.entries * state.V * u.entries.transpose();
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) {
    double qi = u.entries.row(i).dot(state.z);
    qi -= state.alpha.self[i] * g(i, i) * p[i];
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;  // the (p_j - p_i) term vanishes at j == i
      qi += state.alpha.cross(i, j) * g(i, j) * (p[j] - p[i]);
    }
    q[i] = qi + eps[i];
  }
  return q;
}

double realized_revenue(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ConfigError("realized_revenue: size mismatch");
  return q.dot(p);
}

RevenueQuadratic revenue_quadratic(const FeatureMatrix& u,
                                   const MarketState& state) {
  const ElasticityOperator op = assemble_elasticity_operator(u, state);
  RevenueQuadratic quad;
  const Eigen::MatrixXd a = u.entries.transpose() * op.m * u.entries;
  quad.a = 0.5 * (a + a.transpose());
  quad.b = u.entries.transpose() * (u.entries * state.z);
  return quad;
}

Eigen::VectorXd static_optimum(const RevenueQuadratic& quad,
                               const AttributeBounds& box) {
  const Eigen::Index d = quad.b.size();
  if (box.lower.size() != d || box.upper.size() != d)
    throw ConfigError("static_optimum: box dimension mismatch");
  if ((box.lower.array() > box.upper.array()).any())
    throw ConfigError("static_optimum: empty box (lower > upper)");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quad.a,
                                                    Eigen::EigenvaluesOnly);
  const double lam_max = es.eigenvalues().maxCoeff();
  const double snorm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -kPsdTol * snorm)
    throw AssumptionViolation("static_optimum: A is not PSD (min eigenvalue " +
                              format_g9(es.eigenvalues().minCoeff()) + ")");

  const double step = 1.0 / (2.0 * std::max(lam_max, 0.0) + 1e-12);
  Eigen::VectorXd theta = box.midpoint();
  constexpr int kMaxIter = 100000;
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd grad = quad.b - 2.0 * (quad.a * theta);
    const Eigen::VectorXd next = box.clip(theta + step * grad);
    const double move = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    if (move < 1e-10) break;
  }
  return theta;
}

PdReport pd_characterization(const ElasticityOperator& op) {
  const int n = static_cast<int>(op.m.rows());
  PdReport report;

  // Connected components of the weight graph (edges where w > 0).
  const double edge_tol =
      1e-12 * std::max(op.weights.cwiseAbs().maxCoeff(), 1.0);
  std::vector<int> label(n, -1);
  for (int start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    const int comp = static_cast<int>(report.components.size());
    report.components.emplace_back();
    std::deque<int> frontier{start};
    label[start] = comp;
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop_front();
      report.components[comp].push_back(i);
      for (int j = 0; j < n; ++j) {
        if (label[j] < 0 && op.weights(i, j) > edge_tol) {
          label[j] = comp;
          frontier.push_back(j);
        }
      }
    }
  }

  // PD iff every component contains a positive self-part diagonal.
  report.is_pd = true;
  const double diag_tol =
      1e-12 * std::max(op.self_part.cwiseAbs().maxCoeff(), 1.0);
  for (const auto& comp : report.components) {
    bool anchored = false;
    for (int i : comp)
      if (op.self_part(i, i) > diag_tol) anchored = true;
    if (!anchored) report.is_pd = false;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.m,
                                                    Eigen::EigenvaluesOnly);
  const double snorm = es.eigenvalues().cwiseAbs().maxCoeff();
  report.is_psd = es.eigenvalues().minCoeff() >= -kPsdTol * std::max(snorm, 1.0);

  report.gershgorin_dominant = true;
  for (int i = 0; i < n; ++i) {
    const double off = op.m.row(i).cwiseAbs().sum() - std::abs(op.m(i, i));
    if (!(op.m(i, i) > 0.0) || op.m(i, i) - off <= diag_tol)
      report.gershgorin_dominant = false;
  }
  return report;
}

}  // namespace pricelab
