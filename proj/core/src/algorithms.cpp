#include "pricelab/algorithms.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace pricelab {

AttributeBox AttributeBox::symmetric(Eigen::VectorXd theta_base,
                                     double radius) {
  const Eigen::Index d = theta_base.size();
  AttributeBox box;
  box.theta_base = std::move(theta_base);
  box.lower = Eigen::VectorXd::Constant(d, -radius);
  box.upper = Eigen::VectorXd::Constant(d, radius);
  box.validate();
  return box;
}

void AttributeBox::validate() const {
  if (lower.size() != theta_base.size() || upper.size() != theta_base.size())
    throw ConfigError("AttributeBox: dimension mismatch");
  if ((lower.array() > 0).any() || (upper.array() < 0).any())
    throw ConfigError("AttributeBox: baseline must be feasible (l <= 0 <= u)");
}

Eigen::VectorXd sample_unit_sphere(int d, Rng& rng) {
  if (d < 1) throw ConfigError("sample_unit_sphere: d must be >= 1");
  while (true) {
    const Eigen::VectorXd g = rng.normal_vector(d);
    const double norm = g.norm();
    if (norm > 0) return g / norm;
    // measure-zero all-zeros draw: resample
  }
}

Eigen::VectorXd project_onto_ball(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& center,
                                  double radius) {
  const Eigen::VectorXd delta = x - center;
  const double norm = delta.norm();
  if (norm <= radius) return x;
  return center + delta * (radius / norm);
}

Eigen::VectorXd estimate_gradient_one_point(int d, double y, double eps,
                                            const Eigen::VectorXd& xi) {
  if (eps == 0.0)
    throw ConfigError("one-point estimator undefined for epsilon = 0");
  return (static_cast<double>(d) * y / eps) * xi;
}

Eigen::VectorXd estimate_gradient_two_point(int d, double y_plus,
                                            double y_minus, double eps,
                                            const Eigen::VectorXd& xi) {
  if (eps == 0.0)
    throw ConfigError("two-point estimator undefined for epsilon = 0");
  return (static_cast<double>(d) / (2.0 * eps)) * (y_plus - y_minus) * xi;
}

Eigen::VectorXd find_price(const Eigen::VectorXd& x_target,
                           const FeatureMatrix& u, const PriceBall& ball,
                           const Eigen::VectorXd& p_prev, double mu) {
  if (ball.radius < 0) throw ConfigError("find_price: negative ball radius");
  if (ball.radius == 0.0) return ball.center;  // singleton feasible set

  const Eigen::MatrixXd& um = u.entries;
  // Lipschitz constant of the gradient: 2 (sigma_max(U)^2 + mu).
  const double sigma_sq =
      Eigen::JacobiSVD<Eigen::MatrixXd>(um).singularValues()[0];
  const double lip = 2.0 * (sigma_sq * sigma_sq + mu);
  const double step = 1.0 / lip;
  const double scale = std::max({x_target.norm(), p_prev.norm(), 1.0});

  Eigen::VectorXd p = project_onto_ball(p_prev, ball.center, ball.radius);
  constexpr int kMaxIter = 200000;
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd grad =
        2.0 * (um * (um.transpose() * p - x_target)) + 2.0 * mu * (p - p_prev);
    const Eigen::VectorXd next =
        project_onto_ball(p - step * grad, ball.center, ball.radius);
    const double move = (next - p).norm();
    p = next;
    if (move <= 1e-8 || move <= 1e-13 * scale) return p;
  }
  const double residual = (um.transpose() * p - x_target).norm();
  throw NumericError("find_price: no convergence after max iterations, "
                     "residual " + format_g9(residual));
}

Eigen::VectorXd opok_projection(const Eigen::VectorXd& x, double alpha,
                                const FeatureMatrix& u,
                                const PriceBall& ball) {
  const Eigen::VectorXd p_hat = find_price(x, u, ball, ball.center);
  return (1.0 - alpha) * (u.entries.transpose() * p_hat);
}

// ---------------------------------------------------------------------------
// ADEPT

AdeptLearner::AdeptLearner(FeatureMatrix u, AttributeBox box, AdeptOptions opt)
    : u_(std::move(u)), box_(std::move(box)), opt_(opt) {
  box_.validate();
  if (opt_.eta <= 0) throw ConfigError("AdeptLearner: eta must be > 0");
  theta_ = Eigen::VectorXd::Zero(u_.n_attributes());
  xi_ = Eigen::VectorXd::Zero(u_.n_attributes());
  tilde_ = theta_;
}

Eigen::VectorXd AdeptLearner::propose(Rng& rng) {
  const double sign = (opt_.two_point && minus_leg_) ? -1.0 : 1.0;
  if (sign > 0) xi_ = sample_unit_sphere(u_.n_attributes(), rng);
  tilde_ = theta_ + sign * opt_.epsilon * xi_;
  if (opt_.strict_clip) tilde_ = box_.offset_bounds().clip(tilde_);
  return u_.entries * (box_.theta_base + tilde_);
}

void AdeptLearner::observe(double revenue) {
  ++round_;
  // With a zero exploration radius the posted point is theta itself and no
  // gradient information exists; hold the current point instead of feeding
  // a degenerate estimate.
  if (opt_.epsilon == 0.0) return;
  const int d = u_.n_attributes();
  const AttributeBounds bounds = box_.offset_bounds();
  if (opt_.two_point) {
    if (!minus_leg_) {
      pending_plus_ = revenue;
      minus_leg_ = true;
      return;
    }
    minus_leg_ = false;
    const Eigen::VectorXd g = estimate_gradient_two_point(
        d, pending_plus_, revenue, opt_.epsilon, xi_);
    theta_ = bounds.clip(theta_ + opt_.eta * g);
    return;
  }
  // g_t = -(d y / eps) xi; theta <- clip(theta - eta g).
  const Eigen::VectorXd g =
      -estimate_gradient_one_point(d, revenue, opt_.epsilon, xi_);
  theta_ = bounds.clip(theta_ - opt_.eta * g);
}

std::string AdeptLearner::snapshot_json() const {
  std::ostringstream os;
  os << "{\"rounds\":" << round_ << ",\"theta_offset\":[";
  for (int j = 0; j < theta_.size(); ++j)
    os << (j ? "," : "") << format_g9(theta_[j]);
  os << "]}";
  return os.str();
}

// ---------------------------------------------------------------------------
// GDG

GdgLearner::GdgLearner(FeatureMatrix u, PriceBall ball, GdgOptions opt)
    : u_(std::move(u)), ball_(std::move(ball)), opt_(opt) {
  if (opt_.eta <= 0 || opt_.epsilon <= 0)
    throw ConfigError("GdgLearner: eta and epsilon must be > 0");
  const int d = u_.n_attributes();
  // Thin QR, U = OP, sign of the P diagonal fixed nonnegative.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(u_.entries);
  o_ = qr.householderQ() * Eigen::MatrixXd::Identity(u_.n_products(), d);
  const Eigen::MatrixXd p =
      qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  int rank = 0;
  const double rank_tol = 1e-10 * std::max(std::abs(p(0, 0)), 1.0);
  for (int j = 0; j < d; ++j) {
    if (std::abs(p(j, j)) > rank_tol) ++rank;
    if (p(j, j) < 0) o_.col(j) *= -1.0;
  }
  if (rank < d)
    throw ConfigError("GdgLearner: feature matrix is rank-deficient (rank " +
                      std::to_string(rank) + " < " + std::to_string(d) + ")");
  x_center_ = o_.transpose() * ball_.center;
  x_ = x_center_;
  xi_ = Eigen::VectorXd::Zero(d);
}

Eigen::VectorXd GdgLearner::propose(Rng& rng) {
  xi_ = sample_unit_sphere(u_.n_attributes(), rng);
  const Eigen::VectorXd x_tilde = x_ + opt_.epsilon * xi_;
  // The ball center lies in span(O) whenever it is a feasible price Uθ0;
  // any out-of-span component is carried through unchanged.
  const Eigen::VectorXd perp = ball_.center - o_ * x_center_;
  return o_ * x_tilde + perp;
}

void GdgLearner::observe(double revenue) {
  ++round_;
  const Eigen::VectorXd g = estimate_gradient_one_point(
      u_.n_attributes(), revenue, opt_.epsilon, xi_);
  x_ = project_onto_ball(x_ + opt_.eta * g, x_center_, ball_.radius);
}

std::string GdgLearner::snapshot_json() const {
  std::ostringstream os;
  os << "{\"rounds\":" << round_ << ",\"latent\":[";
  for (int j = 0; j < x_.size(); ++j)
    os << (j ? "," : "") << format_g9(x_[j]);
  os << "]}";
  return os.str();
}

// ---------------------------------------------------------------------------
// Explore-Exploit

namespace {

int n_surrogate_params(int d) { return 1 + d + d * (d + 1) / 2; }

Eigen::VectorXd surrogate_features(const Eigen::VectorXd& theta) {
  const int d = static_cast<int>(theta.size());
  Eigen::VectorXd phi(n_surrogate_params(d));
  int k = 0;
  phi[k++] = 1.0;
  for (int j = 0; j < d; ++j) phi[k++] = theta[j];
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) phi[k++] = theta[a] * theta[b];
  return phi;
}

}  // namespace

EeLearner::EeLearner(FeatureMatrix u, AttributeBox box, EeOptions opt)
    : u_(std::move(u)), box_(std::move(box)), opt_(opt) {
  box_.validate();
  const int d = u_.n_attributes();
  if (opt_.explore_len <= 0)
    opt_.explore_len = std::max(50, 5 * n_surrogate_params(d));
  if (opt_.phase_len <= 0) opt_.phase_len = 10 * opt_.explore_len;
  if (opt_.phase_len < opt_.explore_len)
    throw ConfigError("EeLearner: phase_len must be >= explore_len");
  if (opt_.ridge_lambda < 0)
    throw ConfigError("EeLearner: ridge_lambda must be >= 0");
  abs_box_ = box_.absolute_bounds();
  fit_b_ = Eigen::VectorXd::Zero(d);
  fit_c_ = Eigen::MatrixXd::Zero(d, d);
  exploit_theta_ = abs_box_.midpoint();
}

Eigen::VectorXd EeLearner::propose(Rng& rng) {
  if (round_in_phase_ < opt_.explore_len) {
    const int d = u_.n_attributes();
    Eigen::VectorXd theta(d);
    for (int j = 0; j < d; ++j)
      theta[j] = rng.uniform(abs_box_.lower[j], abs_box_.upper[j]);
    pending_theta_ = theta;
  } else {
    pending_theta_ = exploit_theta_;
  }
  return u_.entries * pending_theta_;
}

void EeLearner::observe(double revenue) {
  ++round_;
  if (round_in_phase_ < opt_.explore_len) {
    buffer_theta_.push_back(pending_theta_);
    buffer_y_.push_back(revenue);
    if (static_cast<int>(buffer_theta_.size()) == opt_.explore_len)
      fit_surrogate();
  }
  ++round_in_phase_;
  if (round_in_phase_ == opt_.phase_len) {
    round_in_phase_ = 0;
    ++phase_;
    buffer_theta_.clear();
    buffer_y_.clear();
  }
}

void EeLearner::fit_surrogate() {
  const int d = u_.n_attributes();
  const int n_params = n_surrogate_params(d);
  const int n = static_cast<int>(buffer_theta_.size());
  if (n < n_params && !warned_underdetermined_) {
    std::cerr << "[ee] warning: " << n << " exploration samples for "
              << n_params << " surrogate parameters; fit relies on ridge "
              << "regularization\n";
    warned_underdetermined_ = true;
  }
  Eigen::MatrixXd phi(n, n_params);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    phi.row(i) = surrogate_features(buffer_theta_[i]).transpose();
    y[i] = buffer_y_[i];
  }
  Eigen::MatrixXd gram = phi.transpose() * phi;
  for (int j = 1; j < n_params; ++j) gram(j, j) += opt_.ridge_lambda;
  gram(0, 0) += 1e-12;  // intercept excluded from the penalty
  const Eigen::VectorXd coef = gram.ldlt().solve(phi.transpose() * y);

  fit_a_ = coef[0];
  fit_b_ = coef.segment(1, d);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
  int k = 1 + d;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      if (a == b) {
        q(a, a) = coef[k];
      } else {
        q(a, b) = 0.5 * coef[k];
        q(b, a) = 0.5 * coef[k];
      }
      ++k;
    }
  // Surrogate a + b'theta + theta'Q theta == a + b'theta - 1/2 theta'C theta
  // with C = -2Q, projected PSD by eigenvalue clamping.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-2.0 * q);
  fit_c_ = es.eigenvectors() *
           es.eigenvalues().cwiseMax(0.0).asDiagonal() *
           es.eigenvectors().transpose();

  // Exploit point: maximize b'theta - 1/2 theta'C theta over the box. A
  // surrogate whose slope and curvature move the fit by a negligible
  // fraction of its level across the box carries no price information
  // (constant revenues, or ridge shrinking every slope away); keep the
  // midpoint instead of chasing rounding noise into a corner.
  const Eigen::VectorXd half = 0.5 * (abs_box_.upper - abs_box_.lower);
  const double span = fit_b_.cwiseAbs().dot(half) + half.dot(fit_c_ * half);
  if (span <= 1e-8 * std::max(1.0, std::abs(fit_a_))) {
    exploit_theta_ = abs_box_.midpoint();
  } else {
    RevenueQuadratic quad;
    quad.a = 0.5 * fit_c_;
    quad.b = fit_b_;
    exploit_theta_ = static_optimum(quad, abs_box_);
  }
}

std::string EeLearner::snapshot_json() const {
  std::ostringstream os;
  os << "{\"rounds\":" << round_ << ",\"phase\":" << phase_
     << ",\"exploit_theta\":[";
  for (int j = 0; j < exploit_theta_.size(); ++j)
    os << (j ? "," : "") << format_g9(exploit_theta_[j]);
  os << "]}";
  return os.str();
}

// ---------------------------------------------------------------------------
// OPOK

OpokLearner::OpokLearner(FeatureMatrix u, PriceBall ball, OpokOptions opt)
    : u_(std::move(u)), ball_(std::move(ball)), opt_(opt) {
  if (opt_.eta <= 0 || opt_.delta < 0)
    throw ConfigError("OpokLearner: eta must be > 0 and delta >= 0");
  x_ = u_.entries.transpose() * ball_.center;
  p_prev_ = ball_.center;
  xi_ = Eigen::VectorXd::Zero(u_.n_attributes());
}

Eigen::VectorXd OpokLearner::propose(Rng& rng) {
  xi_ = sample_unit_sphere(u_.n_attributes(), rng);
  const Eigen::VectorXd x_tilde = x_ + opt_.delta * xi_;
  p_prev_ = find_price(x_tilde, u_, ball_, p_prev_, opt_.mu);
  return p_prev_;
}

void OpokLearner::observe(double revenue) {
  ++round_;
  // Revenue-ascent form of the latent update.
  x_ = opok_projection(x_ + opt_.eta * revenue * xi_, opt_.alpha, u_, ball_);
}

std::string OpokLearner::snapshot_json() const {
  std::ostringstream os;
  os << "{\"rounds\":" << round_ << ",\"latent\":[";
  for (int j = 0; j < x_.size(); ++j)
    os << (j ? "," : "") << format_g9(x_[j]);
  os << "]}";
  return os.str();
}

}  // namespace pricelab
