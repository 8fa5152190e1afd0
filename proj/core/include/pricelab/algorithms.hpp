#ifndef PRICELAB_ALGORITHMS_HPP
#define PRICELAB_ALGORITHMS_HPP

#include <memory>
#include <string>
#include <vector>

#include "pricelab/market_model.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

// Box of attribute-price offsets around a feasible baseline:
// lower <= 0 <= upper elementwise.
struct AttributeBox {
  Eigen::VectorXd theta_base;
  Eigen::VectorXd lower;  // theta_min - theta_base
  Eigen::VectorXd upper;  // theta_max - theta_base

  static AttributeBox symmetric(Eigen::VectorXd theta_base, double radius);
  void validate() const;
  AttributeBounds offset_bounds() const { return {lower, upper}; }
  AttributeBounds absolute_bounds() const {
    return {theta_base + lower, theta_base + upper};
  }
};

// Euclidean price ball ||p - center||_2 <= radius.
struct PriceBall {
  Eigen::VectorXd center;
  double radius = 0.0;
};

Eigen::VectorXd sample_unit_sphere(int d, Rng& rng);

Eigen::VectorXd project_onto_ball(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& center,
                                  double radius);

// One-point bandit gradient estimate of the sphere-smoothed revenue
// (ascent convention): (d * y / eps) * xi.
Eigen::VectorXd estimate_gradient_one_point(int d, double y, double eps,
                                            const Eigen::VectorXd& xi);

// Two-point variant (d / 2eps) (y_plus - y_minus) xi.
Eigen::VectorXd estimate_gradient_two_point(int d, double y_plus,
                                            double y_minus, double eps,
                                            const Eigen::VectorXd& xi);

// argmin over p in ball of ||U'p - x_target||^2 + mu ||p - p_prev||^2,
// by projected gradient to 1e-8 stationarity.
Eigen::VectorXd find_price(const Eigen::VectorXd& x_target,
                           const FeatureMatrix& u, const PriceBall& ball,
                           const Eigen::VectorXd& p_prev, double mu = 1e-3);

// (1 - alpha) * U' p_hat where p_hat = find_price(x, u, ball, ball.center):
// projection of x onto the latent image of the ball, shrunk toward 0.
Eigen::VectorXd opok_projection(const Eigen::VectorXd& x, double alpha,
                                const FeatureMatrix& u, const PriceBall& ball);

// Online learner: propose prices, observe this round's revenue, update.
// Single-owner mutable state machine; one propose per observe.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual Eigen::VectorXd propose(Rng& rng) = 0;
  virtual void observe(double revenue) = 0;
  virtual std::string name() const = 0;
  // Small diagnostic for the run summary: current point and counters.
  virtual std::string snapshot_json() const = 0;
};

struct AdeptOptions {
  double eta = 0.0;
  double epsilon = 0.0;
  bool strict_clip = false;  // clip the perturbed point too (off by default)
  bool two_point = false;    // paired +/- rounds; unbiasedness test path
};

// Attribute-space one-point bandit gradient ascent with box clipping.
class AdeptLearner : public Learner {
 public:
  AdeptLearner(FeatureMatrix u, AttributeBox box, AdeptOptions opt);

  Eigen::VectorXd propose(Rng& rng) override;
  void observe(double revenue) override;
  std::string name() const override { return "adept"; }
  std::string snapshot_json() const override;

  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& last_direction() const { return xi_; }
  const Eigen::VectorXd& last_perturbed() const { return tilde_; }

 private:
  FeatureMatrix u_;
  AttributeBox box_;
  AdeptOptions opt_;
  Eigen::VectorXd theta_;  // offset from theta_base, kept inside the box
  Eigen::VectorXd xi_;
  Eigen::VectorXd tilde_;
  double pending_plus_ = 0.0;
  bool minus_leg_ = false;
  long round_ = 0;
};

struct GdgOptions {
  double eta = 0.0;
  double epsilon = 0.0;
};

// One-point gradient ascent in the orthonormal span of U, feasible set the
// price ball mapped into that span (a Euclidean ball, projected exactly).
class GdgLearner : public Learner {
 public:
  GdgLearner(FeatureMatrix u, PriceBall ball, GdgOptions opt);

  Eigen::VectorXd propose(Rng& rng) override;
  void observe(double revenue) override;
  std::string name() const override { return "gdg"; }
  std::string snapshot_json() const override;

  const Eigen::MatrixXd& span() const { return o_; }
  const Eigen::VectorXd& latent() const { return x_; }

 private:
  FeatureMatrix u_;
  PriceBall ball_;
  GdgOptions opt_;
  Eigen::MatrixXd o_;        // N x d, orthonormal columns
  Eigen::VectorXd x_center_; // O' * ball center
  Eigen::VectorXd x_;
  Eigen::VectorXd xi_;
  long round_ = 0;
};

struct EeOptions {
  int explore_len = 0;    // m; 0 -> max(50, 5 * n_surrogate_params)
  int phase_len = 0;      // 0 -> 10 * explore_len
  double ridge_lambda = 1.0;
};

// Quadratic surrogate of revenue over theta: explore uniformly in the box,
// ridge-fit y ~ (1, theta, triu(theta theta')), project the quadratic part
// PSD, then play the surrogate maximizer for the rest of the phase.
class EeLearner : public Learner {
 public:
  EeLearner(FeatureMatrix u, AttributeBox box, EeOptions opt);

  Eigen::VectorXd propose(Rng& rng) override;
  void observe(double revenue) override;
  std::string name() const override { return "ee"; }
  std::string snapshot_json() const override;

  int explore_len() const { return opt_.explore_len; }
  int phase_len() const { return opt_.phase_len; }
  // Fitted surrogate r(theta) = a + b'theta - 1/2 theta'C theta.
  double surrogate_a() const { return fit_a_; }
  const Eigen::VectorXd& surrogate_b() const { return fit_b_; }
  const Eigen::MatrixXd& surrogate_c() const { return fit_c_; }
  const Eigen::VectorXd& exploit_point() const { return exploit_theta_; }

 private:
  void fit_surrogate();

  FeatureMatrix u_;
  AttributeBox box_;
  EeOptions opt_;
  AttributeBounds abs_box_;
  int round_in_phase_ = 0;
  long round_ = 0;
  int phase_ = 0;
  std::vector<Eigen::VectorXd> buffer_theta_;
  std::vector<double> buffer_y_;
  Eigen::VectorXd pending_theta_;
  double fit_a_ = 0.0;
  Eigen::VectorXd fit_b_;
  Eigen::MatrixXd fit_c_;
  Eigen::VectorXd exploit_theta_;
  bool warned_underdetermined_ = false;
};

struct OpokOptions {
  double eta = 0.0;
  double delta = 0.0;
  double alpha = 0.0;  // shrink factor; 0 -> 1/T set by the harness
  double mu = 1e-3;
};

// Latent-space one-point method with FindPrice/Projection subroutines.
class OpokLearner : public Learner {
 public:
  OpokLearner(FeatureMatrix u, PriceBall ball, OpokOptions opt);

  Eigen::VectorXd propose(Rng& rng) override;
  void observe(double revenue) override;
  std::string name() const override { return "opok"; }
  std::string snapshot_json() const override;

  const Eigen::VectorXd& latent() const { return x_; }
  const Eigen::VectorXd& last_price() const { return p_prev_; }

 private:
  FeatureMatrix u_;
  PriceBall ball_;
  OpokOptions opt_;
  Eigen::VectorXd x_;
  Eigen::VectorXd xi_;
  Eigen::VectorXd p_prev_;
  long round_ = 0;
};

// Posts the ball center every round; runtime-measurement control.
class NoopLearner : public Learner {
 public:
  explicit NoopLearner(Eigen::VectorXd prices) : p_(std::move(prices)) {}
  Eigen::VectorXd propose(Rng&) override { return p_; }
  void observe(double) override {}
  std::string name() const override { return "noop"; }
  std::string snapshot_json() const override { return "{}"; }

 private:
  Eigen::VectorXd p_;
};

}  // namespace pricelab

#endif
