#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pricelab/algorithms.hpp"

using namespace pricelab;

namespace {

FeatureMatrix identity_features(int d) {
  return FeatureMatrix::create(Eigen::MatrixXd::Identity(d, d), 1);
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("attribute box construction and validation") {
  AttributeBox box = AttributeBox::symmetric(vec3(1, 2, 3), 0.5);
  CHECK(box.lower.isApprox(Eigen::VectorXd::Constant(3, -0.5)));
  CHECK(box.upper.isApprox(Eigen::VectorXd::Constant(3, 0.5)));
  CHECK(box.absolute_bounds().lower.isApprox(vec3(0.5, 1.5, 2.5)));

  AttributeBox bad = box;
  bad.lower[0] = 0.1;  // baseline no longer feasible
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = box;
  bad.upper = Eigen::VectorXd::Constant(2, 1.0);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sphere samples are unit vectors with symmetric direction") {
  Rng rng(1);
  for (int d : {1, 2, 6, 40})
    for (int k = 0; k < 20; ++k)
      CHECK(sample_unit_sphere(d, rng).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(sample_unit_sphere(0, rng), ConfigError);

  // d = 1: the sample is +-1 with equal probability.
  Rng sign_rng(2);
  int positives = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k)
    if (sample_unit_sphere(1, sign_rng)[0] > 0) ++positives;
  CHECK(std::abs(positives / static_cast<double>(n) - 0.5) < 0.01);

  // d = 6: the mean direction vanishes.
  Rng mean_rng(3);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
  const int m = 200000;
  for (int k = 0; k < m; ++k) mean += sample_unit_sphere(6, mean_rng);
  CHECK((mean / m).norm() < 0.005);
}

TEST_CASE("ball projection is exact") {
  const Eigen::VectorXd center = vec3(1, 1, 1);
  const Eigen::VectorXd inside = vec3(1.1, 1.0, 0.9);
  CHECK(project_onto_ball(inside, center, 0.5) == inside);

  const Eigen::VectorXd outside = vec3(3, 1, 1);
  const Eigen::VectorXd proj = project_onto_ball(outside, center, 0.5);
  CHECK((proj - center).norm() == doctest::Approx(0.5));
  CHECK(proj.isApprox(vec3(1.5, 1, 1)));
}

TEST_CASE("gradient estimators are the documented arithmetic") {
  const Eigen::VectorXd xi = vec3(1, 0, 0);
  CHECK(estimate_gradient_one_point(3, 2.0, 0.5, xi)
            .isApprox(12.0 * xi));
  CHECK(estimate_gradient_two_point(3, 5.0, 1.0, 0.5, xi)
            .isApprox(12.0 * xi));
  CHECK_THROWS_AS(estimate_gradient_one_point(3, 2.0, 0.0, xi), ConfigError);
  CHECK_THROWS_AS(estimate_gradient_two_point(3, 2.0, 1.0, 0.0, xi),
                  ConfigError);
}

TEST_CASE("one- and two-point estimators are unbiased for a quadratic") {
  // f(theta) = b'theta - theta'A theta; for a quadratic, sphere smoothing
  // shifts only the constant, so the smoothed gradient equals the true one.
  Eigen::MatrixXd a(3, 3);
  a << 0.6, 0.2, 0.0, 0.2, 0.5, 0.1, 0.0, 0.1, 0.4;
  const Eigen::VectorXd b = vec3(4, 3, 2);
  const Eigen::VectorXd theta = vec3(10, 10, 10);
  const auto f = [&](const Eigen::VectorXd& t) {
    return b.dot(t) - t.dot(a * t);
  };
  const Eigen::VectorXd true_grad = b - 2.0 * (a * theta);
  const double eps = 0.5;
  const int n = 1000000;

  Rng rng(5);
  Eigen::VectorXd one_point = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd two_point = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd xi = sample_unit_sphere(3, rng);
    one_point += estimate_gradient_one_point(3, f(theta + eps * xi), eps, xi);
    two_point += estimate_gradient_two_point(3, f(theta + eps * xi),
                                             f(theta - eps * xi), eps, xi);
  }
  one_point /= n;
  two_point /= n;

  // The one-point estimate carries noise proportional to the absolute
  // revenue level (|f| ~ 120 here), so even 1e6 samples only pin the mean
  // to a few percent of the gradient norm.
  CHECK((one_point - true_grad).norm() <= 0.12 * true_grad.norm());
  // The two-point difference cancels the level term entirely.
  CHECK((two_point - true_grad).norm() <= 0.005 * true_grad.norm());
}

TEST_CASE("adept posts the perturbed point and applies the clipped update") {
  const FeatureMatrix u = identity_features(3);
  AdeptOptions opt;
  opt.eta = 0.01;
  opt.epsilon = 0.25;
  AdeptLearner learner(u, AttributeBox::symmetric(vec3(1, 1, 1), 2.0), opt);

  Rng rng(7);
  const Eigen::VectorXd theta_before = learner.theta();
  const Eigen::VectorXd p = learner.propose(rng);
  const Eigen::VectorXd xi = learner.last_direction();
  CHECK(xi.norm() == doctest::Approx(1.0));
  // Posted price is U (theta_base + theta + eps xi), unclipped by default.
  CHECK(p.isApprox(vec3(1, 1, 1) + theta_before + opt.epsilon * xi, 1e-12));

  const double y = 3.7;
  learner.observe(y);
  // theta <- clip(theta + eta (d y / eps) xi).
  const Eigen::VectorXd expected =
      AttributeBounds{Eigen::VectorXd::Constant(3, -2.0),
                      Eigen::VectorXd::Constant(3, 2.0)}
          .clip(theta_before + opt.eta * (3.0 * y / opt.epsilon) * xi);
  CHECK(learner.theta().isApprox(expected, 1e-12));

  SUBCASE("zero revenue leaves the point unchanged") {
    const Eigen::VectorXd held = learner.theta();
    learner.propose(rng);
    learner.observe(0.0);
    CHECK(learner.theta() == held);
  }
}

TEST_CASE("adept iterates stay in the box under adversarial revenues") {
  const FeatureMatrix u = identity_features(4);
  AdeptOptions opt;
  opt.eta = 0.5;
  opt.epsilon = 0.1;
  const AttributeBox box =
      AttributeBox::symmetric(Eigen::VectorXd::Zero(4), 1.0);
  AdeptLearner learner(u, box, opt);
  Rng rng(8);
  for (int t = 0; t < 500; ++t) {
    learner.propose(rng);
    learner.observe((t % 2 ? -1 : 1) * 1e6 * rng.uniform());
    CHECK(box.offset_bounds().contains(learner.theta(), 1e-12));
  }
  // The perturbed point sits exactly epsilon from the pre-update iterate.
  const Eigen::VectorXd held = learner.theta();
  learner.propose(rng);
  CHECK((learner.last_perturbed() - held).norm() ==
        doctest::Approx(opt.epsilon));
  learner.observe(0.0);
}

TEST_CASE("strict clipping keeps the posted point feasible") {
  const FeatureMatrix u = identity_features(3);
  AdeptOptions opt;
  opt.eta = 0.3;
  opt.epsilon = 0.5;
  opt.strict_clip = true;
  const AttributeBox box =
      AttributeBox::symmetric(Eigen::VectorXd::Zero(3), 0.2);
  AdeptLearner learner(u, box, opt);
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    learner.propose(rng);
    CHECK(box.offset_bounds().contains(learner.last_perturbed(), 1e-12));
    learner.observe(rng.normal());
  }
}

TEST_CASE("adept with zero exploration radius holds its point") {
  const FeatureMatrix u = identity_features(2);
  AdeptOptions opt;
  opt.eta = 0.1;
  opt.epsilon = 0.0;
  AdeptLearner learner(
      u, AttributeBox::symmetric(Eigen::VectorXd::Constant(2, 5.0), 1.0),
      opt);
  Rng rng(10);
  const Eigen::VectorXd p1 = learner.propose(rng);
  CHECK(p1.isApprox(Eigen::VectorXd::Constant(2, 5.0)));
  CHECK_NOTHROW(learner.observe(123.0));
  CHECK(learner.theta().norm() == 0.0);
  CHECK(learner.propose(rng).isApprox(p1));
}

TEST_CASE("two-point adept pairs mirrored probes around a frozen point") {
  const FeatureMatrix u = identity_features(3);
  AdeptOptions opt;
  opt.eta = 0.01;
  opt.epsilon = 0.2;
  opt.two_point = true;
  AdeptLearner learner(u, AttributeBox::symmetric(vec3(0, 0, 0), 3.0), opt);
  Rng rng(11);

  const Eigen::VectorXd theta0 = learner.theta();
  const Eigen::VectorXd p_plus = learner.propose(rng);
  const Eigen::VectorXd xi = learner.last_direction();
  learner.observe(2.0);
  CHECK(learner.theta() == theta0);  // update waits for the minus leg
  const Eigen::VectorXd p_minus = learner.propose(rng);
  CHECK((p_plus - p_minus).isApprox(2.0 * opt.epsilon * xi, 1e-12));
  learner.observe(-1.0);
  const Eigen::VectorXd expected =
      theta0 + opt.eta * (3.0 / (2.0 * opt.epsilon)) * (2.0 - (-1.0)) * xi;
  CHECK(learner.theta().isApprox(expected, 1e-12));
}

TEST_CASE("adept rejects a nonpositive step size") {
  const FeatureMatrix u = identity_features(2);
  AdeptOptions opt;
  opt.eta = 0.0;
  opt.epsilon = 0.1;
  CHECK_THROWS_AS(
      AdeptLearner(u, AttributeBox::symmetric(Eigen::VectorXd::Zero(2), 1.0),
                   opt),
      ConfigError);
}

TEST_CASE("gdg works in an orthonormal basis of the feature span") {
  Eigen::MatrixXd entries(4, 2);
  entries << 1, 0, 1, 1, 0, 1, 1, 0;
  const FeatureMatrix u = FeatureMatrix::create(entries, 1);
  PriceBall ball;
  ball.center = entries * Eigen::VectorXd::Constant(2, 2.0);
  ball.radius = 3.0;
  GdgOptions opt;
  opt.eta = 0.05;
  opt.epsilon = 0.2;
  GdgLearner learner(u, ball, opt);

  const Eigen::MatrixXd& o = learner.span();
  CHECK((o.transpose() * o - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  // span(O) contains the columns of U.
  CHECK((entries - o * (o.transpose() * entries)).cwiseAbs().maxCoeff() <
        1e-12);

  Rng rng(12), replay(12);
  const Eigen::VectorXd x0 = learner.latent();
  const Eigen::VectorXd p = learner.propose(rng);
  const Eigen::VectorXd xi = sample_unit_sphere(2, replay);
  CHECK(p.isApprox(o * (x0 + opt.epsilon * xi), 1e-9));

  const double y = 4.2;
  learner.observe(y);
  const Eigen::VectorXd expected = project_onto_ball(
      x0 + opt.eta * (2.0 * y / opt.epsilon) * xi, o.transpose() * ball.center,
      ball.radius);
  CHECK(learner.latent().isApprox(expected, 1e-9));

  // The latent iterate never leaves the ball image.
  for (int t = 0; t < 200; ++t) {
    learner.propose(rng);
    learner.observe(1e5 * rng.normal());
    CHECK((learner.latent() - o.transpose() * ball.center).norm() <=
          ball.radius + 1e-9);
  }
}

TEST_CASE("gdg rejects a rank-deficient feature matrix") {
  Eigen::MatrixXd entries(3, 2);
  entries << 1, 1, 1, 1, 1, 1;  // rank 1
  const FeatureMatrix u = FeatureMatrix::create(entries, 1);
  PriceBall ball;
  ball.center = Eigen::VectorXd::Ones(3);
  ball.radius = 1.0;
  GdgOptions opt;
  opt.eta = 0.1;
  opt.epsilon = 0.1;
  CHECK_THROWS_AS(GdgLearner(u, ball, opt), ConfigError);
}

TEST_CASE("explore-exploit recovers a noiseless quadratic") {
  const FeatureMatrix u = identity_features(2);
  AttributeBox box;
  box.theta_base = Eigen::VectorXd::Constant(2, 2.0);
  box.lower = Eigen::VectorXd::Constant(2, -2.0);
  box.upper = Eigen::VectorXd::Constant(2, 2.0);
  EeOptions opt;
  opt.ridge_lambda = 1e-10;
  EeLearner learner(u, box, opt);
  REQUIRE(learner.explore_len() == 50);
  REQUIRE(learner.phase_len() == 500);

  Eigen::MatrixXd a(2, 2);
  a << 0.8, 0.2, 0.2, 0.6;
  Eigen::VectorXd b(2);
  b << 3.0, 2.5;
  const auto f = [&](const Eigen::VectorXd& theta) {
    return 1.5 + b.dot(theta) - theta.dot(a * theta);
  };

  Rng rng(13);
  for (int t = 0; t < 60; ++t) {
    // U is the identity, so the posted price vector is theta itself.
    const Eigen::VectorXd theta = learner.propose(rng);
    learner.observe(f(theta));
  }
  CHECK(learner.surrogate_a() == doctest::Approx(1.5).epsilon(1e-6));
  CHECK((learner.surrogate_b() - b).norm() < 1e-6);
  CHECK((learner.surrogate_c() - 2.0 * a).norm() < 1e-6);
  // Interior maximizer theta* = A^{-1} b / 2.
  const Eigen::VectorXd star = a.ldlt().solve(b) / 2.0;
  CHECK((learner.exploit_point() - star).norm() < 1e-6);
  // Exploit rounds replay the fitted maximizer.
  CHECK(learner.propose(rng).isApprox(learner.exploit_point(), 1e-12));
}

TEST_CASE("explore-exploit degenerate fits fall back to the midpoint") {
  const FeatureMatrix u = identity_features(2);
  AttributeBox box;
  box.theta_base = Eigen::VectorXd::Constant(2, 3.0);
  box.lower = Eigen::VectorXd::Constant(2, -1.0);
  box.upper = Eigen::VectorXd::Constant(2, 1.0);

  SUBCASE("constant revenue carries no slope information") {
    EeLearner learner(u, box, EeOptions{});
    Rng rng(14);
    for (int t = 0; t < learner.explore_len(); ++t) {
      learner.propose(rng);
      learner.observe(7.0);
    }
    CHECK((learner.exploit_point() - box.absolute_bounds().midpoint())
              .norm() < 1e-6);
  }

  SUBCASE("infinite ridge shrinks every slope to zero") {
    EeOptions opt;
    opt.ridge_lambda = 1e12;
    EeLearner learner(u, box, opt);
    Rng rng(15);
    for (int t = 0; t < learner.explore_len(); ++t) {
      const Eigen::VectorXd theta = learner.propose(rng);
      learner.observe(theta.sum());
    }
    CHECK(learner.surrogate_b().norm() < 1e-6);
    CHECK((learner.exploit_point() - box.absolute_bounds().midpoint())
              .norm() < 1e-6);
  }

  SUBCASE("bad phase configuration is rejected") {
    EeOptions opt;
    opt.explore_len = 10;
    opt.phase_len = 5;
    CHECK_THROWS_AS(EeLearner(u, box, opt), ConfigError);
  }
}

TEST_CASE("find_price solves the regularized inverse-pricing problem") {
  Eigen::MatrixXd entries(4, 2);
  entries << 1, 0, 0, 1, 1, 1, 1, 0;
  const FeatureMatrix u = FeatureMatrix::create(entries, 1);
  PriceBall ball;
  ball.center = Eigen::VectorXd::Constant(4, 2.0);
  ball.radius = 1.5;

  SUBCASE("zero radius returns the singleton") {
    PriceBall point = ball;
    point.radius = 0.0;
    CHECK(find_price(Eigen::VectorXd::Ones(2), u, point,
                     Eigen::VectorXd::Zero(4)) == point.center);
  }

  SUBCASE("an exactly attainable target anchored at p_prev is a fixed point") {
    Eigen::VectorXd p_star = ball.center;
    p_star[0] += 0.5;
    p_star[2] -= 0.3;
    const Eigen::VectorXd x_target = entries.transpose() * p_star;
    const Eigen::VectorXd p = find_price(x_target, u, ball, p_star);
    CHECK((p - p_star).norm() < 1e-6);
  }

  SUBCASE("matches a brute-force grid search") {
    Rng rng(16);
    const Eigen::VectorXd x_target = rng.uniform_vector(2, 2.0, 6.0);
    const Eigen::VectorXd p_prev = ball.center;
    const double mu = 1e-3;
    const Eigen::VectorXd p = find_price(x_target, u, ball, p_prev, mu);
    CHECK((p - ball.center).norm() <= ball.radius + 1e-9);

    const auto objective = [&](const Eigen::VectorXd& q) {
      return (entries.transpose() * q - x_target).squaredNorm() +
             mu * (q - p_prev).squaredNorm();
    };
    double best = std::numeric_limits<double>::infinity();
    const double pitch = 0.05;
    Eigen::VectorXd q(4);
    for (q[0] = 0.5; q[0] <= 3.5; q[0] += pitch)
      for (q[1] = 0.5; q[1] <= 3.5; q[1] += pitch)
        for (q[2] = 0.5; q[2] <= 3.5; q[2] += pitch)
          for (q[3] = 0.5; q[3] <= 3.5; q[3] += pitch)
            if ((q - ball.center).norm() <= ball.radius)
              best = std::min(best, objective(q));
    // The solver must do at least as well as the best grid point.
    CHECK(objective(p) <= best + 1e-9);
  }

  SUBCASE("negative radius is rejected") {
    PriceBall bad = ball;
    bad.radius = -1.0;
    CHECK_THROWS_AS(find_price(Eigen::VectorXd::Ones(2), u, bad,
                               Eigen::VectorXd::Zero(4)),
                    ConfigError);
  }
}

TEST_CASE("opok projection shrinks toward zero and respects the ball") {
  Eigen::MatrixXd entries(3, 2);
  entries << 1, 0, 0, 1, 1, 1;
  const FeatureMatrix u = FeatureMatrix::create(entries, 1);
  PriceBall ball;
  ball.center = Eigen::VectorXd::Constant(3, 2.0);
  ball.radius = 1.0;

  const Eigen::VectorXd x_center = entries.transpose() * ball.center;
  CHECK(opok_projection(x_center, 1.0, u, ball).norm() < 1e-9);
  // The center's own latent image is a fixed point of the alpha = 0 map.
  CHECK((opok_projection(x_center, 0.0, u, ball) - x_center).norm() < 1e-6);
}

TEST_CASE("opok posts feasible prices and runs deterministically") {
  Eigen::MatrixXd entries(3, 2);
  entries << 1, 0, 0, 1, 1, 1;
  const FeatureMatrix u = FeatureMatrix::create(entries, 1);
  PriceBall ball;
  ball.center = Eigen::VectorXd::Constant(3, 2.0);
  ball.radius = 1.0;
  OpokOptions opt;
  opt.eta = 1e-3;
  opt.delta = 0.1;
  opt.alpha = 0.01;

  OpokLearner a(u, ball, opt), b(u, ball, opt);
  Rng ra(17), rb(17);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd pa = a.propose(ra);
    const Eigen::VectorXd pb = b.propose(rb);
    CHECK((pa - ball.center).norm() <= ball.radius + 1e-9);
    CHECK(pa == pb);
    const double y = pa.sum();
    a.observe(y);
    b.observe(y);
  }
  CHECK(a.latent() == b.latent());

  OpokOptions bad = opt;
  bad.eta = 0.0;
  CHECK_THROWS_AS(OpokLearner(u, ball, bad), ConfigError);
}
