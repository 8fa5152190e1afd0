#include <doctest.h>

#include <cmath>

#include "pricelab/rng.hpp"

using namespace pricelab;

TEST_CASE("same seed reproduces the exact draw sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.integer(97) == b.integer(97));
  }
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += (a.uniform() == b.uniform());
  CHECK(equal < 5);
}

TEST_CASE("child streams are independent of parent consumption") {
  Rng parent(7);
  const double before = parent.child("noise").uniform();
  for (int i = 0; i < 500; ++i) parent.uniform();  // burn the parent
  const double after = Rng(7).child("noise").uniform();
  CHECK(before == after);
}

TEST_CASE("distinct stream names give distinct streams") {
  Rng parent(7);
  Rng a = parent.child("z-path");
  Rng b = parent.child("v-path");
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += (a.uniform() == b.uniform());
  CHECK(equal < 5);
}

TEST_CASE("uniform lies in [0, 1) with mean near 1/2") {
  Rng rng(3);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sum += x;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("uniform(lo, hi) respects its bounds") {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-3.0, 2.0);
    REQUIRE(x >= -3.0);
    REQUIRE(x < 2.0);
  }
}

TEST_CASE("integer(n) covers [0, n) roughly uniformly") {
  Rng rng(5);
  int counts[10] = {};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t k = rng.integer(10);
    REQUIRE(k < 10);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - n / 10) < 600);
}

TEST_CASE("normal has mean 0 and variance 1") {
  Rng rng(6);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("vector helpers match scalar draws in count and range") {
  Rng rng(8);
  const Eigen::VectorXd u = rng.uniform_vector(50, 2.0, 3.0);
  REQUIRE(u.size() == 50);
  CHECK(u.minCoeff() >= 2.0);
  CHECK(u.maxCoeff() < 3.0);
  const Eigen::VectorXd g = rng.normal_vector(50);
  REQUIRE(g.size() == 50);
  CHECK(g.array().abs().maxCoeff() < 10.0);
}
