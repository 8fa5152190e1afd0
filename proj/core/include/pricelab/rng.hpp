#ifndef PRICELAB_RNG_HPP
#define PRICELAB_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace pricelab {

// Seedable generator with named stream splitting.
//
// Every component of a run draws from its own child stream
// ("u-gen", "z-path", "v-path", "noise", "learner", ...) derived from the
// root seed by hashing the stream name, so changing how one component
// consumes randomness never perturbs another component's draws.
//
// Distributions are implemented directly on top of std::mt19937_64 so that
// sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Child generator for a named stream; independent of draws made on *this.
  Rng child(std::string_view stream) const;

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n);
  // Standard normal (polar Box-Muller, no cached spare).
  double normal();

  Eigen::VectorXd normal_vector(int n);
  Eigen::VectorXd uniform_vector(int n, double lo, double hi);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace pricelab

#endif
