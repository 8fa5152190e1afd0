#ifndef PRICELAB_COMMON_HPP
#define PRICELAB_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pricelab {

// Bad dimensions, bad config files, empty boxes, unknown keys.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violation of the model assumptions (negative elasticity, negative edge
// weight, non-PSD quadratic).
class AssumptionViolation : public std::runtime_error {
 public:
  explicit AssumptionViolation(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Solver non-convergence and other numeric failures.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// FNV-1a 64-bit, used for config digests and split-keyed RNG streams.
constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Canonical float formatting for all CSV/JSON output: 9 significant digits.
std::string format_g9(double x);

}  // namespace pricelab

#endif
