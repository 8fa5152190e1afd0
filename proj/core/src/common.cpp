#include "pricelab/common.hpp"

#include <cstdio>

namespace pricelab {

std::string format_g9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace pricelab
