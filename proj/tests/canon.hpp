#pragma once

// Unstable or marginally stable agents for the factorization checks.

#include <string>
#include <vector>

#include "netcert/lti.hpp"

namespace netcert::testing {

struct CanonSystem {
  std::string label;
  TransferFunction g;
  int inputs = 1;
};

inline std::vector<CanonSystem> unstable_canon() {
  return {
      {"1/(s-1)", {{1.0}, {1.0, -1.0}}},
      {"1/(s^2-1)", {{1.0}, {1.0, 0.0, -1.0}}},
      {"(s+2)/(s^2-2s+5)", {{1.0, 2.0}, {1.0, -2.0, 5.0}}},
      {"1/s", {{1.0}, {1.0, 0.0}}},
      {"1/s^2", {{1.0}, {1.0, 0.0, 0.0}}},
      {"(s-3)/(s^2+3s-4)", {{1.0, -3.0}, {1.0, 3.0, -4.0}}},
      {"1/(s^3-s^2+2s+1)", {{1.0}, {1.0, -1.0, 2.0, 1.0}}},
      {"10/(s^2+0.1)", {{10.0}, {1.0, 0.0, 0.1}}},
      {"(2s+1)/(s^2-0.5s+4), two ports", {{2.0, 1.0}, {1.0, -0.5, 4.0}}, 2},
      {"100/(s-10), three ports", {{100.0}, {1.0, -10.0}}, 3},
  };
}

/// Agents of the shipped twelve-agent path.
inline std::vector<TransferFunction> path12_agents() {
  const TransferFunction g1{{-1.0}, {1.0, 1.0, 2.0}}, g2{{5.0}, {1.0, 10.0}}, g3{{-2.0}, {1.0, 1.0, 5.0}},
      g4{{4.0}, {1.0, 20.0}};
  return {g1, g2, g3, g4, g1, g2, g1, g2, g3, g4, g1, g2};
}

}  // namespace netcert::testing
