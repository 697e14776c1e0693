#pragma once

#include <cstdint>
#include <vector>

#include "tripend/sim.hpp"
#include "tripend/synthesis.hpp"
#include "tripend/uncertainty.hpp"

namespace tripend {

struct VertexOutcome {
  std::vector<int> sign;  // +1/-1 per real parametric block
  bool stable = false;
  double abscissa = 0.0;
  double score = 0.0;  // +inf when unstable; see score_definition()
  Metrics tracking{};
  Metrics disturbance{};
};

struct WorstCaseResult {
  std::vector<VertexOutcome> ranked;  // unstable first, then score descending
  VertexOutcome nominal;              // all deltas zero, same pipeline
  int evaluated = 0;
  bool exhaustive = false;
};

const char* score_definition();

// Closes the controller loop, then the real parametric blocks at every
// requested corner (actuator blocks stay open at zero).  Stability comes
// from the closed state matrix; stable corners are simulated on both
// scenarios and ranked.  Corners are enumerated exhaustively when
// vertex_budget covers all 2^k, otherwise a seed-deterministic subsample.
WorstCaseResult worst_case_vertices(const AugmentedPlant& aug,
                                    const PhysicalParameters& p,
                                    const Controller& k, int vertex_budget,
                                    const Scenario& tracking,
                                    const Scenario& disturbance,
                                    std::uint64_t seed = 0);

}  // namespace tripend
