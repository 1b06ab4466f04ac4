#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace effeval::transport::detail {

struct SimplexOutcome {
  std::vector<double> flow;         // dense rows x cols
  std::vector<double> artificial;   // residual flow on artificial arcs, one per node
  std::vector<double> potential;    // node potentials, sources then sinks
  double min_reduced_cost = 0.0;    // over all real arcs, at termination
  std::size_t pivots = 0;
  bool converged = false;
};

// Primal network simplex for the balanced, uncapacitated bipartite
// transportation problem. `costs` must be scaled to [0, 1]; `eps` is the
// reduced-cost threshold for an entering arc.
SimplexOutcome network_simplex(std::span<const double> supply, std::span<const double> demand,
                               std::span<const double> costs, double eps,
                               std::size_t max_pivots);

}  // namespace effeval::transport::detail
