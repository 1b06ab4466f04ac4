#pragma once

// Slow reference implementations. They share no code with the library.

#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

// Min-cost transport on integer masses (both sides sum to the same total) by
// successive shortest paths with Bellman-Ford. Returns the optimal cost
// divided by the total mass.
double min_cost_flow(std::span<const std::int64_t> supply, std::span<const std::int64_t> demand,
                     std::span<const double> cost);

// Kendall tau-b by counting every pair.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Pearson r from the pairwise-difference identity, in long double.
double pearson_pairwise(std::span<const double> x, std::span<const double> y);

}  // namespace oracle
