#pragma once

// Plain Dijkstra, written independently of the production A* so path costs
// can be cross-checked against it.

#include <limits>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "densim/rng.hpp"
#include "densim/world_graph.hpp"

namespace densim::testing {

inline std::vector<double> dijkstra_costs(const WorldGraph& g, NodeId src) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.node_count(), inf);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> q;
  dist[src] = 0;
  q.push({0.0, src});
  while (!q.empty()) {
    const auto [d, v] = q.top();
    q.pop();
    if (d > dist[v]) continue;
    for (const auto& e : g.neighbors(v)) {
      const double nd = d + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        q.push({nd, e.to});
      }
    }
  }
  return dist;
}

// Obstacle grid with independently seeded layout; guarantees at least one free cell.
inline GridMask random_mask(int rows, int cols, double wall_prob, Rng& rng) {
  GridMask mask{rows, cols, {}};
  mask.blocked.resize(static_cast<std::size_t>(rows) * cols);
  std::bernoulli_distribution wall(wall_prob);
  bool any_free = false;
  for (auto& cell : mask.blocked) {
    cell = wall(rng) ? 1 : 0;
    any_free = any_free || cell == 0;
  }
  if (!any_free) mask.blocked[0] = 0;
  return mask;
}

}  // namespace densim::testing
