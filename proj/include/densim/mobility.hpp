#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "densim/rng.hpp"
#include "densim/world_graph.hpp"

namespace densim {

enum class AgentKind : std::uint8_t { person, sensor };

// Random-waypoint walker. `path` holds the nodes still ahead on the way to the
// current destination, front first; every queued node is adjacent to its
// predecessor. Speed never changes after construction.
struct Agent {
  AgentKind kind = AgentKind::person;
  NodeId position = 0;
  int speed = 1;
  std::deque<NodeId> path;
  bool idle_warned = false;
};

// Uniform random placement, people first then sensors, all with empty paths.
// Agents may share nodes.
std::vector<Agent> init_population(const WorldGraph& g, int n_people, int n_sensors,
                                   int v_person, int v_sensor, Rng& rng);

// One tick. Empty path: draw a destination uniformly over the reachable nodes
// other than the current one, enqueue its shortest path, and stay put for this
// tick. Otherwise advance up to `speed` queued nodes. An agent alone in its
// component idles forever (noted on stderr once).
void step_agent(Agent& a, const WorldGraph& g, Rng& rng);

}  // namespace densim
