#include "densim/mobility.hpp"

#include <iostream>
#include <stdexcept>

namespace densim {

std::vector<Agent> init_population(const WorldGraph& g, int n_people, int n_sensors,
                                   int v_person, int v_sensor, Rng& rng) {
  if (n_people < 0 || n_sensors < 0) throw std::invalid_argument("agent counts must be >= 0");
  if (v_person < 1 || v_sensor < 1) throw std::invalid_argument("speeds must be >= 1");
  if (g.node_count() == 0) throw std::invalid_argument("empty graph");
  std::uniform_int_distribution<NodeId> node(0, g.node_count() - 1);
  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(n_people) + n_sensors);
  for (int i = 0; i < n_people; ++i)
    agents.push_back({AgentKind::person, node(rng), v_person, {}, false});
  for (int i = 0; i < n_sensors; ++i)
    agents.push_back({AgentKind::sensor, node(rng), v_sensor, {}, false});
  return agents;
}

void step_agent(Agent& a, const WorldGraph& g, Rng& rng) {
  if (a.path.empty()) {
    const auto& members = g.component_members(g.component_of(a.position));
    if (members.size() < 2) {
      if (!a.idle_warned) {
        std::cerr << "agent stranded on isolated node " << a.position << ", idling\n";
        a.idle_warned = true;
      }
      return;
    }
    // Uniform over the component minus the current node.
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 2);
    std::size_t idx = pick(rng);
    if (idx >= static_cast<std::size_t>(g.rank_in_component(a.position))) ++idx;
    const NodeId dest = members[idx];
    auto path = astar_path(g, a.position, dest);
    if (!path) throw std::logic_error("destination sampled outside the component");
    for (std::size_t i = 1; i < path->size(); ++i) a.path.push_back((*path)[i]);
    return;  // assignment consumes the tick
  }
  const int hops = std::min<int>(a.speed, static_cast<int>(a.path.size()));
  for (int i = 0; i < hops; ++i) {
    a.position = a.path.front();
    a.path.pop_front();
  }
}

}  // namespace densim
