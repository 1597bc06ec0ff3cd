#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "densim/parse.hpp"
#include "densim/world_graph.hpp"
#include "dijkstra_oracle.hpp"

using namespace densim;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("grid builder node and edge counts") {
  const auto open3 = build_grid_world(3, 3);
  CHECK(open3.node_count() == 9);
  CHECK(open3.edge_count() == 12);

  const auto single = build_grid_world(1, 1);
  CHECK(single.node_count() == 1);
  CHECK(single.edge_count() == 0);

  // 2x2 with the bottom-right cell blocked: remaining L keeps 2 edges.
  GridMask mask{2, 2, {0, 0, 0, 1}};
  const auto l_shape = build_grid_world(2, 2, mask);
  CHECK(l_shape.node_count() == 3);
  CHECK(l_shape.edge_count() == 2);
  CHECK(l_shape.has_edge(0, 1));
  CHECK(l_shape.has_edge(0, 2));
  CHECK_FALSE(l_shape.has_edge(1, 2));

  GridMask all{1, 2, {1, 1}};
  CHECK_THROWS_AS(build_grid_world(1, 2, all), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_world(0, 3), std::invalid_argument);
}

TEST_CASE("grid counts equal free cells and adjacent free pairs") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mask = testing::random_mask(8, 11, 0.3, rng);
    int free_cells = 0;
    std::int64_t adjacent_pairs = 0;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 11; ++c) {
        if (mask.at(r, c)) continue;
        ++free_cells;
        if (c + 1 < 11 && !mask.at(r, c + 1)) ++adjacent_pairs;
        if (r + 1 < 8 && !mask.at(r + 1, c)) ++adjacent_pairs;
      }
    const auto g = build_grid_world(8, 11, mask);
    CHECK(g.node_count() == free_cells);
    CHECK(g.edge_count() == adjacent_pairs);
  }
}

TEST_CASE("astar trivial and straight-line paths") {
  const auto g = build_grid_world(5, 5);
  const auto self = astar_path(g, 7, 7);
  REQUIRE(self.has_value());
  CHECK(*self == std::vector<NodeId>{7});

  // (x=0,y=0) to (x=0,y=4): down the first column.
  const auto line = astar_path(g, 0, 20);
  REQUIRE(line.has_value());
  CHECK(line->size() == 5);
  CHECK(path_cost(g, *line) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(line->front() == 0);
  CHECK(line->back() == 20);
}

TEST_CASE("astar rejects invalid ids and reports unreachable pairs") {
  const auto g = build_grid_world(2, 2);
  CHECK_THROWS_AS(astar_path(g, 0, 9), std::out_of_range);
  CHECK_THROWS_AS(astar_path(g, -1, 0), std::out_of_range);

  // Full wall row splits the grid in two.
  GridMask mask{3, 3, {0, 0, 0, 1, 1, 1, 0, 0, 0}};
  const auto split = build_grid_world(3, 3, mask);
  CHECK(split.component_count() == 2);
  CHECK_FALSE(astar_path(split, 0, split.node_count() - 1).has_value());
}

TEST_CASE("astar matches the Dijkstra oracle on random obstacle grids") {
  Rng rng(2024);
  int checked_pairs = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto mask = testing::random_mask(30, 30, 0.25, rng);
    const auto g = build_grid_world(30, 30, mask);
    std::uniform_int_distribution<NodeId> node(0, g.node_count() - 1);
    for (int pair = 0; pair < 5; ++pair) {
      const NodeId src = node(rng);
      const auto costs = testing::dijkstra_costs(g, src);
      const NodeId dst = node(rng);
      const auto path = astar_path(g, src, dst);
      if (std::isinf(costs[dst])) {
        CHECK_FALSE(path.has_value());
        continue;
      }
      REQUIRE(path.has_value());
      CHECK(path->front() == src);
      CHECK(path->back() == dst);
      for (std::size_t i = 1; i < path->size(); ++i)
        CHECK(g.has_edge((*path)[i - 1], (*path)[i]));
      CHECK(path_cost(g, *path) == doctest::Approx(costs[dst]).epsilon(1e-12));
      ++checked_pairs;
    }
  }
  CHECK(checked_pairs > 20);
}

TEST_CASE("graph file load, validation and round trip") {
  const auto file = temp_file("densim_graph_test.csv");
  {
    std::ofstream out(file);
    out << "nodes\n0,0.0,0.0\n1,1.0,0.0\nedges\n0,1\n";
  }
  const auto g = load_graph(file);
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.x(1) == doctest::Approx(1.0));

  {
    std::ofstream out(file);
    out << "nodes\n0,0.0,0.0\n1,1.0,0.0\nedges\n0,7\n";
  }
  CHECK_THROWS_WITH_AS(load_graph(file), doctest::Contains("unknown node"), io::ParseError);

  {
    std::ofstream out(file);
    out << "nodes\n0,0.0,zap\n";
  }
  CHECK_THROWS_WITH_AS(load_graph(file), doctest::Contains("line 2"), io::ParseError);

  // Round trip keeps nodes, coordinates and edges.
  GridMask mask{3, 4, {0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}};
  const auto original = build_grid_world(3, 4, mask);
  const auto saved = temp_file("densim_graph_roundtrip.csv");
  save_graph(original, saved);
  const auto loaded = load_graph(saved);
  REQUIRE(loaded.node_count() == original.node_count());
  CHECK(loaded.edge_count() == original.edge_count());
  for (NodeId v = 0; v < original.node_count(); ++v) {
    CHECK(loaded.x(v) == original.x(v));
    CHECK(loaded.y(v) == original.y(v));
    for (const auto& e : original.neighbors(v)) CHECK(loaded.has_edge(v, e.to));
  }
  std::filesystem::remove(file);
  std::filesystem::remove(saved);
}

TEST_CASE("from_parts rejects malformed graphs") {
  CHECK_THROWS_AS(WorldGraph::from_parts({0.0}, {0.0}, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(WorldGraph::from_parts({0.0, 1.0}, {0.0, 0.0}, {{0, 1}, {1, 0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(WorldGraph::from_parts({0.0, 0.0}, {0.0, 0.0}, {{0, 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(WorldGraph::from_parts({}, {}, {}), std::invalid_argument);
}

TEST_CASE("grid mask file parsing") {
  const auto file = temp_file("densim_grid_test.txt");
  {
    std::ofstream out(file);
    out << "..#\n#..\n";
  }
  const auto mask = load_grid_mask(file);
  CHECK(mask.rows == 2);
  CHECK(mask.cols == 3);
  CHECK(mask.at(0, 2));
  CHECK(mask.at(1, 0));
  CHECK_FALSE(mask.at(0, 0));

  {
    std::ofstream out(file);
    out << "..\n...\n";
  }
  CHECK_THROWS_WITH_AS(load_grid_mask(file), doctest::Contains("ragged"), io::ParseError);

  {
    std::ofstream out(file);
    out << ".x\n";
  }
  CHECK_THROWS_WITH_AS(load_grid_mask(file), doctest::Contains("unexpected character"),
                       io::ParseError);
  std::filesystem::remove(file);
}

TEST_CASE("components and bounds") {
  GridMask mask{3, 3, {0, 0, 0, 1, 1, 1, 0, 0, 0}};
  const auto g = build_grid_world(3, 3, mask);
  REQUIRE(g.component_count() == 2);
  CHECK(g.component_of(0) == g.component_of(1));
  CHECK(g.component_of(0) != g.component_of(3));
  const auto& first = g.component_members(g.component_of(0));
  CHECK(first == std::vector<NodeId>{0, 1, 2});
  CHECK(g.rank_in_component(1) == 1);
  const auto b = g.bounds();
  CHECK(b.min_x == 0.0);
  CHECK(b.max_x == 2.0);
  CHECK(b.max_y == 2.0);
}
