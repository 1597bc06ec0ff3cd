#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace densim {

using NodeId = std::int32_t;

// Obstacle layout for grid worlds, row-major; true marks a blocked cell.
struct GridMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> blocked;

  bool at(int r, int c) const {
    return blocked[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + c] != 0;
  }
};

struct Bounds {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// Traversable world: dense node ids 0..n-1, undirected positive-weight edges,
// immutable after construction (safe for concurrent reads).
class WorldGraph {
 public:
  struct Edge {
    NodeId to;
    double weight;
  };

  // Validates ids, rejects self loops, duplicate edges and zero-length edges.
  static WorldGraph from_parts(std::vector<double> xs, std::vector<double> ys,
                               const std::vector<std::pair<NodeId, NodeId>>& edges);

  int node_count() const { return static_cast<int>(xs_.size()); }
  std::int64_t edge_count() const { return edge_count_; }
  double x(NodeId v) const { return xs_[check(v)]; }
  double y(NodeId v) const { return ys_[check(v)]; }
  const std::vector<Edge>& neighbors(NodeId v) const { return adj_[check(v)]; }
  bool has_edge(NodeId a, NodeId b) const;
  Bounds bounds() const { return bounds_; }

  int component_count() const { return static_cast<int>(components_.size()); }
  int component_of(NodeId v) const { return comp_of_[check(v)]; }
  // Members sorted by node id.
  const std::vector<NodeId>& component_members(int comp) const { return components_[comp]; }
  // Position of v inside its sorted component.
  int rank_in_component(NodeId v) const { return comp_rank_[check(v)]; }

  // Set when built from a grid; lets buckets coarsen by grid cell.
  bool is_grid() const { return grid_cols_ > 0; }
  int grid_rows() const { return grid_rows_; }
  int grid_cols() const { return grid_cols_; }
  // Node at grid cell (r, c), or -1 when blocked. Grid graphs only.
  NodeId node_at(int r, int c) const;

 private:
  std::size_t check(NodeId v) const;
  void build_components();

  std::vector<double> xs_, ys_;
  std::vector<std::vector<Edge>> adj_;
  std::int64_t edge_count_ = 0;
  Bounds bounds_;
  std::vector<int> comp_of_;
  std::vector<int> comp_rank_;
  std::vector<std::vector<NodeId>> components_;
  int grid_rows_ = 0, grid_cols_ = 0;
  std::vector<NodeId> cell_to_node_;

  friend WorldGraph build_grid_world(int rows, int cols, const GridMask* obstacles);
};

// One node per free cell at coordinates (x=col, y=row); unit edges between
// 4-connected free cells. Throws when every cell is blocked.
WorldGraph build_grid_world(int rows, int cols, const GridMask* obstacles = nullptr);
inline WorldGraph build_grid_world(int rows, int cols, const GridMask& obstacles) {
  return build_grid_world(rows, cols, &obstacles);
}

// Minimal-cost path src..dst inclusive, or nullopt when dst is unreachable.
// Euclidean heuristic; equal-cost frontier ties pop the lowest node id.
std::optional<std::vector<NodeId>> astar_path(const WorldGraph& g, NodeId src, NodeId dst);

double path_cost(const WorldGraph& g, const std::vector<NodeId>& path);

// CSV with a `nodes` section of id,x,y rows then an `edges` section of id_a,id_b rows.
WorldGraph load_graph(const std::filesystem::path& file);
void save_graph(const WorldGraph& g, const std::filesystem::path& file);

// Text grid of '.' (free) and '#' (blocked), one row per line.
GridMask load_grid_mask(const std::filesystem::path& file);

}  // namespace densim
