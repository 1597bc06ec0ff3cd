#include "densim/world_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "densim/parse.hpp"

namespace densim {

std::size_t WorldGraph::check(NodeId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= xs_.size())
    throw std::out_of_range("node id " + std::to_string(v) + " out of range");
  return static_cast<std::size_t>(v);
}

bool WorldGraph::has_edge(NodeId a, NodeId b) const {
  for (const Edge& e : neighbors(a))
    if (e.to == b) return true;
  return false;
}

NodeId WorldGraph::node_at(int r, int c) const {
  if (!is_grid()) throw std::logic_error("node_at requires a grid world");
  if (r < 0 || r >= grid_rows_ || c < 0 || c >= grid_cols_) return -1;
  return cell_to_node_[static_cast<std::size_t>(r) * grid_cols_ + c];
}

void WorldGraph::build_components() {
  const int n = node_count();
  comp_of_.assign(n, -1);
  components_.clear();
  for (NodeId start = 0; start < n; ++start) {
    if (comp_of_[start] >= 0) continue;
    const int comp = static_cast<int>(components_.size());
    components_.emplace_back();
    std::vector<NodeId> stack{start};
    comp_of_[start] = comp;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      components_[comp].push_back(v);
      for (const Edge& e : adj_[v]) {
        if (comp_of_[e.to] < 0) {
          comp_of_[e.to] = comp;
          stack.push_back(e.to);
        }
      }
    }
  }
  comp_rank_.assign(n, 0);
  for (auto& members : components_) {
    std::sort(members.begin(), members.end());
    for (std::size_t i = 0; i < members.size(); ++i)
      comp_rank_[members[i]] = static_cast<int>(i);
  }
}

WorldGraph WorldGraph::from_parts(std::vector<double> xs, std::vector<double> ys,
                                  const std::vector<std::pair<NodeId, NodeId>>& edges) {
  if (xs.size() != ys.size()) throw std::invalid_argument("coordinate arrays differ in length");
  if (xs.empty()) throw std::invalid_argument("graph needs at least one node");
  WorldGraph g;
  g.xs_ = std::move(xs);
  g.ys_ = std::move(ys);
  g.adj_.assign(g.xs_.size(), {});
  std::set<std::pair<NodeId, NodeId>> seen;
  for (auto [a, b] : edges) {
    g.check(a);
    g.check(b);
    if (a == b) throw std::invalid_argument("self loop at node " + std::to_string(a));
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second)
      throw std::invalid_argument("duplicate edge " + std::to_string(a) + "," + std::to_string(b));
    const double dx = g.xs_[a] - g.xs_[b];
    const double dy = g.ys_[a] - g.ys_[b];
    const double w = std::sqrt(dx * dx + dy * dy);
    if (w <= 0)
      throw std::invalid_argument("zero-length edge " + std::to_string(a) + "," + std::to_string(b));
    g.adj_[a].push_back({b, w});
    g.adj_[b].push_back({a, w});
    ++g.edge_count_;
  }
  for (auto& nbrs : g.adj_)
    std::sort(nbrs.begin(), nbrs.end(), [](const Edge& l, const Edge& r) { return l.to < r.to; });
  g.bounds_ = {g.xs_[0], g.ys_[0], g.xs_[0], g.ys_[0]};
  for (std::size_t i = 0; i < g.xs_.size(); ++i) {
    g.bounds_.min_x = std::min(g.bounds_.min_x, g.xs_[i]);
    g.bounds_.max_x = std::max(g.bounds_.max_x, g.xs_[i]);
    g.bounds_.min_y = std::min(g.bounds_.min_y, g.ys_[i]);
    g.bounds_.max_y = std::max(g.bounds_.max_y, g.ys_[i]);
  }
  g.build_components();
  return g;
}

WorldGraph build_grid_world(int rows, int cols, const GridMask* obstacles) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (obstacles && (obstacles->rows != rows || obstacles->cols != cols))
    throw std::invalid_argument("obstacle mask dimensions do not match the grid");
  std::vector<NodeId> cell_to_node(static_cast<std::size_t>(rows) * cols, -1);
  std::vector<double> xs, ys;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (obstacles && obstacles->at(r, c)) continue;
      cell_to_node[static_cast<std::size_t>(r) * cols + c] = static_cast<NodeId>(xs.size());
      xs.push_back(static_cast<double>(c));
      ys.push_back(static_cast<double>(r));
    }
  }
  if (xs.empty()) throw std::invalid_argument("grid has no free cells");
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const NodeId v = cell_to_node[static_cast<std::size_t>(r) * cols + c];
      if (v < 0) continue;
      if (c + 1 < cols) {
        const NodeId e = cell_to_node[static_cast<std::size_t>(r) * cols + c + 1];
        if (e >= 0) edges.emplace_back(v, e);
      }
      if (r + 1 < rows) {
        const NodeId s = cell_to_node[(static_cast<std::size_t>(r) + 1) * cols + c];
        if (s >= 0) edges.emplace_back(v, s);
      }
    }
  }
  WorldGraph g = WorldGraph::from_parts(std::move(xs), std::move(ys), edges);
  g.grid_rows_ = rows;
  g.grid_cols_ = cols;
  g.cell_to_node_ = std::move(cell_to_node);
  return g;
}

namespace {

struct Frontier {
  double f;
  NodeId node;
  // Min-heap on f; equal f pops the lowest node id.
  bool operator<(const Frontier& o) const {
    if (f != o.f) return f > o.f;
    return node > o.node;
  }
};

}  // namespace

std::optional<std::vector<NodeId>> astar_path(const WorldGraph& g, NodeId src, NodeId dst) {
  g.neighbors(src);
  const double tx = g.x(dst), ty = g.y(dst);
  if (src == dst) return std::vector<NodeId>{src};

  const auto heuristic = [&](NodeId v) {
    const double dx = g.x(v) - tx, dy = g.y(v) - ty;
    return std::sqrt(dx * dx + dy * dy);
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.node_count(), inf);
  std::vector<NodeId> prev(g.node_count(), -1);
  std::vector<char> done(g.node_count(), 0);
  std::priority_queue<Frontier> open;
  dist[src] = 0;
  open.push({heuristic(src), src});
  while (!open.empty()) {
    const NodeId v = open.top().node;
    open.pop();
    if (done[v]) continue;
    done[v] = 1;
    if (v == dst) break;
    for (const auto& e : g.neighbors(v)) {
      const double nd = dist[v] + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        prev[e.to] = v;
        open.push({nd + heuristic(e.to), e.to});
      }
    }
  }
  if (!done[dst]) return std::nullopt;
  std::vector<NodeId> path;
  for (NodeId v = dst; v != -1; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

double path_cost(const WorldGraph& g, const std::vector<NodeId>& path) {
  double cost = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    bool found = false;
    for (const auto& e : g.neighbors(path[i - 1])) {
      if (e.to == path[i]) {
        cost += e.weight;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::invalid_argument("path nodes " + std::to_string(path[i - 1]) + "," +
                                  std::to_string(path[i]) + " are not adjacent");
  }
  return cost;
}

WorldGraph load_graph(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  const std::string where = file.filename().string();
  std::string line;
  std::size_t lineno = 0;
  enum class Section { none, nodes, edges } section = Section::none;
  std::vector<std::pair<NodeId, std::pair<double, double>>> rows;
  std::vector<std::pair<NodeId, NodeId>> edges;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = io::trim(line);
    if (t.empty()) continue;
    if (t == "nodes") {
      section = Section::nodes;
      continue;
    }
    if (t == "edges") {
      section = Section::edges;
      continue;
    }
    auto fields = io::split(t, ',');
    if (section == Section::nodes) {
      if (fields.size() != 3) io::fail_at(where, lineno, "expected id,x,y");
      const auto id = io::to_int(fields[0], where, lineno, "node id");
      const double px = io::to_double(fields[1], where, lineno, "x");
      const double py = io::to_double(fields[2], where, lineno, "y");
      rows.push_back({static_cast<NodeId>(id), {px, py}});
    } else if (section == Section::edges) {
      if (fields.size() != 2) io::fail_at(where, lineno, "expected id_a,id_b");
      const auto a = io::to_int(fields[0], where, lineno, "edge endpoint");
      const auto b = io::to_int(fields[1], where, lineno, "edge endpoint");
      edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    } else {
      io::fail_at(where, lineno, "content before the 'nodes' header");
    }
  }
  if (rows.empty()) throw io::ParseError(where + ": no nodes");
  std::vector<double> xs(rows.size()), ys(rows.size());
  std::vector<char> present(rows.size(), 0);
  for (const auto& [id, xy] : rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows.size() || present[id])
      throw io::ParseError(where + ": node ids must be 0.." + std::to_string(rows.size() - 1) +
                           " without repeats");
    present[id] = 1;
    xs[id] = xy.first;
    ys[id] = xy.second;
  }
  for (auto [a, b] : edges)
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= rows.size() ||
        static_cast<std::size_t>(b) >= rows.size())
      throw io::ParseError(where + ": edge references unknown node " +
                           std::to_string(std::max(a, b)));
  try {
    return WorldGraph::from_parts(std::move(xs), std::move(ys), edges);
  } catch (const std::invalid_argument& e) {
    throw io::ParseError(where + ": " + e.what());
  }
}

void save_graph(const WorldGraph& g, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "nodes\n";
  std::ostringstream num;
  num.precision(17);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    num.str("");
    num << v << ',' << g.x(v) << ',' << g.y(v);
    out << num.str() << '\n';
  }
  out << "edges\n";
  for (NodeId v = 0; v < g.node_count(); ++v)
    for (const auto& e : g.neighbors(v))
      if (v < e.to) out << v << ',' << e.to << '\n';
}

GridMask load_grid_mask(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  const std::string where = file.filename().string();
  GridMask mask;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> grid_rows;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = io::trim(line);
    if (t.empty()) continue;
    for (char ch : t)
      if (ch != '.' && ch != '#')
        io::fail_at(where, lineno, std::string("unexpected character '") + ch + "'");
    if (!grid_rows.empty() && t.size() != grid_rows.front().size())
      io::fail_at(where, lineno, "ragged row");
    grid_rows.emplace_back(t);
  }
  if (grid_rows.empty()) throw io::ParseError(where + ": empty grid");
  mask.rows = static_cast<int>(grid_rows.size());
  mask.cols = static_cast<int>(grid_rows.front().size());
  mask.blocked.reserve(static_cast<std::size_t>(mask.rows) * mask.cols);
  for (const auto& row : grid_rows)
    for (char ch : row) mask.blocked.push_back(ch == '#' ? 1 : 0);
  return mask;
}

}  // namespace densim
