#include "densim/sensing.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "densim/format.hpp"

namespace densim {

void SensingParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in [0,1]");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be > 0");
}

long sense(long n_in_range, const SensingParams& params, Rng& rng) {
  if (n_in_range < 0) throw std::invalid_argument("n_in_range must be >= 0");
  long count = 0;
  if (n_in_range > 0 && params.p > 0.0) {
    if (params.p >= 1.0) {
      count += n_in_range;
    } else {
      std::binomial_distribution<long> hit(n_in_range, params.p);
      count += hit(rng);
    }
  }
  if (params.lambda > 0.0) {
    std::poisson_distribution<long> ghost(params.lambda);
    count += ghost(rng);
  }
  return count;
}

int people_in_range(const Agent& sensor, std::span<const Agent> agents, const WorldGraph& g,
                    double radius) {
  const double sx = g.x(sensor.position), sy = g.y(sensor.position);
  const double r2 = radius * radius;
  int count = 0;
  for (const Agent& a : agents) {
    if (a.kind != AgentKind::person) continue;
    const double dx = g.x(a.position) - sx;
    const double dy = g.y(a.position) - sy;
    if (dx * dx + dy * dy <= r2) ++count;
  }
  return count;
}

BucketMap BucketMap::identity(const WorldGraph& g) {
  BucketMap m;
  m.node_to_bucket_.resize(g.node_count());
  m.cx_.resize(g.node_count());
  m.cy_.resize(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    m.node_to_bucket_[v] = v;
    m.cx_[v] = g.x(v);
    m.cy_[v] = g.y(v);
  }
  return m;
}

BucketMap BucketMap::coarsened(const WorldGraph& g, int factor) {
  if (factor < 1) throw std::invalid_argument("coarsening factor must be >= 1");
  if (factor == 1) return identity(g);
  if (!g.is_grid()) throw std::invalid_argument("coarsening needs a grid world");
  const int coarse_cols = (g.grid_cols() + factor - 1) / factor;
  // First pass: dense bucket ids in coarse scan order, skipping empty blocks.
  std::vector<int> coarse_to_bucket(
      static_cast<std::size_t>(coarse_cols) * ((g.grid_rows() + factor - 1) / factor), -1);
  BucketMap m;
  m.node_to_bucket_.resize(g.node_count());
  std::vector<int> members;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const int cc = static_cast<int>(g.x(v)) / factor;
    const int cr = static_cast<int>(g.y(v)) / factor;
    const std::size_t coarse = static_cast<std::size_t>(cr) * coarse_cols + cc;
    if (coarse_to_bucket[coarse] < 0) {
      coarse_to_bucket[coarse] = static_cast<int>(m.cx_.size());
      m.cx_.push_back(0);
      m.cy_.push_back(0);
      members.push_back(0);
    }
    const int b = coarse_to_bucket[coarse];
    m.node_to_bucket_[v] = b;
    m.cx_[b] += g.x(v);
    m.cy_[b] += g.y(v);
    ++members[b];
  }
  for (std::size_t b = 0; b < m.cx_.size(); ++b) {
    m.cx_[b] /= members[b];
    m.cy_[b] /= members[b];
  }
  return m;
}

DensityField::DensityField(BucketMap buckets) : map_(std::move(buckets)) {
  sensed_sum_.assign(map_.size(), 0);
  samples_.assign(map_.size(), 0);
  truth_sum_.assign(map_.size(), 0);
}

void DensityField::record_step(const WorldGraph& g, std::span<const Agent> agents,
                               const SensingParams& params, Rng& rng) {
  params.validate();
  const bool fast = g.is_grid();
  if (fast) {
    occupancy_.assign(static_cast<std::size_t>(g.grid_rows()) * g.grid_cols(), 0);
  }
  for (const Agent& a : agents) {
    if (a.kind != AgentKind::person) continue;
    truth_sum_[map_.bucket_of(a.position)] += 1;
    if (fast) {
      const std::size_t cell = static_cast<std::size_t>(g.y(a.position)) * g.grid_cols() +
                               static_cast<std::size_t>(g.x(a.position));
      occupancy_[cell] += 1;
    }
  }
  ++truth_steps_;
  const int reach = static_cast<int>(params.radius);
  const double r2 = params.radius * params.radius;
  for (const Agent& s : agents) {
    if (s.kind != AgentKind::sensor) continue;
    int n = 0;
    if (fast) {
      const int sc = static_cast<int>(g.x(s.position));
      const int sr = static_cast<int>(g.y(s.position));
      for (int dr = -reach; dr <= reach; ++dr) {
        const int r = sr + dr;
        if (r < 0 || r >= g.grid_rows()) continue;
        for (int dc = -reach; dc <= reach; ++dc) {
          const int c = sc + dc;
          if (c < 0 || c >= g.grid_cols()) continue;
          if (static_cast<double>(dr) * dr + static_cast<double>(dc) * dc > r2) continue;
          n += occupancy_[static_cast<std::size_t>(r) * g.grid_cols() + c];
        }
      }
    } else {
      n = people_in_range(s, agents, g, params.radius);
    }
    const int b = map_.bucket_of(s.position);
    sensed_sum_[b] += static_cast<std::uint64_t>(sense(n, params, rng));
    samples_[b] += 1;
  }
}

DensityField::Snapshot DensityField::snapshot() const {
  if (truth_steps_ == 0) throw std::logic_error("snapshot before any recorded step");
  Snapshot s;
  s.psi.resize(map_.size());
  s.phi.resize(map_.size());
  for (int b = 0; b < map_.size(); ++b) {
    s.psi[b] = samples_[b] ? static_cast<double>(sensed_sum_[b]) / static_cast<double>(samples_[b])
                           : 0.0;
    s.phi[b] = static_cast<double>(truth_sum_[b]) / static_cast<double>(truth_steps_);
  }
  return s;
}

void write_snapshot_csv(const DensityField& field, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  const auto snap = field.snapshot();
  const auto& map = field.buckets();
  out << "bucket_id,x,y,psi,phi,k_x\n";
  for (int b = 0; b < map.size(); ++b) {
    out << b << ',' << io::fmt_g(map.x(b)) << ',' << io::fmt_g(map.y(b)) << ','
        << io::fmt_g(snap.psi[b]) << ',' << io::fmt_g(snap.phi[b]) << ',' << field.samples(b)
        << '\n';
  }
}

}  // namespace densim
