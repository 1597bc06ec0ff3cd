#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "densim/mobility.hpp"
#include "densim/rng.hpp"
#include "densim/world_graph.hpp"

namespace densim {

struct SensingParams {
  double p = 1.0;       // per-person detection probability, in [0,1]
  double lambda = 0.0;  // expected false positives per sample, >= 0
  double radius = 1.0;  // coverage radius, > 0

  void validate() const;  // throws std::invalid_argument
};

// One measurement: Binomial(n_in_range, p) + Poisson(lambda).
long sense(long n_in_range, const SensingParams& params, Rng& rng);

// Persons at Euclidean coordinate distance <= radius from the sensor's node,
// boundary inclusive. Non-person entries in `agents` are ignored.
int people_in_range(const Agent& sensor, std::span<const Agent> agents, const WorldGraph& g,
                    double radius);

// Node -> bucket assignment. Identity by default; grid worlds can merge
// factor x factor cells into one bucket (empty cells drop out, buckets stay dense).
class BucketMap {
 public:
  static BucketMap identity(const WorldGraph& g);
  static BucketMap coarsened(const WorldGraph& g, int factor);

  int size() const { return static_cast<int>(cx_.size()); }
  int bucket_of(NodeId v) const { return node_to_bucket_[static_cast<std::size_t>(v)]; }
  // Centroid of the bucket's member nodes.
  double x(int bucket) const { return cx_[static_cast<std::size_t>(bucket)]; }
  double y(int bucket) const { return cy_[static_cast<std::size_t>(bucket)]; }

 private:
  std::vector<int> node_to_bucket_;
  std::vector<double> cx_, cy_;
};

// Accumulates sensed samples and ground-truth occupancy per bucket.
// Owned by a single run; only `record_step` mutates it.
class DensityField {
 public:
  explicit DensityField(BucketMap buckets);

  const BucketMap& buckets() const { return map_; }

  // One tick: every sensor contributes one sample to its bucket; every bucket
  // accumulates its current person occupancy.
  void record_step(const WorldGraph& g, std::span<const Agent> agents, const SensingParams& params,
                   Rng& rng);

  std::uint64_t truth_steps() const { return truth_steps_; }
  std::uint64_t samples(int bucket) const { return samples_[static_cast<std::size_t>(bucket)]; }

  struct Snapshot {
    std::vector<double> psi;  // sensed_sum / k_x, 0 for unsampled buckets
    std::vector<double> phi;  // truth_sum / truth_steps
  };
  // Throws std::logic_error before the first recorded step.
  Snapshot snapshot() const;

 private:
  BucketMap map_;
  std::vector<std::uint64_t> sensed_sum_, samples_, truth_sum_;
  std::uint64_t truth_steps_ = 0;
  // Grid fast path scratch: person occupancy per cell, rebuilt each step.
  std::vector<std::int32_t> occupancy_;
};

// CSV rows: bucket_id,x,y,psi,phi,k_x
void write_snapshot_csv(const DensityField& field, const std::filesystem::path& file);

}  // namespace densim
