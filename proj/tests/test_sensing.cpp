#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "densim/sensing.hpp"

using namespace densim;

TEST_CASE("sense degenerate and bounded cases") {
  Rng rng(17);
  const SensingParams perfect{1.0, 0.0, 1.0};
  const SensingParams blind{0.0, 0.0, 1.0};
  for (int i = 0; i < 100; ++i) {
    CHECK(sense(7, perfect, rng) == 7);
    CHECK(sense(123, blind, rng) == 0);
  }
  const SensingParams half{0.5, 0.0, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const long n = sense(10, half, rng);
    CHECK(n >= 0);
    CHECK(n <= 10);
  }
  CHECK_THROWS_AS(sense(-1, perfect, rng), std::invalid_argument);
}

TEST_CASE("sense matches the binomial-plus-poisson mean") {
  Rng rng(2024);
  const SensingParams params{0.5, 0.3, 1.0};
  const int draws = 100000;
  double sum = 0;
  for (int i = 0; i < draws; ++i) sum += static_cast<double>(sense(10, params, rng));
  const double mean = sum / draws;
  // Var = 10 * 0.5 * 0.5 + 0.3 = 2.8
  const double tolerance = 4.0 * std::sqrt(2.8 / draws);
  CHECK(std::abs(mean - 5.3) <= tolerance);
}

TEST_CASE("sensing params validation") {
  CHECK_THROWS_AS((SensingParams{1.5, 0.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SensingParams{-0.1, 0.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SensingParams{0.5, -1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SensingParams{0.5, 0.0, 0.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((SensingParams{0.0, 0.0, 1.0}.validate()));
}

TEST_CASE("people_in_range counts by Euclidean coordinate distance") {
  const auto g = build_grid_world(5, 5);
  const auto node_at = [&](int r, int c) { return g.node_at(r, c); };
  const Agent sensor{AgentKind::sensor, node_at(2, 2), 3, {}, false};
  std::vector<Agent> people;
  for (auto [r, c] : {std::pair{2, 2}, {1, 2}, {3, 2}, {2, 1}, {2, 3}, {1, 1}, {0, 2}})
    people.push_back({AgentKind::person, node_at(r, c), 1, {}, false});

  CHECK(people_in_range(sensor, people, g, 1.0) == 5);   // cell plus 4 orthogonal
  CHECK(people_in_range(sensor, people, g, 0.0) == 1);   // co-located only
  CHECK(people_in_range(sensor, people, g, 1.5) == 6);   // diagonal joins at sqrt(2)
  CHECK(people_in_range(sensor, people, g, 10.0) == 7);  // radius beyond the diameter

  // Sensors in the list are not counted.
  std::vector<Agent> mixed = people;
  mixed.push_back({AgentKind::sensor, node_at(2, 2), 3, {}, false});
  CHECK(people_in_range(sensor, mixed, g, 10.0) == 7);
}

TEST_CASE("bucket maps: identity, coarsening, dropped empty blocks") {
  const auto g = build_grid_world(4, 4);
  const auto identity = BucketMap::identity(g);
  CHECK(identity.size() == 16);
  for (NodeId v = 0; v < 16; ++v) CHECK(identity.bucket_of(v) == v);

  const auto coarse = BucketMap::coarsened(g, 2);
  CHECK(coarse.size() == 4);
  CHECK(coarse.bucket_of(g.node_at(0, 0)) == coarse.bucket_of(g.node_at(1, 1)));
  CHECK(coarse.bucket_of(g.node_at(0, 0)) != coarse.bucket_of(g.node_at(0, 2)));
  CHECK(coarse.x(coarse.bucket_of(g.node_at(0, 0))) == doctest::Approx(0.5));
  CHECK(coarse.y(coarse.bucket_of(g.node_at(2, 3))) == doctest::Approx(2.5));

  // 5x5 grid with factor 2 keeps ragged edge blocks as their own buckets.
  const auto odd = build_grid_world(5, 5);
  CHECK(BucketMap::coarsened(odd, 2).size() == 9);

  // A fully blocked 2x2 block contributes no bucket.
  GridMask mask{4, 4, {0, 0, 1, 1,
                       0, 0, 1, 1,
                       0, 0, 0, 0,
                       0, 0, 0, 0}};
  const auto holed = build_grid_world(4, 4, mask);
  CHECK(BucketMap::coarsened(holed, 2).size() == 3);

  CHECK_THROWS_AS(BucketMap::coarsened(g, 0), std::invalid_argument);
  const auto line = WorldGraph::from_parts({0.0, 1.0}, {0.0, 0.0}, {{0, 1}});
  CHECK_THROWS_AS(BucketMap::coarsened(line, 2), std::invalid_argument);
  CHECK(BucketMap::coarsened(line, 1).size() == 2);
}

TEST_CASE("record_step accumulators and snapshot normalization") {
  const auto g = build_grid_world(1, 1);
  DensityField field(BucketMap::identity(g));
  CHECK_THROWS_AS(field.snapshot(), std::logic_error);

  Rng rng(5);
  const SensingParams exact{1.0, 0.0, 1.0};
  std::vector<Agent> two = {{AgentKind::person, 0, 1, {}, false},
                            {AgentKind::person, 0, 1, {}, false},
                            {AgentKind::sensor, 0, 1, {}, false}};
  field.record_step(g, two, exact, rng);
  std::vector<Agent> four = two;
  four.push_back({AgentKind::person, 0, 1, {}, false});
  four.push_back({AgentKind::person, 0, 1, {}, false});
  field.record_step(g, four, exact, rng);

  const auto snap = field.snapshot();
  CHECK(field.truth_steps() == 2);
  CHECK(field.samples(0) == 2);
  CHECK(snap.psi[0] == doctest::Approx(3.0));  // samples 2 and 4
  CHECK(snap.phi[0] == doctest::Approx(3.0));
}

TEST_CASE("unsampled buckets read zero and sensor-free steps move only truth") {
  const auto g = build_grid_world(1, 2);
  DensityField field(BucketMap::identity(g));
  Rng rng(8);
  const SensingParams exact{1.0, 0.0, 1.0};
  std::vector<Agent> agents = {{AgentKind::person, 1, 1, {}, false},
                               {AgentKind::sensor, 0, 1, {}, false}};
  field.record_step(g, agents, exact, rng);
  CHECK(field.samples(0) == 1);
  CHECK(field.samples(1) == 0);
  auto snap = field.snapshot();
  CHECK(snap.psi[1] == 0.0);
  CHECK(snap.phi[1] == doctest::Approx(1.0));

  std::vector<Agent> only_person = {{AgentKind::person, 0, 1, {}, false}};
  field.record_step(g, only_person, exact, rng);
  CHECK(field.truth_steps() == 2);
  CHECK(field.samples(0) == 1);

  // Two sensors on one bucket add two samples.
  std::vector<Agent> twin_sensors = {{AgentKind::sensor, 0, 1, {}, false},
                                     {AgentKind::sensor, 0, 1, {}, false}};
  field.record_step(g, twin_sensors, exact, rng);
  CHECK(field.samples(0) == 3);
}

TEST_CASE("truth mass is conserved across snapshots") {
  GridMask mask{6, 6, {0, 0, 0, 0, 0, 0,
                       0, 1, 0, 0, 1, 0,
                       0, 0, 0, 0, 0, 0,
                       0, 0, 1, 1, 0, 0,
                       0, 0, 0, 0, 0, 0,
                       0, 0, 0, 0, 0, 0}};
  const auto g = build_grid_world(6, 6, mask);
  Rng rng(31);
  auto agents = init_population(g, 30, 4, 1, 3, rng);
  DensityField field(BucketMap::coarsened(g, 2));
  const SensingParams params{0.7, 0.4, 1.0};
  for (int step = 0; step < 50; ++step) {
    for (auto& a : agents) step_agent(a, g, rng);
    field.record_step(g, agents, params, rng);
    const auto snap = field.snapshot();
    double mass = 0;
    for (double v : snap.phi) mass += v;
    CHECK(mass == doctest::Approx(30.0).epsilon(1e-9));
  }
}

TEST_CASE("sensed mean converges to p*n_in_range + lambda under fixed occupancy") {
  const auto g = build_grid_world(3, 3);
  // Four people parked next to a parked sensor at the center.
  std::vector<Agent> agents = {{AgentKind::person, g.node_at(1, 1), 1, {}, false},
                               {AgentKind::person, g.node_at(0, 1), 1, {}, false},
                               {AgentKind::person, g.node_at(1, 0), 1, {}, false},
                               {AgentKind::person, g.node_at(1, 2), 1, {}, false},
                               {AgentKind::sensor, g.node_at(1, 1), 1, {}, false}};
  const SensingParams params{0.5, 0.3, 1.0};
  DensityField field(BucketMap::identity(g));
  Rng rng(77);
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) field.record_step(g, agents, params, rng);
  const auto snap = field.snapshot();
  const int center = g.node_at(1, 1);
  const double expected = 0.5 * 4.0 + 0.3;
  const double sigma_mean = std::sqrt((4.0 * 0.25 + 0.3) / steps);
  CHECK(std::abs(snap.psi[center] - expected) <= 4.0 * sigma_mean);
}

TEST_CASE("grid occupancy fast path agrees with the brute-force range count") {
  GridMask mask{12, 12, {}};
  mask.blocked.assign(144, 0);
  for (int i : {5, 17, 40, 41, 42, 77, 100, 130}) mask.blocked[i] = 1;
  const auto g = build_grid_world(12, 12, mask);
  Rng rng(13);
  auto agents = init_population(g, 30, 0, 1, 1, rng);
  // Sensors parked on distinct nodes so each bucket holds exactly one sample.
  for (NodeId pos : {0, 25, 60, 95, 120})
    agents.push_back({AgentKind::sensor, pos, 1, {}, false});

  for (double radius : {1.0, 2.5}) {
    DensityField field(BucketMap::identity(g));
    Rng noise(1);
    field.record_step(g, agents, SensingParams{1.0, 0.0, radius}, noise);
    const auto snap = field.snapshot();
    for (NodeId pos : {0, 25, 60, 95, 120}) {
      const Agent sensor{AgentKind::sensor, pos, 1, {}, false};
      const int expected = people_in_range(sensor, agents, g, radius);
      CHECK(snap.psi[pos] == doctest::Approx(expected));
    }
  }
}

TEST_CASE("snapshot csv export") {
  const auto g = build_grid_world(2, 2);
  DensityField field(BucketMap::identity(g));
  Rng rng(3);
  std::vector<Agent> agents = {{AgentKind::person, 0, 1, {}, false},
                               {AgentKind::sensor, 0, 1, {}, false}};
  field.record_step(g, agents, SensingParams{1.0, 0.0, 1.0}, rng);
  const auto file = std::filesystem::temp_directory_path() / "densim_snapshot_test.csv";
  write_snapshot_csv(field, file);
  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header == "bucket_id,x,y,psi,phi,k_x");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(file);
}
