"""Pedestrian density estimation from imperfect mobile sensors.

Thin wrapper over the C++ core: world graphs, random-waypoint mobility,
noisy sensing, the normalized error metric with its closed form and
bounds, sweep experiments, detector calibration and record aggregation.
"""

from ._densim import (
    Agent,
    AgentKind,
    BucketMap,
    DensityField,
    GridMask,
    Rng,
    SensingParams,
    WorldGraph,
    agg,
    astar_path,
    build_grid_world,
    calib,
    derive_seed,
    experiment,
    init_population,
    load_graph,
    load_grid_mask,
    mix64,
    path_cost,
    people_in_range,
    save_graph,
    sense,
    step_agent,
    theory,
    write_snapshot_csv,
)

__all__ = [
    "Agent",
    "AgentKind",
    "BucketMap",
    "DensityField",
    "GridMask",
    "Rng",
    "SensingParams",
    "WorldGraph",
    "agg",
    "astar_path",
    "build_grid_world",
    "calib",
    "derive_seed",
    "experiment",
    "init_population",
    "load_graph",
    "load_grid_mask",
    "mix64",
    "path_cost",
    "people_in_range",
    "save_graph",
    "sense",
    "step_agent",
    "theory",
    "write_snapshot_csv",
]
