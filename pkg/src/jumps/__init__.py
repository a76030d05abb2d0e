"""Hop-count virtual coordinates from multiple perimeter landmarks."""

from .energy import EnergyModelParams, itx_of_density_ratio, relative_energy_curve, total_energy
from .harness import ExperimentPlan, aggregate, histogram, relative_benefit, run_cell, run_plan
from .protocol import CoordinateMatrix, TrafficStats, run_ddm_flood, run_full_protocol, run_wake
from .topology import (
    ConnectivityExhausted,
    Topology,
    TopologyConfig,
    bfs_hops,
    generate_topology,
    place_landmarks,
    population_for_density,
)
from .zones import ZonePartition, network_zone_summary, partition_zones, zone_metrics

__version__ = "0.1.0"
