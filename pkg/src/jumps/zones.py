"""Coordinate collisions ("zones") and their geometric spread.

A zone is a group of at least two nodes with identical coordinate vectors.
Distances are reported in radio-range units.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .topology import Topology


@dataclass(frozen=True)
class ZonePartition:
    zones: tuple[tuple[int, ...], ...]
    singleton_count: int
    node_count: int

    @property
    def zone_count(self) -> int:
        return len(self.zones)

    @property
    def populations(self) -> list[int]:
        return [len(z) for z in self.zones]

    def zone_of(self) -> np.ndarray:
        """Zone index per node, -1 for nodes with unique coordinates."""
        out = np.full(self.node_count, -1, dtype=np.int64)
        for k, z in enumerate(self.zones):
            out[list(z)] = k
        return out


@dataclass(frozen=True)
class ZoneMetrics:
    zone_size: float
    intra_zone_distance: float
    population: int


@dataclass(frozen=True)
class ZoneSummary:
    """Network-level view; the size fields are None when there are no zones."""

    zone_count: int
    mean_zone_size: float | None
    mean_intra_zone_distance: float | None
    max_zone_size: float | None
    mean_nodes_per_zone: float | None
    weighting: str = "zone"

    def metric(self, name: str) -> float | None:
        return {
            "zone_size": self.mean_zone_size,
            "max_zone_size": self.max_zone_size,
            "intra_zone_distance": self.mean_intra_zone_distance,
            "nodes_per_zone": self.mean_nodes_per_zone,
            "zone_count": float(self.zone_count),
        }[name]


METRICS = ("zone_size", "max_zone_size", "intra_zone_distance", "nodes_per_zone", "zone_count")


def partition_zones(coords) -> ZonePartition:
    """Group nodes by exact equality of their coordinate vectors.

    Zones are ordered by their smallest member and list members in
    increasing node order.
    """
    values = np.asarray(getattr(coords, "values", coords))
    n = len(values)
    if n == 0:
        return ZonePartition((), 0, 0)
    values = values.reshape(n, -1)
    _, inverse, counts = np.unique(values, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    order = np.argsort(inverse, kind="stable")
    bounds = np.cumsum(counts)[:-1]
    groups = [g for g in np.split(order, bounds) if len(g) >= 2]
    zones = tuple(sorted(tuple(int(i) for i in g) for g in groups))
    singles = int((counts == 1).sum())
    return ZonePartition(zones, singles, n)


def zone_metrics(zone, topology: Topology) -> ZoneMetrics:
    members = list(zone)
    if len(members) < 2:
        raise ValueError("a zone needs at least two nodes")
    d = pdist(topology.positions[members]) / topology.radio_range
    return ZoneMetrics(float(d.max()), float(d.mean()), len(members))


def network_zone_summary(partition: ZonePartition, topology: Topology,
                         weighting: str = "zone") -> ZoneSummary:
    """Aggregate per-zone metrics over the network.

    ``weighting="zone"`` gives each zone equal weight in the size means;
    ``"node"`` weights each zone by its population instead.
    """
    if weighting not in ("zone", "node"):
        raise ValueError("weighting must be 'zone' or 'node'")
    if not partition.zones:
        return ZoneSummary(0, None, None, None, None, weighting)
    metrics = [zone_metrics(z, topology) for z in partition.zones]
    sizes = np.array([m.zone_size for m in metrics])
    intra = np.array([m.intra_zone_distance for m in metrics])
    pops = np.array([m.population for m in metrics], dtype=float)
    w = pops if weighting == "node" else None
    return ZoneSummary(
        zone_count=len(metrics),
        mean_zone_size=float(np.average(sizes, weights=w)),
        mean_intra_zone_distance=float(np.average(intra, weights=w)),
        max_zone_size=float(sizes.max()),
        mean_nodes_per_zone=float(pops.mean()),
        weighting=weighting,
    )


def zone_report_csv(partition: ZonePartition, topology: Topology) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["zone_id", "population", "zone_size_rr", "intra_zone_rr", "centroid_x", "centroid_y"])
    for k, zone in enumerate(partition.zones):
        m = zone_metrics(zone, topology)
        cx, cy = topology.positions[list(zone)].mean(axis=0)
        w.writerow([k, m.population, repr(m.zone_size), repr(m.intra_zone_distance),
                    repr(float(cx)), repr(float(cy))])
    return buf.getvalue()
