"""Random disc topologies with perimeter landmarks.

Nodes are scattered uniformly over a disc of radius ``field_radius`` and two
nodes are neighbors iff their Euclidean distance is at most ``radio_range``.
Landmarks are extra nodes appended after the random ones, evenly spaced on the
disc border.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

SCHEMA_VERSION = 1


class ConnectivityExhausted(RuntimeError):
    """No connected draw was found within the retry budget."""

    def __init__(self, attempts: int):
        super().__init__(
            f"no connected topology after {attempts} draws; density too low for full connectivity"
        )
        self.attempts = attempts


class UnreachableNode(RuntimeError):
    pass


def population_for_density(neighbor_density: float, field_radius: float, radio_range: float) -> int:
    """Number of random nodes giving ``neighbor_density`` neighbors on average.

    >>> population_for_density(10, 1000, 50)
    4400
    """
    if neighbor_density <= 0 or radio_range <= 0 or field_radius <= 0:
        raise ValueError("density, field radius and radio range must be positive")
    if radio_range > field_radius:
        raise ValueError("radio range cannot exceed the field radius")
    return int(round((field_radius / radio_range) ** 2 * (neighbor_density + 1)))


def place_landmarks(count: int, field_radius: float, offset: float = 0.0) -> np.ndarray:
    """Points at angles ``offset + 2*pi*k/count`` on the circle of radius ``field_radius``."""
    if count < 1:
        raise ValueError("need at least one landmark")
    angles = offset + 2.0 * np.pi * np.arange(count) / count
    return np.column_stack((field_radius * np.cos(angles), field_radius * np.sin(angles)))


@dataclass(frozen=True)
class TopologyConfig:
    field_radius: float = 1000.0
    radio_range: float = 50.0
    neighbor_density: float = 10.0
    landmark_count: int = 3
    landmark_angle_offset: float = 0.0
    seed: int = 0
    max_connectivity_retries: int = 1000

    def __post_init__(self):
        if not 0 < self.radio_range <= self.field_radius:
            raise ValueError(
                f"need 0 < radio_range <= field_radius, got r={self.radio_range}, R={self.field_radius}"
            )
        if self.neighbor_density <= 0:
            raise ValueError("neighbor_density must be positive")
        if int(self.landmark_count) != self.landmark_count or self.landmark_count < 1:
            raise ValueError("landmark_count must be an integer >= 1")
        if self.max_connectivity_retries < 1:
            raise ValueError("max_connectivity_retries must be >= 1")

    @property
    def population(self) -> int:
        return population_for_density(self.neighbor_density, self.field_radius, self.radio_range)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TopologyConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known - {"schema_version"}
        if unknown:
            raise ValueError(f"unknown topology config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})


def _adjacency(positions: np.ndarray, radio_range: float) -> tuple[np.ndarray, np.ndarray]:
    """CSR (indptr, indices) of the unit-disc graph, neighbor lists sorted."""
    n = len(positions)
    if n < 2:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    tree = cKDTree(positions)
    # slightly widened query, then the exact <= r test on recomputed distances
    pairs = tree.query_pairs(radio_range * (1 + 1e-9), output_type="ndarray")
    if len(pairs):
        d = np.hypot(*(positions[pairs[:, 0]] - positions[pairs[:, 1]]).T)
        pairs = pairs[d <= radio_range]
    src = np.concatenate((pairs[:, 0], pairs[:, 1]))
    dst = np.concatenate((pairs[:, 1], pairs[:, 0]))
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst.astype(np.int64)


def _component_count(indptr: np.ndarray, indices: np.ndarray) -> int:
    n = len(indptr) - 1
    graph = csr_matrix((np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(n, n))
    count, _ = connected_components(graph, directed=False)
    return count


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable node placement plus its radio-range adjacency.

    ``positions`` holds the random nodes first and the landmarks last;
    ``landmark_ids[j]`` is the node index of landmark ``j``.
    """

    positions: np.ndarray
    landmark_ids: tuple[int, ...]
    radio_range: float
    field_radius: float
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    config: TopologyConfig | None = None
    retries: int = 0

    @classmethod
    def from_positions(
        cls,
        positions,
        radio_range: float,
        landmark_ids=(),
        field_radius: float | None = None,
        config: TopologyConfig | None = None,
        retries: int = 0,
    ) -> "Topology":
        pos = np.array(positions, dtype=float).reshape(-1, 2)
        if radio_range <= 0:
            raise ValueError("radio_range must be positive")
        ids = tuple(int(i) for i in landmark_ids)
        if any(not 0 <= i < len(pos) for i in ids):
            raise ValueError("landmark id out of range")
        if field_radius is None:
            field_radius = float(np.max(np.hypot(pos[:, 0], pos[:, 1]))) if len(pos) else 0.0
        indptr, indices = _adjacency(pos, radio_range)
        for arr in (pos, indptr, indices):
            arr.setflags(write=False)
        return cls(pos, ids, float(radio_range), float(field_radius), indptr, indices, config, retries)

    @property
    def node_count(self) -> int:
        return len(self.positions)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def mean_degree(self) -> float:
        return float(self.degrees.mean()) if self.node_count else 0.0

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node] : self.indptr[node + 1]]

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.node_count):
            out.extend((i, int(j)) for j in self.neighbors(i) if j > i)
        return out

    def is_connected(self) -> bool:
        return self.node_count <= 1 or _component_count(self.indptr, self.indices) == 1

    def distance(self, a: int, b: int) -> float:
        return math.dist(self.positions[a], self.positions[b])

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict() if self.config else None,
            "radio_range": self.radio_range,
            "field_radius": self.field_radius,
            "retries": self.retries,
            "landmark_ids": list(self.landmark_ids),
            "positions": [[float(x), float(y)] for x, y in self.positions],
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported topology schema_version {version!r}")
        config = TopologyConfig.from_dict(doc["config"]) if doc.get("config") else None
        return cls.from_positions(
            doc["positions"],
            doc["radio_range"],
            doc["landmark_ids"],
            field_radius=doc["field_radius"],
            config=config,
            retries=doc.get("retries", 0),
        )


def sample_disc(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """``count`` points uniform in area over the open disc of ``radius``."""
    # sqrt transform makes the draw uniform in area
    u = rng.random(count)
    v = rng.random(count)
    rho = radius * np.sqrt(u)
    theta = 2.0 * np.pi * v
    return np.column_stack((rho * np.cos(theta), rho * np.sin(theta)))


def generate_topology(config: TopologyConfig) -> Topology:
    """Draw a connected topology; redraws the random nodes until connected.

    Raises ConnectivityExhausted after ``config.max_connectivity_retries``
    disconnected draws.
    """
    rng = np.random.default_rng(config.seed)
    landmarks = place_landmarks(config.landmark_count, config.field_radius, config.landmark_angle_offset)
    m = config.population
    landmark_ids = range(m, m + config.landmark_count)
    for attempt in range(config.max_connectivity_retries):
        positions = np.vstack((sample_disc(rng, m, config.field_radius), landmarks))
        topo = Topology.from_positions(
            positions,
            config.radio_range,
            landmark_ids,
            field_radius=config.field_radius,
            config=config,
            retries=attempt,
        )
        if topo.is_connected():
            return topo
    raise ConnectivityExhausted(config.max_connectivity_retries)


def bfs_hops(topology: Topology, source: int) -> list[int]:
    """Exact hop distances from ``source`` by plain queue-based BFS."""
    n = topology.node_count
    if not 0 <= source < n:
        raise IndexError(f"source {source} out of range for {n} nodes")
    indptr = topology.indptr.tolist()
    indices = topology.indices.tolist()
    hops = [-1] * n
    hops[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        nxt = hops[u] + 1
        for v in indices[indptr[u] : indptr[u + 1]]:
            if hops[v] < 0:
                hops[v] = nxt
                queue.append(v)
    if -1 in hops:
        raise UnreachableNode(f"node {hops.index(-1)} unreachable from {source}")
    return hops
