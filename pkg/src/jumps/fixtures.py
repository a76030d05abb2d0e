"""Small hand-built topologies used by tests and the CLI."""

from __future__ import annotations

import numpy as np

from .topology import Topology, place_landmarks

# Hop counts from the probe node to landmarks 1..8 in the octagon example.
OCTAGON_PROBE_COORDS = (3, 6, 7, 7, 8, 7, 6, 3)


def octagon_example(radio_range: float = 50.0) -> tuple[Topology, int]:
    """Eight perimeter landmarks joined to one probe node by straight relay chains.

    Chain ``j`` has ``OCTAGON_PROBE_COORDS[j]`` hops with evenly spaced
    relays. The probe sits at (1.0, -0.4) radio ranges from the center of a
    3.5 radio-range disc, a spot where no chain offers a shortcut to another,
    so the probe's hop vector is exactly ``OCTAGON_PROBE_COORDS``.
    Returns ``(topology, probe_index)``; the probe is node 0.
    """
    r = radio_range
    field_radius = 3.5 * r
    probe = np.array([1.0 * r, -0.4 * r])
    landmarks = place_landmarks(8, field_radius)
    points = [probe]
    for lm, hops in zip(landmarks, OCTAGON_PROBE_COORDS):
        points.extend(probe + (lm - probe) * k / hops for k in range(1, hops))
    m = len(points)
    positions = np.vstack((np.array(points), landmarks))
    topo = Topology.from_positions(positions, r, range(m, m + 8), field_radius=field_radius)
    return topo, 0


def chain(count: int, gap: float, radio_range: float = 50.0, landmarks=(0,)) -> Topology:
    """Nodes on the x axis spaced ``gap`` apart."""
    positions = [(k * gap, 0.0) for k in range(count)]
    return Topology.from_positions(positions, radio_range, landmarks)


def star(leaves: int, radio_range: float = 50.0) -> Topology:
    """Center node 0 with ``leaves`` nodes on a circle of radius 0.9 r around it.

    Leaves are spread far enough apart that they only hear the center
    (requires ``leaves <= 5``).
    """
    if leaves > 5:
        raise ValueError("at most 5 leaves keep leaf-to-leaf distances above r")
    angles = 2 * np.pi * np.arange(leaves) / max(leaves, 1)
    rim = 0.9 * radio_range
    positions = [(0.0, 0.0)] + [(rim * np.cos(a), rim * np.sin(a)) for a in angles]
    return Topology.from_positions(positions, radio_range, [0])
