import numpy as np
import pytest

from jumps.topology import Topology, TopologyConfig, generate_topology


def random_topology(seed: int, nodes: int = 60, side: float = 200.0, r: float = 50.0,
                    landmarks: int = 3) -> Topology:
    """Uniform square scatter, not necessarily connected."""
    rng = np.random.default_rng(seed)
    pos = rng.random((nodes, 2)) * side
    return Topology.from_positions(pos, r, range(nodes - landmarks, nodes))


@pytest.fixture(scope="session")
def desk_topologies():
    """A handful of connected desk-scale topologies across the grid."""
    out = []
    for k, (n, d) in enumerate([(3, 10), (5, 20), (8, 30), (10, 10), (4, 50)]):
        cfg = TopologyConfig(field_radius=500, radio_range=50, neighbor_density=d,
                             landmark_count=n, seed=1000 + k)
        out.append(generate_topology(cfg))
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
