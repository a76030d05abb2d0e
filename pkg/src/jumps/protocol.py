"""WAKE + DDM flooding that assigns each node its hop-count coordinates.

Floods run in synchronous rounds with perfect delivery: every node that
first improved its state in round ``t-1`` transmits once in round ``t`` and
all its neighbors hear the copy before round ``t+1`` starts.

Two interchangeable engines execute the same state machine:

* ``"vector"`` moves whole rounds of messages as numpy arrays (fast, used by
  the experiment harness);
* ``"message"`` pushes individual :class:`Message` objects through
  :class:`NodeState` handlers (slow, readable, used to cross-check).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .topology import Topology, UnreachableNode

ENGINES = ("vector", "message")


class MessageKind(enum.Enum):
    WAKE = "WAKE"
    DDM = "DDM"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    sender: int
    landmark_index: int | None = None
    counter: int | None = None


@dataclass
class NodeState:
    """Per-node protocol state.

    ``best_counter[j]`` is the lowest DDM counter heard for landmark ``j``;
    ``coords[j]`` the resulting hop distance (0 at the landmark itself).
    """

    node_id: int
    landmark_count: int
    woken: bool = False
    best_counter: list = field(default_factory=list)
    coords: list = field(default_factory=list)
    pending: Message | None = None

    def __post_init__(self):
        if not self.best_counter:
            self.best_counter = [None] * self.landmark_count
        if not self.coords:
            self.coords = [None] * self.landmark_count

    def start_wake(self) -> Message:
        self.woken = True
        return Message(MessageKind.WAKE, self.node_id)

    def start_ddm(self, j: int) -> Message:
        self.coords[j] = 0
        return Message(MessageKind.DDM, self.node_id, j, 0)

    def receive(self, msg: Message) -> None:
        """Update state; a forward is queued in ``pending`` only on news."""
        if msg.kind is MessageKind.WAKE:
            if not self.woken:
                self.woken = True
                self.pending = Message(MessageKind.WAKE, self.node_id)
            return
        j, c = msg.landmark_index, msg.counter
        if self.best_counter[j] is None or c < self.best_counter[j]:
            self.best_counter[j] = c
        current = self.coords[j]
        if current is None or c + 1 < current:
            self.coords[j] = c + 1
            self.pending = Message(MessageKind.DDM, self.node_id, j, c + 1)

    def flush(self) -> Message | None:
        msg, self.pending = self.pending, None
        return msg


@dataclass
class FloodTrace:
    """Record of one flood: who transmitted in which round.

    ``reached_round[v]`` is the round in which ``v`` first heard the flood
    (0 for the originator), which equals its hop distance to the originator.
    """

    flood_id: str
    origin: int
    rounds: list[np.ndarray]
    reached_round: np.ndarray
    emissions: int
    receptions: int
    triggered: tuple[int, int] | None = None  # (landmark index, round reached)

    def forwards_per_node(self, node_count: int) -> np.ndarray:
        counts = np.zeros(node_count, dtype=np.int64)
        for emitters in self.rounds:
            np.add.at(counts, emitters, 1)
        return counts

    def event_rows(self):
        for t, emitters in enumerate(self.rounds, start=1):
            yield t, self.flood_id, " ".join(str(int(e)) for e in emitters)


@dataclass
class TrafficStats:
    floods: list[FloodTrace]

    @property
    def per_flood(self) -> list[tuple[str, int, int]]:
        return [(f.flood_id, f.emissions, f.receptions) for f in self.floods]

    @property
    def emissions(self) -> int:
        return sum(f.emissions for f in self.floods)

    @property
    def receptions(self) -> int:
        return sum(f.receptions for f in self.floods)

    def event_log(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "flood_id", "emitter_ids"])
        for f in self.floods:
            w.writerows(f.event_rows())
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class CoordinateMatrix:
    """``values[i, j]`` is the hop count from node ``i`` to landmark ``j``."""

    values: np.ndarray
    landmark_ids: tuple[int, ...]

    @property
    def node_count(self) -> int:
        return self.values.shape[0]

    @property
    def landmark_count(self) -> int:
        return self.values.shape[1]

    def __getitem__(self, key):
        return self.values[key]

    def restrict(self, n_landmarks: int) -> "CoordinateMatrix":
        """Coordinates using only the first ``n_landmarks`` axes."""
        return CoordinateMatrix(self.values[:, :n_landmarks], self.landmark_ids[:n_landmarks])

    def to_csv(self, topology: Topology) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node_id", "x", "y"] + [f"d_{j + 1}" for j in range(self.landmark_count)])
        for i, (x, y) in enumerate(topology.positions):
            w.writerow([i, repr(float(x)), repr(float(y))] + [int(v) for v in self.values[i]])
        return buf.getvalue()


def _neighbor_slices(topology: Topology, emitters: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sender, receiver) arrays for every copy sent by ``emitters``."""
    starts = topology.indptr[emitters]
    lens = topology.indptr[emitters + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    offsets = np.repeat(starts - np.cumsum(lens) + lens, lens)
    flat = offsets + np.arange(total)
    return np.repeat(emitters, lens), topology.indices[flat]


def _vector_flood(topology: Topology, origin: int, flood_id: str, counting: bool):
    """Synchronous flood. With ``counting`` the copies carry hop counters and
    forwarding happens on strict improvement; otherwise first copy wins."""
    n = topology.node_count
    unset = np.iinfo(np.int64).max
    dist = np.full(n, unset, dtype=np.int64)
    dist[origin] = 0
    reached = np.full(n, -1, dtype=np.int64)
    reached[origin] = 0
    emitters = np.array([origin], dtype=np.int64)
    rounds, emissions, receptions = [], 0, 0
    t = 0
    while len(emitters):
        t += 1
        if t > n:
            raise RuntimeError(f"{flood_id} did not terminate within {n} rounds")
        rounds.append(emitters)
        emissions += len(emitters)
        senders, receivers = _neighbor_slices(topology, emitters)
        receptions += len(receivers)
        if counting:
            cand = np.full(n, unset, dtype=np.int64)
            np.minimum.at(cand, receivers, dist[senders] + 1)
            improved = np.flatnonzero(cand < dist)
            dist[improved] = cand[improved]
        else:
            hit = np.zeros(n, dtype=bool)
            hit[receivers] = True
            improved = np.flatnonzero(hit & (reached < 0))
        newly = improved[reached[improved] < 0]
        reached[newly] = t
        emitters = improved
    dist[dist == unset] = -1
    trace = FloodTrace(flood_id, origin, rounds, reached, emissions, receptions)
    return dist, trace


def _message_flood(topology: Topology, states: list[NodeState], first: Message, flood_id: str):
    n = topology.node_count
    reached = np.full(n, -1, dtype=np.int64)
    reached[first.sender] = 0
    outbox = [first]
    rounds, emissions, receptions = [], 0, 0
    t = 0
    while outbox:
        t += 1
        if t > n:
            raise RuntimeError(f"{flood_id} did not terminate within {n} rounds")
        rounds.append(np.array([m.sender for m in outbox], dtype=np.int64))
        emissions += len(outbox)
        touched = set()
        for msg in outbox:
            for v in topology.neighbors(msg.sender):
                v = int(v)
                states[v].receive(msg)
                receptions += 1
                touched.add(v)
                if reached[v] < 0:
                    reached[v] = t
        outbox = [m for v in sorted(touched) if (m := states[v].flush()) is not None]
    return FloodTrace(flood_id, first.sender, rounds, reached, emissions, receptions)


def _check_engine(engine: str):
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")


def run_wake(topology: Topology, initiator: int = 0, engine: str = "vector",
             states: list[NodeState] | None = None) -> FloodTrace:
    """Flood WAKE from ``initiator``; the trace marks landmark 0 as triggered."""
    _check_engine(engine)
    if not 0 <= initiator < topology.node_count:
        raise IndexError(f"initiator {initiator} out of range")
    if engine == "vector":
        _, trace = _vector_flood(topology, initiator, "WAKE", counting=False)
    else:
        if states is None:
            states = _fresh_states(topology)
        trace = _message_flood(topology, states, states[initiator].start_wake(), "WAKE")
    if topology.landmark_ids:
        first = topology.landmark_ids[0]
        trace.triggered = (0, int(trace.reached_round[first]))
    return trace


def run_ddm_flood(topology: Topology, landmark_index: int, engine: str = "vector",
                  states: list[NodeState] | None = None) -> tuple[np.ndarray, FloodTrace]:
    """Flood DDM from landmark ``landmark_index``; returns per-node hop counts."""
    _check_engine(engine)
    if not 0 <= landmark_index < len(topology.landmark_ids):
        raise IndexError(f"no landmark with index {landmark_index}")
    origin = topology.landmark_ids[landmark_index]
    flood_id = f"DDM_{landmark_index + 1}"
    if engine == "vector":
        dist, trace = _vector_flood(topology, origin, flood_id, counting=True)
    else:
        if states is None:
            states = _fresh_states(topology)
        trace = _message_flood(topology, states, states[origin].start_ddm(landmark_index), flood_id)
        dist = np.array([-1 if s.coords[landmark_index] is None else s.coords[landmark_index]
                         for s in states], dtype=np.int64)
    nxt = landmark_index + 1
    if nxt < len(topology.landmark_ids):
        trace.triggered = (nxt, int(trace.reached_round[topology.landmark_ids[nxt]]))
    return dist, trace


def _fresh_states(topology: Topology) -> list[NodeState]:
    k = len(topology.landmark_ids)
    return [NodeState(i, k) for i in range(topology.node_count)]


def run_full_protocol(topology: Topology, initiator: int = 0,
                      engine: str = "vector") -> tuple[CoordinateMatrix, TrafficStats]:
    """WAKE, then one DDM flood per landmark in order.

    Landmark ``j+1`` starts only once landmark ``j``'s flood has reached it.
    """
    _check_engine(engine)
    states = _fresh_states(topology) if engine == "message" else None
    wake = run_wake(topology, initiator, engine, states)
    floods = [wake]
    k = len(topology.landmark_ids)
    coords = np.zeros((topology.node_count, k), dtype=np.int64)
    if k and wake.triggered[1] < 0:
        raise UnreachableNode("WAKE never reached the first landmark")
    for j in range(k):
        dist, trace = run_ddm_flood(topology, j, engine, states)
        if trace.triggered is not None and trace.triggered[1] < 0:
            raise UnreachableNode(f"{trace.flood_id} never reached landmark {j + 2}")
        if (dist < 0).any():
            raise UnreachableNode(f"{trace.flood_id} left {int((dist < 0).sum())} nodes unreached")
        coords[:, j] = dist
        floods.append(trace)
    coords.setflags(write=False)
    return CoordinateMatrix(coords, tuple(topology.landmark_ids)), TrafficStats(floods)
