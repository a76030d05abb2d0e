"""Monte-Carlo sweep over (landmark count, neighbor density) cells.

Every trial gets its own seed from :func:`mix_seed`, so cells are
independent and any single trial can be replayed. Trials may run in a
process pool; results are always folded in (N, d_neig, trial) order, which
keeps the output bytes independent of scheduling.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .energy import EnergyModelParams, EnergyRow, energy_csv, relative_energy_curve
from .protocol import run_full_protocol
from .topology import ConnectivityExhausted, TopologyConfig, generate_topology
from .zones import METRICS, network_zone_summary, partition_zones, zone_metrics

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
Z_999 = 3.2905  # two-sided 99.9% normal quantile
UNRELIABLE_FRACTION = 0.10
BASELINE_LANDMARKS = 3
INTEGER_METRICS = ("nodes_per_zone", "zone_count")


@dataclass(frozen=True)
class ExperimentPlan:
    landmark_counts: tuple[int, ...] = tuple(range(3, 11))
    densities: tuple[float, ...] = (10, 20, 30, 40, 50)
    trials: int = 100
    base_seed: int = 0
    field_radius: float = 500.0
    radio_range: float = 50.0
    metrics: tuple[str, ...] = METRICS
    bin_width: float = 0.1
    max_connectivity_retries: int = 1000
    initiator: int = 0
    weighting: str = "zone"
    refinement_samples: int = 2

    def __post_init__(self):
        object.__setattr__(self, "landmark_counts", tuple(int(n) for n in self.landmark_counts))
        object.__setattr__(self, "densities", tuple(self.densities))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.landmark_counts or not self.densities:
            raise ValueError("landmark_counts and densities must be non-empty")
        if min(self.landmark_counts) < 1:
            raise ValueError("landmark counts must be >= 1")
        if self.trials < 2:
            raise ValueError("need at least 2 trials per cell for a confidence interval")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}")
        # validates radii and densities
        for d in self.densities:
            TopologyConfig(self.field_radius, self.radio_range, d, 1)

    @classmethod
    def desk_scale(cls, **overrides) -> "ExperimentPlan":
        return cls(**overrides)

    @classmethod
    def paper_scale(cls, **overrides) -> "ExperimentPlan":
        base = dict(field_radius=1000.0, trials=1000)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported plan schema_version {version!r}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        return cls(**data)

    def plan_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def topology_config(self, n_landmarks: int, density: float, seed: int, offset: float = 0.0) -> TopologyConfig:
        return TopologyConfig(
            field_radius=self.field_radius,
            radio_range=self.radio_range,
            neighbor_density=density,
            landmark_count=n_landmarks,
            landmark_angle_offset=offset,
            seed=seed,
            max_connectivity_retries=self.max_connectivity_retries,
        )


def mix_seed(base_seed: int, n_landmarks: int, density: float, trial: int) -> int:
    """64-bit BLAKE2b digest of the little-endian packed (base_seed, N, d_neig, trial)."""
    blob = struct.pack("<QqdQ", base_seed & (2**64 - 1), n_landmarks, float(density), trial)
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")


@dataclass
class TrialRecord:
    trial: int
    seed: int
    retries: int = 0
    exhausted: bool = False
    values: dict = field(default_factory=dict)  # metric -> float | None
    zone_sizes: list = field(default_factory=list)
    intra_distances: list = field(default_factory=list)
    populations: list = field(default_factory=list)


def run_trial(plan: ExperimentPlan, n_landmarks: int, density: float, trial: int) -> TrialRecord:
    seed = mix_seed(plan.base_seed, n_landmarks, density, trial)
    rec = TrialRecord(trial, seed)
    try:
        topo = generate_topology(plan.topology_config(n_landmarks, density, seed))
    except ConnectivityExhausted as exc:
        rec.exhausted = True
        rec.retries = exc.attempts
        return rec
    rec.retries = topo.retries
    coords, _ = run_full_protocol(topo, plan.initiator)
    partition = partition_zones(coords)
    summary = network_zone_summary(partition, topo, plan.weighting)
    rec.values = {m: summary.metric(m) for m in METRICS}
    for zone in partition.zones:
        zm = zone_metrics(zone, topo)
        rec.zone_sizes.append(zm.zone_size)
        rec.intra_distances.append(zm.intra_zone_distance)
        rec.populations.append(zm.population)
    return rec


def _trial_task(args):
    plan, n, d, t = args
    return run_trial(plan, n, d, t)


def aggregate(values) -> tuple[float, float]:
    """Sample mean and 99.9% normal-approximation CI half-width."""
    x = np.asarray(list(values), dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two values")
    return float(x.mean()), float(Z_999 * x.std(ddof=1) / math.sqrt(len(x)))


def relative_benefit(mean_n: float | None, mean_3: float | None) -> float | None:
    """Percent reduction of ``mean_n`` relative to the baseline ``mean_3``."""
    if mean_n is None or mean_3 is None:
        return None
    if mean_3 <= 0:
        log.warning("zero baseline; relative benefit undefined")
        return None
    return 100.0 * (mean_3 - mean_n) / mean_3


def histogram(samples, bin_width: float) -> dict[int, int]:
    """Counts per left-closed bin ``[k*w, (k+1)*w)``, keyed by ``k``."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    x = np.asarray(list(samples), dtype=float)
    if not len(x):
        return {}
    # rounding guards values like 0.3 / 0.1 = 2.9999999999999996
    k = np.floor(np.round(x / bin_width, 9)).astype(np.int64)
    keys, counts = np.unique(k, return_counts=True)
    return {int(a): int(b) for a, b in zip(keys, counts)}


@dataclass
class MetricStat:
    mean: float | None
    ci999: float | None
    n: int
    benefit_vs_3_pct: float | None = None


@dataclass
class CellResult:
    n_landmarks: int
    density: float
    trials: int
    trials_used: int
    exhausted: int
    connectivity_retries: int
    stats: dict  # metric -> MetricStat
    histograms: dict  # metric -> {bin: count}
    bin_widths: dict

    @property
    def unreliable(self) -> bool:
        return self.exhausted > UNRELIABLE_FRACTION * self.trials

    def mean(self, metric: str) -> float | None:
        return self.stats[metric].mean


def summarize_cell(n_landmarks: int, density: float, records: list[TrialRecord],
                   plan: ExperimentPlan) -> CellResult:
    ok = [r for r in records if not r.exhausted]
    stats, hists, widths = {}, {}, {}
    for m in plan.metrics:
        vals = [r.values[m] for r in ok if r.values.get(m) is not None]
        if len(vals) >= 2:
            mean, hw = aggregate(vals)
        elif vals:
            mean, hw = float(vals[0]), None
        else:
            mean, hw = None, None
        stats[m] = MetricStat(mean, hw, len(vals))
        if m == "zone_size":
            samples = [v for r in ok for v in r.zone_sizes]
        elif m == "intra_zone_distance":
            samples = [v for r in ok for v in r.intra_distances]
        elif m == "nodes_per_zone":
            samples = [v for r in ok for v in r.populations]
        else:
            samples = vals
        widths[m] = 1.0 if m in INTEGER_METRICS else plan.bin_width
        hists[m] = histogram(samples, widths[m])
    return CellResult(
        n_landmarks=n_landmarks,
        density=density,
        trials=len(records),
        trials_used=len(ok),
        exhausted=len(records) - len(ok),
        connectivity_retries=sum(r.retries for r in ok),
        stats=stats,
        histograms=hists,
        bin_widths=widths,
    )


def run_cell(n_landmarks: int, density: float, trials: int, base_seed: int,
             plan: ExperimentPlan | None = None, jobs: int = 1) -> list[TrialRecord]:
    plan = replace(plan or ExperimentPlan(), base_seed=base_seed)
    tasks = [(plan, n_landmarks, density, t) for t in range(trials)]
    return _execute(tasks, jobs)


def _execute(tasks, jobs: int, progress=None) -> list[TrialRecord]:
    if jobs <= 1:
        out = []
        for task in tasks:
            out.append(_trial_task(task))
            if progress:
                progress(len(out), len(tasks))
        return out
    out = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for rec in pool.map(_trial_task, tasks, chunksize=4):
            out.append(rec)
            if progress:
                progress(len(out), len(tasks))
    return out


def check_refinement(config: TopologyConfig, initiator: int = 0) -> list[str]:
    """Run one topology with nested landmark prefixes 3..N and list violations.

    With landmarks appended one at a time every zone must stay inside a zone
    of the previous step, so no node's zone population may grow.
    """
    topo = generate_topology(config)
    coords, _ = run_full_protocol(topo, initiator)
    problems = []
    prev_zone, prev_pop = None, None
    for k in range(min(3, coords.landmark_count), coords.landmark_count + 1):
        part = partition_zones(coords.restrict(k))
        zone_of = part.zone_of()
        pop = np.ones(part.node_count, dtype=np.int64)
        for z in part.zones:
            pop[list(z)] = len(z)
        if prev_zone is not None:
            for z in part.zones:
                parents = set(prev_zone[list(z)].tolist())
                if len(parents) != 1 or -1 in parents:
                    problems.append(f"k={k}: zone {z[:4]}... not inside one earlier zone")
            grown = np.flatnonzero(pop > prev_pop)
            if len(grown):
                problems.append(f"k={k}: {len(grown)} nodes gained zone population")
        prev_zone, prev_pop = zone_of, pop
    return problems


@dataclass
class ScenarioResult:
    plan: ExperimentPlan
    cells: list[CellResult]
    energy: list[EnergyRow]
    errors: list[str] = field(default_factory=list)
    refinement_violations: list[str] = field(default_factory=list)

    def cell(self, n_landmarks: int, density: float) -> CellResult:
        for c in self.cells:
            if c.n_landmarks == n_landmarks and c.density == density:
                return c
        raise KeyError((n_landmarks, density))

    @property
    def unreliable_cells(self) -> list[CellResult]:
        return [c for c in self.cells if c.unreliable]

    def header(self) -> str:
        return (f"# schema_version={SCHEMA_VERSION} plan_hash={self.plan.plan_hash()} "
                f"base_seed={self.plan.base_seed}\n")

    def results_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.header())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "d_neig", "trials", "metric", "mean", "ci999", "benefit_vs_3_pct"])
        for c in self.cells:
            for m in self.plan.metrics:
                s = c.stats[m]
                w.writerow([c.n_landmarks, _fmt(c.density), c.trials_used, m,
                            _fmt(s.mean), _fmt(s.ci999), _fmt(s.benefit_vs_3_pct)])
        return buf.getvalue()

    def hist_csv(self, metric: str) -> str:
        buf = io.StringIO()
        buf.write(self.header())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "d_neig", "bin_left", "count"])
        for c in self.cells:
            width = c.bin_widths[metric]
            for k, count in c.histograms[metric].items():
                w.writerow([c.n_landmarks, _fmt(c.density), _fmt(round(k * width, 10)), count])
        return buf.getvalue()

    def energy_csv(self) -> str:
        return energy_csv(self.energy, self.header())

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {"results.csv": self.results_csv(), "energy.csv": self.energy_csv()}
        for m in self.plan.metrics:
            files[f"hist_{m}.csv"] = self.hist_csv(m)
        written = []
        for name, text in files.items():
            path = out / name
            path.write_text(text)
            written.append(path)
        return written


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def run_plan(plan: ExperimentPlan, jobs: int = 1, progress=None,
             energy_params: EnergyModelParams | None = None) -> ScenarioResult:
    cells_keys = [(n, d) for n in plan.landmark_counts for d in plan.densities]
    tasks = [(plan, n, d, t) for n, d in cells_keys for t in range(plan.trials)]
    errors = []
    try:
        records = _execute(tasks, jobs, progress)
    except Exception as exc:  # a pool failure; fall back to per-cell isolation
        log.error("parallel execution failed (%s); rerunning cells serially", exc)
        records = []
        for n, d in cells_keys:
            for t in range(plan.trials):
                try:
                    records.append(run_trial(plan, n, d, t))
                except Exception as cell_exc:
                    errors.append(f"N={n} d_neig={d} trial={t}: {cell_exc!r}")
                    records.append(TrialRecord(t, mix_seed(plan.base_seed, n, d, t), exhausted=True))
    by_cell: dict = {}
    for (_, n, d, _), rec in zip(tasks, records):
        by_cell.setdefault((n, d), []).append(rec)

    cells = []
    for n, d in cells_keys:
        cell = summarize_cell(n, d, by_cell[(n, d)], plan)
        if cell.unreliable:
            errors.append(f"N={n} d_neig={d}: {cell.exhausted}/{cell.trials} trials exhausted connectivity retries")
        cells.append(cell)

    baseline = {c.density: c for c in cells if c.n_landmarks == BASELINE_LANDMARKS}
    for c in cells:
        base = baseline.get(c.density)
        for m, s in c.stats.items():
            s.benefit_vs_3_pct = relative_benefit(s.mean, base.stats[m].mean) if base else None

    violations = []
    for k in range(plan.refinement_samples):
        d = plan.densities[k % len(plan.densities)]
        seed = mix_seed(plan.base_seed, -1, d, k)
        cfg = plan.topology_config(max(plan.landmark_counts), d, seed)
        try:
            violations.extend(check_refinement(cfg, plan.initiator))
        except ConnectivityExhausted as exc:
            errors.append(f"refinement check d_neig={d}: {exc}")
    if violations:
        errors.append(f"refinement invariant violated: {violations[:3]}")

    params = energy_params or EnergyModelParams()
    energy = relative_energy_curve(range(1, max(plan.landmark_counts) + 1), plan.densities, params)
    return ScenarioResult(plan, cells, energy, errors, violations)
