"""Flooding energy model driven by CC2420 radio figures.

Raising transmit power by a factor ``lam`` stretches the range by
``lam**(1/alpha)`` and the neighbor count by ``lam**(2/alpha)``. Transmit
current is interpolated from the chip's datasheet as a function of the
neighbor-density ratio ``d_neig / d0``.

Energies are comparative: the model has no per-packet airtime, so absolute
values are in mA per node per flood times the supply voltage.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

# Datasheet rows as printed for alpha = 2:
# (output dBm, I_Tx mA, range factor, neighbor factor)
CC2420_TABLE = (
    (-25, 8.5, 1.0, 1.0),
    (-15, 9.9, 3.16, 10.0),
    (-10, 11.2, 5.62, 31.62),
    (-7, 12.5, 7.94, 63.1),
    (-5, 13.9, 10.0, 100.0),
    (-3, 15.2, 12.59, 158.49),
    (-1, 16.5, 15.84, 251.2),
    (0, 17.4, 17.78, 316.22),
)


@dataclass(frozen=True)
class EnergyModelParams:
    rx_current: float = 19.7
    itx_offset: float = 15.338
    itx_scale: float = 1.8709
    voltage: float = 3.0
    path_loss_exponent: float = 2.0
    reference_density: float = 10.0

    def __post_init__(self):
        for name in ("rx_current", "itx_offset", "itx_scale", "voltage",
                     "path_loss_exponent", "reference_density"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.path_loss_exponent < 2:
            raise ValueError("path_loss_exponent below 2 is not physical")


def range_and_coverage_scale(power_ratio: float, alpha: float = 2.0) -> tuple[float, float]:
    if power_ratio <= 0 or alpha <= 0:
        raise ValueError("power ratio and path loss exponent must be positive")
    return power_ratio ** (1 / alpha), power_ratio ** (2 / alpha)


def itx_of_density_ratio(d_ratio: float, params: EnergyModelParams = EnergyModelParams()) -> float:
    """Transmit current (mA) needed to reach ``d_ratio`` times the base neighbor count."""
    if d_ratio <= 0:
        raise ValueError("density ratio must be positive")
    return (math.sqrt(d_ratio) + params.itx_offset) / params.itx_scale


def per_node_energy(n_landmarks: int, neighbor_density: float,
                    params: EnergyModelParams = EnergyModelParams()) -> float:
    """Energy per node, without the voltage and population factors."""
    if n_landmarks < 0:
        raise ValueError("landmark count cannot be negative")
    if neighbor_density <= 0:
        raise ValueError("neighbor density must be positive")
    ratio = neighbor_density / params.reference_density
    return n_landmarks * (itx_of_density_ratio(ratio, params) + params.rx_current * ratio)


def total_energy(population: int, n_landmarks: int, neighbor_density: float,
                 params: EnergyModelParams = EnergyModelParams()) -> float:
    if population < 0:
        raise ValueError("population cannot be negative")
    return params.voltage * population * per_node_energy(n_landmarks, neighbor_density, params)


@dataclass(frozen=True)
class EnergyRow:
    n_landmarks: int
    neighbor_density: float
    d_ratio: float
    itx_ma: float
    per_node_energy: float
    ratio_to_reference: float


def relative_energy_curve(landmark_counts, densities,
                          params: EnergyModelParams = EnergyModelParams()) -> list[EnergyRow]:
    """Per-node energy relative to one landmark at the base density ``d0``."""
    reference = per_node_energy(1, params.reference_density, params)
    rows = []
    for n in landmark_counts:
        for d in densities:
            ratio = d / params.reference_density
            e = per_node_energy(n, d, params)
            rows.append(EnergyRow(n, d, ratio, itx_of_density_ratio(ratio, params), e, e / reference))
    return rows


def energy_csv(rows: list[EnergyRow], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header.rstrip("\n") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "d_neig", "d_ratio", "itx_mA", "per_node_energy", "ratio_to_reference"])
    for r in rows:
        w.writerow([r.n_landmarks, _num(r.neighbor_density), repr(r.d_ratio), repr(r.itx_ma),
                    repr(r.per_node_energy), repr(r.ratio_to_reference)])
    return buf.getvalue()


def table_reproduction(params: EnergyModelParams = EnergyModelParams()) -> list[dict]:
    """Model output next to each datasheet row."""
    out = []
    for dbm, itx, range_f, neigh_f in CC2420_TABLE:
        lam = 10 ** ((dbm - CC2420_TABLE[0][0]) / 10)
        model_range, model_cov = range_and_coverage_scale(lam, params.path_loss_exponent)
        out.append({
            "dbm": dbm,
            "itx_table": itx,
            "itx_model": itx_of_density_ratio(neigh_f, params),
            "range_table": range_f,
            "range_model": model_range,
            "neighbors_table": neigh_f,
            "neighbors_model": model_cov,
        })
    return out


def format_table(rows: list[dict]) -> str:
    lines = [f"{'dBm':>4} {'I_Tx tbl':>9} {'I_Tx fit':>9} {'range':>8} {'neighbors':>10}"]
    for r in rows:
        lines.append(
            f"{r['dbm']:>4} {r['itx_table']:>9.1f} {r['itx_model']:>9.2f} "
            f"{r['range_model']:>8.2f} {r['neighbors_model']:>10.2f}"
        )
    return "\n".join(lines)


def _num(x):
    return int(x) if float(x).is_integer() else x
