"""Per-node and per-distance gain tables, horizon sweeps and plot helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .metrics import INF, lp_gain, lp_gain_infinite
from .model import Network, bfs_distances, distance_classes

# Max gain per hop distance from node 1 of the example network, rounded to
# 4 decimals as published (columns p = 1, 2, inf; rows distance 0..3).
REFERENCE_MAX_GAINS = {
    1.0: (1.2122, 0.4098, 0.3328, 0.2348),
    2.0: (1.1676, 0.3654, 0.2994, 0.2113),
    INF: (1.2122, 0.4098, 0.3328, 0.2348),
}


@dataclass(frozen=True)
class GainRow:
    node: int
    distance: int
    p: float
    horizon: float
    gain: float


def _gain(net: Network, s: int, i: int, p: float, horizon: float) -> float:
    if horizon == INF:
        return float(lp_gain_infinite(net, s, i, p).value)
    return float(lp_gain(net, s, i, p, int(horizon)).value)


def node_gains(net: Network, s: int, p: float, horizon: float) -> list[GainRow]:
    dist = bfs_distances(net, s)
    return [GainRow(i, dist[i], p, horizon, _gain(net, s, i, p, horizon))
            for i in range(net.n)]


def max_by_distance(net: Network, s: int, p: float, horizon: float) -> dict[int, float]:
    """Largest gain among the targets in each hop-distance class."""
    gains = {r.node: r.gain for r in node_gains(net, s, p, horizon)}
    return {d: max(gains[i] for i in nodes) for d, nodes in distance_classes(net, s).items()}


def horizon_sweep(net: Network, s: int, p: float, horizons: Sequence[int],
                  reference: Sequence[float]) -> list[dict]:
    """Deviation of the per-distance maxima from a reference column at each horizon.

    Rows are ordered by horizon; ``max_abs_deviation`` compares the values
    rounded to the reference's 4 decimals.
    """
    rows = []
    for kf in horizons:
        col = max_by_distance(net, s, p, kf)
        values = [col[d] for d in sorted(col)]
        dev = max(abs(round(v, 4) - r) for v, r in zip(values, reference))
        rows.append({"k_f": kf, "values": values, "max_abs_deviation": float(dev)})
    return rows


def best_horizon(rows: list[dict]) -> dict:
    return min(rows, key=lambda r: (r["max_abs_deviation"], r["k_f"]))


def gains_csv(rows: Sequence[GainRow]) -> str:
    lines = ["node,distance,p,k_f,gain"]
    for r in rows:
        lines.append(f"{r.node + 1},{r.distance},{_fmt(r.p)},{_fmt(r.horizon)},{r.gain!r}")
    return "\n".join(lines) + "\n"


def distance_table_csv(columns: dict) -> str:
    """``columns`` maps p to ``{distance: max gain}``."""
    ps = list(columns)
    header = "distance," + ",".join(f"max_l{_fmt(p)}_gain" for p in ps)
    distances = sorted(next(iter(columns.values())))
    lines = [header]
    for d in distances:
        lines.append(f"{d}," + ",".join(repr(columns[p][d]) for p in ps))
    return "\n".join(lines) + "\n"


def gnuplot_script(csv_name: str, title: str = "gain per node") -> str:
    """Plot script for the per-node CSV (gain against node id, coloured by distance)."""
    return "\n".join([
        "set datafile separator ','",
        f"set title '{title}'",
        "set xlabel 'node'",
        "set ylabel 'gain'",
        "set key off",
        f"plot '{csv_name}' using 1:5:2 every ::1 with points pt 7 ps 1.5 palette",
        "",
    ])


def _fmt(x: float) -> str:
    if x == INF or (isinstance(x, float) and math.isinf(x)):
        return "inf"
    return f"{x:g}"
