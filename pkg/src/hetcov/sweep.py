"""Parameter sweeps: optimal power control, association weights, percentile rates.

All objectives are analytic.  Weight ratios are in dB relative to tier 1
and apply to every other tier; linear weights are built here, at the edge
of the numerical core.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .joint import joint_rate_coverage
from .network_model import NetworkConfig, db_to_linear
from .uplink import rate_coverage, sir_coverage, sir_coverage_lower

__all__ = [
    "METRICS",
    "SweepGrid",
    "SweepResult",
    "with_ratios",
    "optimal_pcf",
    "percentile_rate",
    "weight_sweep",
    "coupled_vs_decoupled",
]

METRICS = (
    "sir_coverage",
    "sir_lower",
    "edge_rate",
    "median_rate",
    "joint_coverage",
    "joint_edge_rate",
    "joint_median_rate",
)

_MAX_DOUBLINGS = 60
_REL_PREC = 1e-4


@dataclass(frozen=True)
class SweepGrid:
    """Sweep axes.  Empty weight axes keep the config's own weights.

    `thresholds` are linear SIR values for the SIR metrics and bit/s for
    ``joint_coverage`` (used as ``rho_u = rho_d``).
    """

    epsilon_values: tuple = (1.0,)
    ul_ratio_db: tuple = ()
    dl_ratio_db: tuple = ()
    thresholds: tuple = (1.0,)
    metric: str = "sir_coverage"

    def __post_init__(self):
        for name in ("epsilon_values", "ul_ratio_db", "dl_ratio_db", "thresholds"):
            vals = tuple(float(v) for v in getattr(self, name))
            if list(vals) != sorted(vals):
                raise ValueError(f"{name} must be sorted")
            object.__setattr__(self, name, vals)
        if not self.epsilon_values or not self.thresholds:
            raise ValueError("empty grid")
        if any(not 0 <= e <= 1 for e in self.epsilon_values):
            raise ValueError("epsilon values must lie in [0, 1]")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")


def with_ratios(cfg: NetworkConfig, ul_db: float | None = None, dl_db: float | None = None) -> NetworkConfig:
    """Copy of `cfg` with tier-1-relative weight ratios for all other tiers."""
    def vec(db):
        return [1.0] + [float(db_to_linear(db))] * (cfg.n_tiers - 1)

    return cfg.with_weights(None if ul_db is None else vec(ul_db), None if dl_db is None else vec(dl_db))


def _solve_decreasing(f: Callable[[np.ndarray], np.ndarray], q: float, lo: float = 1e3, hi: float = 1e7) -> float:
    """Root of a decreasing ``f(rho) = q`` by bracketing and bisection in log rho."""
    for _ in range(_MAX_DOUBLINGS):
        if f(np.array([lo]))[0] >= q:
            break
        lo /= 2
    else:
        raise RuntimeError("lower rate bracket not found")
    for _ in range(_MAX_DOUBLINGS):
        if f(np.array([hi]))[0] <= q:
            break
        hi *= 2
    else:
        raise RuntimeError("upper rate bracket not found")
    # coarse vectorised pass, then bisection
    grid = np.geomspace(lo, hi, 33)
    vals = f(grid)
    i = int(np.nonzero(vals >= q)[0].max())
    lo, hi = grid[i], grid[min(i + 1, len(grid) - 1)]
    while hi / lo > 1 + _REL_PREC:
        mid = math.sqrt(lo * hi)
        if f(np.array([mid]))[0] >= q:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def percentile_rate(cfg: NetworkConfig, q: float = 0.95, objective: Literal["ul", "joint"] = "ul",
                    mode: str = "mean_load") -> float:
    """Rate exceeded with probability `q` (0.95 edge, 0.5 median).

    For ``objective="joint"`` the rate applies to both links at once.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if objective == "ul":
        return _solve_decreasing(lambda r: rate_coverage(r, cfg, mode), q)
    if objective == "joint":
        return _solve_decreasing(lambda r: joint_rate_coverage(r, r, cfg), q)
    raise ValueError(f"unknown objective {objective!r}")


def _metric(cfg: NetworkConfig, metric: str, threshold: float) -> float:
    if metric == "sir_coverage":
        return float(sir_coverage(threshold, cfg))
    if metric == "sir_lower":
        return float(sir_coverage_lower(threshold, cfg))
    if metric == "edge_rate":
        return percentile_rate(cfg, 0.95)
    if metric == "median_rate":
        return percentile_rate(cfg, 0.5)
    if metric == "joint_coverage":
        return float(joint_rate_coverage(threshold, threshold, cfg))
    if metric == "joint_edge_rate":
        return percentile_rate(cfg, 0.95, "joint")
    if metric == "joint_median_rate":
        return percentile_rate(cfg, 0.5, "joint")
    raise ValueError(f"unknown metric {metric!r}")


def optimal_pcf(tau: float, cfg: NetworkConfig, grid: Sequence[float] | SweepGrid | None = None,
                objective: str = "sir_coverage", refine: bool = True) -> tuple[float, float]:
    """Maximise the objective over the power-control fraction.

    The best grid point is refined by a bounded scalar search over its two
    neighbouring cells.  `objective` is any metric name; `tau` is its
    threshold.
    """
    if grid is None:
        eps = np.round(np.arange(0, 1.0001, 0.05), 10)
    elif isinstance(grid, SweepGrid):
        eps = np.asarray(grid.epsilon_values)
    else:
        eps = np.asarray(grid, dtype=float)
    if eps.size == 0:
        raise ValueError("empty grid")

    def f(e):
        return _metric(cfg.replace(pcf=float(e)), objective, tau)

    vals = np.array([f(e) for e in eps])
    i = int(np.argmax(vals))
    best_e, best_v = float(eps[i]), float(vals[i])
    if refine and eps.size > 1:
        lo, hi = eps[max(i - 1, 0)], eps[min(i + 1, eps.size - 1)]
        res = minimize_scalar(lambda e: -f(e), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-4 * max(hi - lo, 1e-12)})
        if -res.fun > best_v:
            best_e, best_v = float(res.x), float(-res.fun)
    return best_e, best_v


@dataclass
class SweepResult:
    """One row per grid point plus the argmax per (epsilon, threshold)."""

    metric: str
    rows: list[dict] = field(default_factory=list)

    def _best(self, key) -> list[dict]:
        best: dict[tuple, dict] = {}
        for r in self.rows:
            k = key(r)
            if k not in best or r["value"] > best[k]["value"]:
                best[k] = r
        return [best[k] for k in sorted(best, key=lambda t: tuple(-np.inf if v is None else v for v in t))]

    def argmax(self) -> list[dict]:
        """Best weight pair per (epsilon, threshold)."""
        return self._best(lambda r: (r["epsilon"], r["threshold"]))

    def overall_argmax(self) -> list[dict]:
        """Best (epsilon, weights) per threshold."""
        return self._best(lambda r: (r["threshold"],))

    def write_csv(self, path: str | Path) -> None:
        cols = ["epsilon", "ul_ratio_db", "dl_ratio_db", "threshold", "value"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in self.rows:
                w.writerow({c: "" if r[c] is None else repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols})

    def write_summary(self, path: str | Path) -> None:
        doc = {"metric": self.metric, "argmax": self.argmax(), "overall_argmax": self.overall_argmax()}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def weight_sweep(cfg: NetworkConfig, grid: SweepGrid) -> SweepResult:
    """Evaluate `grid.metric` on the product of all grid axes."""
    ul = grid.ul_ratio_db or (None,)
    dl = grid.dl_ratio_db or (None,)
    res = SweepResult(grid.metric)
    rate_metric = grid.metric.endswith("_rate")
    thresholds = (None,) if rate_metric else grid.thresholds
    for e, u, d in product(grid.epsilon_values, ul, dl):
        c = with_ratios(cfg.replace(pcf=e), u, d)
        for t in thresholds:
            res.rows.append({
                "epsilon": e,
                "ul_ratio_db": u,
                "dl_ratio_db": d,
                "threshold": t,
                "value": _metric(c, grid.metric, t),
            })
    return res


def coupled_vs_decoupled(cfg: NetworkConfig, eps_grid: Sequence[float],
                         ratios_db: Sequence[float] = tuple(np.arange(-30.0, 10.1, 2.0)),
                         ul_ratios_db: Sequence[float] | None = None,
                         dl_ratios_db: Sequence[float] | None = None) -> list[dict]:
    """Best coupled (one shared ratio) vs best decoupled (UL, DL) weights.

    Both are optimised for the joint edge rate; the joint median rate at
    each optimum is reported alongside.
    """
    ul_r = tuple(ratios_db if ul_ratios_db is None else ul_ratios_db)
    dl_r = tuple(ratios_db if dl_ratios_db is None else dl_ratios_db)
    out = []
    for e in eps_grid:
        base = cfg.replace(pcf=float(e))
        coupled = {r: percentile_rate(with_ratios(base, r, r), 0.95, "joint") for r in ratios_db}
        rc = max(coupled, key=coupled.get)
        # the decoupled search space contains every coupled pair
        dec = {(r, r): v for r, v in coupled.items()}
        for u, d in product(ul_r, dl_r):
            if (u, d) not in dec:
                dec[(u, d)] = percentile_rate(with_ratios(base, u, d), 0.95, "joint")
        du, dd = max(dec, key=dec.get)
        out.append({
            "epsilon": float(e),
            "coupled_ratio_db": float(rc),
            "coupled_edge_rate": coupled[rc],
            "coupled_median_rate": percentile_rate(with_ratios(base, rc, rc), 0.5, "joint"),
            "decoupled_ul_ratio_db": float(du),
            "decoupled_dl_ratio_db": float(dd),
            "decoupled_edge_rate": dec[(du, dd)],
            "decoupled_median_rate": percentile_rate(with_ratios(base, du, dd), 0.5, "joint"),
        })
    return out
