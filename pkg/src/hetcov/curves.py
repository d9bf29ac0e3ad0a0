"""Coverage curves and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PROVENANCES",
    "CoverageCurve",
    "write_curves_csv",
    "read_curves_csv",
    "write_joint_csv",
    "read_joint_csv",
    "read_header",
    "db_grid",
]

PROVENANCES = ("exact", "upper_bound", "lower_bound", "simulation", "a1", "a2", "closed_form", "reference")
AXES = ("threshold_db", "rate_bps")

_MONOTONE_SLACK = 1e-9


def db_grid(lo_db: float = -20.0, hi_db: float = 30.0, n: int = 61) -> np.ndarray:
    """Evenly spaced dB thresholds (log-spaced in linear scale)."""
    return np.linspace(lo_db, hi_db, n)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class CoverageCurve:
    """Sampled CCDF ``threshold -> P(metric > threshold)``.

    `thresholds` are stored in the unit named by `axis` (dB for SIR/SINR,
    bit/s for rates) so a CSV round trip is exact.  `half_width` is the
    per-point confidence half width of simulated curves.
    """

    thresholds: np.ndarray
    values: np.ndarray
    provenance: str
    axis: str = "threshold_db"
    fingerprint: str = ""
    half_width: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("thresholds and values must be 1-D arrays of equal length")
        if t.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(t) < 0):
            raise ValueError("thresholds must be sorted")
        if np.any(v < -_MONOTONE_SLACK) or np.any(v > 1 + _MONOTONE_SLACK):
            raise ValueError("coverage values must lie in [0, 1]")
        if np.any(np.diff(v) > _MONOTONE_SLACK):
            raise ValueError("coverage values must be non-increasing in the threshold")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "values", np.clip(v, 0.0, 1.0))
        if self.half_width is not None:
            object.__setattr__(self, "half_width", np.asarray(self.half_width, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, CoverageCurve):
            return NotImplemented
        return (self.provenance == other.provenance and self.axis == other.axis
                and self.fingerprint == other.fingerprint
                and np.array_equal(self.thresholds, other.thresholds)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    @property
    def linear_thresholds(self) -> np.ndarray:
        if self.axis == "threshold_db":
            return 10.0 ** (self.thresholds / 10.0)
        return self.thresholds

    def sup_distance(self, other: "CoverageCurve", lo=None, hi=None) -> float:
        """Largest absolute gap over shared thresholds within ``[lo, hi]``."""
        if not np.array_equal(self.thresholds, other.thresholds):
            raise ValueError("curves are sampled on different grids")
        m = np.ones_like(self.thresholds, dtype=bool)
        if lo is not None:
            m &= self.thresholds >= lo - 1e-12
        if hi is not None:
            m &= self.thresholds <= hi + 1e-12
        return float(np.max(np.abs(self.values[m] - other.values[m])))


def write_curves_csv(path: str | Path, curves: Sequence[CoverageCurve], header: dict | None = None) -> None:
    """Write curves sharing one axis; `header` lines go first as ``# key: value``."""
    if not curves:
        raise ValueError("no curves to write")
    axis = curves[0].axis
    if any(c.axis != axis for c in curves):
        raise ValueError("curves in one file must share an axis")
    with_hw = any(c.half_width is not None for c in curves)
    with open(path, "w", newline="") as fh:
        for key, val in (header or {}).items():
            fh.write(f"# {key}: {val}\n")
        w = csv.writer(fh)
        cols = [axis, "value", "provenance"] + (["half_width"] if with_hw else [])
        w.writerow(cols)
        for c in curves:
            for i, (t, v) in enumerate(zip(c.thresholds, c.values)):
                row = [_fmt(t), _fmt(v), c.provenance]
                if with_hw:
                    row.append("" if c.half_width is None else _fmt(c.half_width[i]))
                w.writerow(row)


def _data_lines(path):
    with open(path, newline="") as fh:
        return [ln for ln in fh if not ln.startswith("#")]


def read_header(path: str | Path) -> dict[str, str]:
    """The ``# key: value`` lines at the top of a CSV written here."""
    out = {}
    with open(path, newline="") as fh:
        for ln in fh:
            if not ln.startswith("#"):
                break
            key, _, val = ln[1:].strip().partition(":")
            out[key.strip()] = val.strip()
    return out


def read_curves_csv(path: str | Path, fingerprint: str | None = None) -> list[CoverageCurve]:
    """Parse a file written by `write_curves_csv`; curves keep file order.

    The fingerprint defaults to the one recorded in the file header.
    """
    if fingerprint is None:
        fingerprint = read_header(path).get("fingerprint", "")
    rows = list(csv.DictReader(_data_lines(path)))
    if not rows:
        return []
    axis = next(a for a in AXES if a in rows[0])
    groups: dict[str, list[dict]] = {}
    for r in rows:
        groups.setdefault(r["provenance"], []).append(r)
    out = []
    for prov, rs in groups.items():
        hw = None
        if "half_width" in rs[0] and all(r["half_width"] != "" for r in rs):
            hw = np.array([float(r["half_width"]) for r in rs])
        out.append(
            CoverageCurve(
                np.array([float(r[axis]) for r in rs]),
                np.array([float(r["value"]) for r in rs]),
                prov,
                axis=axis,
                fingerprint=fingerprint,
                half_width=hw,
            )
        )
    return out


def write_joint_csv(path: str | Path, rho_u: Iterable[float], rho_d: Iterable[float], values: Iterable[float],
                    header: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for key, val in (header or {}).items():
            fh.write(f"# {key}: {val}\n")
        w = csv.writer(fh)
        w.writerow(["rho_u_bps", "rho_d_bps", "value"])
        for a, b, v in zip(rho_u, rho_d, values):
            w.writerow([_fmt(a), _fmt(b), _fmt(v)])


def read_joint_csv(path: str | Path):
    rows = list(csv.DictReader(_data_lines(path)))
    cols = [np.array([float(r[c]) for r in rows]) for c in ("rho_u_bps", "rho_d_bps", "value")]
    return tuple(cols)
