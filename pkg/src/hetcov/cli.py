"""Command-line front end: ``hetcov {analyze,simulate,validate,sweep}``.

Every command reads a YAML scenario (``--config``), writes CSV files into
``--out`` and finishes with a ``manifest.json`` listing them.  Grids are
given as ``--grid "key=spec;key=spec"`` where a spec is ``lo:hi:n``
(evenly spaced, geometric for rate keys), a comma list, or one value.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .curves import CoverageCurve, write_curves_csv, write_joint_csv
from .distributions import joint_tier_masses, load_pmf, serving_pl_pdf
from .joint import joint_rate_coverage
from .network_model import ConfigError, NetworkConfig, load_config
from .simulator import SamplingError, WindowTooSmallError, run_simulation
from .special_math import integrate_semi_infinite
from .sweep import SweepGrid, coupled_vs_decoupled, optimal_pcf, weight_sweep
from .uplink import constants, coverage_curve, rate_curve

__all__ = ["RunManifest", "parse_grid", "main"]

_RATE_KEYS = {"rho", "rho_u", "rho_d"}
_LIST_KEYS = {"tau_db", "eps", "ul_db", "dl_db"} | _RATE_KEYS
_TEXT_KEYS = {"metric"}

DEFAULT_TAU_DB = "-20:30:61"
DEFAULT_RHO = "1e4:1e7:31"


class GridError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config_fingerprint: str
    seeds: list
    tool_version: str
    started: str
    finished: str = ""
    config_path: str = ""
    outputs: list = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        self.finished = _now()
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parse_values(key: str, spec: str) -> np.ndarray:
    spec = spec.strip()
    if not spec:
        raise GridError("empty grid")
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            n = int(n)
            if n < 1:
                raise GridError("empty grid")
            if key in _RATE_KEYS:
                return np.geomspace(float(lo), float(hi), n)
            return np.linspace(float(lo), float(hi), n)
        return np.array(sorted(float(v) for v in spec.split(",") if v.strip()))
    except ValueError as exc:
        raise GridError(f"bad grid value for {key!r}: {spec!r} ({exc})") from None


def parse_grid(text: str | None) -> dict:
    """Parse ``"tau_db=-20:30:61;eps=0,0.5,1;metric=sir_coverage"``."""
    out: dict = {}
    if not text:
        return out
    for part in text.split(";"):
        if not part.strip():
            continue
        if "=" not in part:
            raise GridError(f"grid entry {part!r} is not key=value")
        key, spec = (s.strip() for s in part.split("=", 1))
        if key in _TEXT_KEYS:
            out[key] = spec
        elif key in _LIST_KEYS:
            vals = _parse_values(key, spec)
            if vals.size == 0:
                raise GridError("empty grid")
            out[key] = vals
        else:
            raise GridError(f"unknown grid key {key!r}")
    return out


def _grid(g: dict, key: str, default: str) -> np.ndarray:
    return g[key] if key in g else _parse_values(key, default)


def _header(cfg: NetworkConfig, **extra) -> dict:
    return {"fingerprint": cfg.fingerprint(), "version": __version__, **extra}


# --------------------------------------------------------------------------
# analyze


_CURVES = ("sir", "sinr", "bounds", "ablation", "rate", "rate_full", "joint")


def cmd_analyze(cfg: NetworkConfig, out: Path, grid: dict, curves: list[str]) -> list[str]:
    tdb = _grid(grid, "tau_db", DEFAULT_TAU_DB)
    rho = _grid(grid, "rho", DEFAULT_RHO)
    written = []
    hdr = _header(cfg)

    def emit(name, cs):
        write_curves_csv(out / name, cs, hdr)
        written.append(name)

    for c in curves:
        if c == "sir":
            emit("sir.csv", [coverage_curve(tdb, cfg, "exact")])
        elif c == "sinr":
            emit("sinr.csv", [coverage_curve(tdb, cfg, "sinr")])
        elif c == "bounds":
            emit("sir_bounds.csv", [coverage_curve(tdb, cfg, k) for k in ("exact", "upper_bound", "lower_bound")])
        elif c == "ablation":
            emit("sir_ablation.csv", [coverage_curve(tdb, cfg, k) for k in ("exact", "a1", "a2")])
        elif c == "rate":
            emit("rate.csv", [rate_curve(rho, cfg, "mean_load")])
        elif c == "rate_full":
            emit("rate_full_pmf.csv", [rate_curve(rho, cfg, "full_pmf")])
        elif c == "joint":
            rd = grid.get("rho_d")
            if rd is None:
                vals = joint_rate_coverage(rho, rho, cfg)
                write_joint_csv(out / "joint.csv", rho, rho, vals, hdr)
            else:
                ru, rdd = np.meshgrid(rho, rd, indexing="ij")
                vals = joint_rate_coverage(ru, rdd, cfg)
                write_joint_csv(out / "joint.csv", ru.ravel(), rdd.ravel(), vals.ravel(), hdr)
            written.append("joint.csv")
        else:
            raise GridError(f"unknown curve {c!r} (choose from {', '.join(_CURVES)})")
    return written


# --------------------------------------------------------------------------
# simulate


def _write_samples(path: Path, res, hdr: dict) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in hdr.items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(["ul_sinr_db", "ul_rate_bps", "dl_rate_bps", "ul_tier", "dl_tier"])
        with np.errstate(divide="ignore"):
            sdb = 10 * np.log10(res.ul_sinr)
        for row in zip(sdb, res.ul_rate, res.dl_rate, res.ul_tier + 1, res.dl_tier + 1):
            w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3]), int(row[4])])


def cmd_simulate(cfg: NetworkConfig, out: Path, grid: dict, trials: int, seed: int, uplink_only: bool = False):
    if trials < 1:
        raise GridError("trials must be >= 1")
    res = run_simulation(cfg, trials, seed=seed, downlink=not uplink_only)
    tdb = _grid(grid, "tau_db", DEFAULT_TAU_DB)
    rho = _grid(grid, "rho", DEFAULT_RHO)
    hdr = _header(cfg, seed=seed, trials=trials, window=repr(res.window))
    written = ["samples.csv", "sim_sinr.csv", "sim_rate_ul.csv"]
    _write_samples(out / "samples.csv", res, hdr)
    write_curves_csv(out / "sim_sinr.csv", [res.sinr_curve(tdb)], hdr)
    write_curves_csv(out / "sim_rate_ul.csv", [res.rate_curve(rho)], hdr)
    if not uplink_only:
        write_curves_csv(out / "sim_rate_dl.csv", [res.rate_curve(rho, "dl")], hdr)
        write_joint_csv(out / "sim_joint.csv", rho, rho, res.joint_rate(rho, rho), hdr)
        written += ["sim_rate_dl.csv", "sim_joint.csv"]
    return written, res


# --------------------------------------------------------------------------
# validate


@dataclass
class Check:
    name: str
    passed: bool
    measured: str
    informational: bool = False

    def line(self) -> str:
        tag = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"{tag} {self.name}: {self.measured}"


def _normalisation_checks(cfg: NetworkConfig) -> list[Check]:
    dc = constants(cfg)
    out = []
    for k in range(cfg.n_tiers):
        if dc.a[k] == 0:
            continue
        m = integrate_semi_infinite(lambda l: serving_pl_pdf(l, dc, k))
        out.append(Check(f"serving path-loss density normalised (tier {k + 1})", abs(m - 1) < 1e-6, f"mass={m:.9f}"))
    tot = float(joint_tier_masses(dc).sum())
    out.append(Check("joint path-loss law normalised", abs(tot - 1) < 1e-6, f"mass={tot:.9f}"))
    for k in range(cfg.n_tiers):
        if dc.a[k] == 0:
            continue
        p = load_pmf(cfg, k).pmf.sum()
        out.append(Check(f"load PMF normalised (tier {k + 1})", abs(p - 1) < 1e-5, f"mass={p:.7f}"))
    return out


def cmd_validate(cfg: NetworkConfig, out: Path, trials: int, seed: int) -> tuple[list[str], list[Check]]:
    checks = _normalisation_checks(cfg)
    tdb = np.arange(-10.0, 20.01, 1.0)
    sir = coverage_curve(tdb, cfg, "exact")
    up = coverage_curve(tdb, cfg, "upper_bound")
    lo = coverage_curve(tdb, cfg, "lower_bound")
    ok = bool(np.all(lo.values <= sir.values + 1e-9) and np.all(sir.values <= up.values + 1e-9))
    checks.append(Check("bound sandwich", ok, f"min gaps {np.min(sir.values - lo.values):.3g}, "
                                              f"{np.min(up.values - sir.values):.3g}"))
    res = run_simulation(cfg, trials, seed=seed)
    sim = res.sinr_curve(tdb)
    d_exact = sim.sup_distance(coverage_curve(tdb, cfg, "sinr"))
    checks.append(Check("UL SINR analysis vs simulation (<= 0.02, -10..20 dB)", d_exact <= 0.02, f"sup={d_exact:.4f}"))
    inner = (tdb >= -5) & (tdb <= 15)
    devs = {}
    for kind in ("exact", "a1", "a2"):
        devs[kind] = float(np.max(np.abs(coverage_curve(tdb, cfg, kind).values - sim.values)[inner]))
    checks.append(Check("ablation A1/A2 divergence (-5..15 dB)", devs["a2"] > devs["a1"] > devs["exact"],
                        f"exact={devs['exact']:.4f} a1={devs['a1']:.4f} a2={devs['a2']:.4f}", informational=True))
    rho = np.geomspace(1e4, 1e7, 31)
    d_rate = res.rate_curve(rho).sup_distance(rate_curve(rho, cfg))
    checks.append(Check("UL rate analysis vs simulation (<= 0.03)", d_rate <= 0.03, f"sup={d_rate:.4f}"))
    d_joint = float(np.max(np.abs(res.joint_rate(rho, rho) - joint_rate_coverage(rho, rho, cfg))))
    checks.append(Check("joint rate analysis vs simulation (<= 0.03, diagonal)", d_joint <= 0.03, f"sup={d_joint:.4f}"))
    report = out / "validation.txt"
    report.write_text("\n".join(c.line() for c in checks) + "\n")
    write_curves_csv(out / "validation_sinr.csv", [sir, sim], _header(cfg, seed=seed, trials=trials))
    return ["validation.txt", "validation_sinr.csv"], checks


# --------------------------------------------------------------------------
# sweep


def cmd_sweep(cfg: NetworkConfig, out: Path, grid: dict) -> list[str]:
    metric = grid.get("metric", "sir_coverage")
    eps = tuple(grid.get("eps", [cfg.pcf]))
    if metric == "optimal_pcf":
        tdb = grid.get("tau_db", np.array([0.0]))
        rows = []
        for t in tdb:
            e, v = optimal_pcf(10 ** (t / 10), cfg, eps if "eps" in grid else None)
            rows.append({"tau_db": float(t), "eps_opt": e, "value": v})
        _write_rows(out / "sweep.csv", rows)
        return ["sweep.csv"]
    if metric == "coupled_vs_decoupled":
        ratios = tuple(grid.get("ul_db", np.arange(-30.0, 10.1, 2.0)))
        rows = coupled_vs_decoupled(cfg, eps, ratios, ul_ratios_db=ratios, dl_ratios_db=tuple(grid.get("dl_db", ratios)))
        _write_rows(out / "sweep.csv", rows)
        return ["sweep.csv"]
    if metric.startswith("joint_coverage") or metric.endswith("_rate"):
        thr = tuple(grid.get("rho", [128e3]))
    else:
        thr = tuple(10 ** (np.asarray(grid.get("tau_db", [0.0])) / 10))
    sg = SweepGrid(eps, tuple(grid.get("ul_db", ())), tuple(grid.get("dl_db", ())), thr, metric)
    res = weight_sweep(cfg, sg)
    res.write_csv(out / "sweep.csv")
    res.write_summary(out / "argmax.json")
    return ["sweep.csv", "argmax.json"]


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetcov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("analyze", "simulate", "validate", "sweep"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="YAML scenario file")
        s.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        s.add_argument("--grid", default=None, help='grid spec, e.g. "tau_db=-10:20:31;eps=0,0.5,1"')
        s.add_argument("--seed", type=int, default=0, help="simulation seed (default: 0)")
        s.add_argument("--trials", type=int, default=100_000, help="Monte Carlo samples (default: 100000)")
        if name == "analyze":
            s.add_argument("--curves", default="sir", help=f"comma list of {', '.join(_CURVES)}")
        if name == "simulate":
            s.add_argument("--uplink-only", action="store_true", help="skip the downlink")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = _now()
    t0 = time.time()
    try:
        cfg = load_config(args.config)
        grid = parse_grid(args.grid)
        args.out.mkdir(parents=True, exist_ok=True)
        seeds: list = []
        status = 0
        if args.command == "analyze":
            written = cmd_analyze(cfg, args.out, grid, [c.strip() for c in args.curves.split(",") if c.strip()])
        elif args.command == "simulate":
            written, _ = cmd_simulate(cfg, args.out, grid, args.trials, args.seed, args.uplink_only)
            seeds = [args.seed]
        elif args.command == "validate":
            written, checks = cmd_validate(cfg, args.out, args.trials, args.seed)
            seeds = [args.seed]
            for c in checks:
                print(c.line())
            status = 0 if all(c.passed or c.informational for c in checks) else 1
        else:
            written = cmd_sweep(cfg, args.out, grid)
    except (ConfigError, GridError, WindowTooSmallError, SamplingError, ValueError) as exc:
        print(f"hetcov {args.command}: error: {exc}", file=sys.stderr)
        return 2
    man = RunManifest(args.command, cfg.fingerprint(), seeds, __version__, started,
                      config_path=str(args.config), outputs=list(written))
    man.write(args.out)
    print(f"wrote {len(written)} file(s) to {args.out} in {time.time() - t0:.1f} s")
    return status


if __name__ == "__main__":
    sys.exit(main())
