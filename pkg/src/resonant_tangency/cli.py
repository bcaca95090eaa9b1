"""Command-line front end: portrait, sweep, verify and predict.

Every output file starts with ``# `` lines echoing the effective
configuration, so a file records how it was made.  Floats are written with
17 significant digits and rows in a fixed order, so identical configs give
byte-identical files whatever ``--jobs`` is.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from . import __version__
from .asymptotics import RATE_LABELS, check_conditions
from .checks import (
    FIT_TOLERANCE,
    ansatz_checks,
    condition_checks,
    fit_checks,
    lemma_checks,
    trace_det_checks,
)
from .errors import DegenerateDirection, InsufficientData, ResonantTangencyError, SolverError
from .map_core import ModelParams, extract_normal_form
from .orbits import K_CAP
from .portrait import build_portrait, portrait_rows
from .scan import DirectionRay, fits_from_results, locate_many, prediction_for

logger = logging.getLogger("resonant_tangency")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

K_DEFAULTS = {"portrait": (1, 15), "sweep": (8, 22), "verify": (8, 22), "predict": (8, 22)}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    alpha: float = 0.8
    a10: float = 0.2
    c20: float = -0.5
    d50: float = 1.0
    mu: tuple = (0.0, 0.0, 0.0, 0.0)
    direction: int | None = None
    v: tuple | None = None
    k_min: int | None = None
    k_max: int | None = None
    tol_newton: float = 1e-12
    tol_bisect: float = 1e-8
    allow_large_k: bool = False
    strict: bool = False
    n_iterations: int = 6
    plot_script: bool = True
    # not echoed into headers: they do not change results
    out: str = "."
    jobs: int = 1
    _quiet: tuple = field(default=("out", "jobs"), repr=False)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.alpha, self.a10, self.c20, self.d50, tuple(self.mu))

    def header(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}
        for key in self._quiet:
            d.pop(key, None)
        d["mu"] = list(d["mu"])
        if d["v"] is not None:
            d["v"] = list(d["v"])
        return d


_SECTIONS = ("model", "scan", "output", "portrait")


def load_config_file(path) -> dict:
    """Read a YAML config; nested sections are flattened into one mapping."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    flat = {}
    for key, val in raw.items():
        if key in _SECTIONS and isinstance(val, dict):
            flat.update(val)
        else:
            flat[key] = val
    return {k.replace("-", "_"): v for k, v in flat.items()}


def _vec(text, n=4):
    if isinstance(text, (list, tuple)):
        vals = [float(t) for t in text]
    else:
        vals = [float(t) for t in str(text).split(",")]
    if len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
    return tuple(vals)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then flags; then validate."""
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig) if not f.name.startswith("_")}
    data = load_config_file(args.config) if args.config else {}
    unknown = set(data) - names - {"mu1", "mu2", "mu3", "mu4"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, val in vars(args).items():
        if key in names and val is not None:
            data[key] = val
        elif key in ("mu1", "mu2", "mu3", "mu4") and val is not None:
            data[key] = val
    mu = list(_vec(data.pop("mu"))) if "mu" in data else list(cfg.mu)
    for i in range(4):
        key = f"mu{i + 1}"
        if key in data:
            mu[i] = float(data.pop(key))
    cfg.mu = tuple(mu)
    try:
        for key, val in data.items():
            if key == "v":
                val = _vec(val)
            elif key in ("direction", "k_min", "k_max", "jobs", "n_iterations"):
                val = int(val)
            elif key in ("allow_large_k", "strict", "plot_script"):
                val = bool(val)
            elif key == "out":
                val = str(val)
            else:
                val = float(val)
            setattr(cfg, key, val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc

    lo, hi = K_DEFAULTS.get(args.command, (8, 22))
    cfg.k_min = lo if cfg.k_min is None else cfg.k_min
    cfg.k_max = hi if cfg.k_max is None else cfg.k_max
    if cfg.k_min < 1 or cfg.k_max < cfg.k_min:
        raise ConfigError(f"need 1 <= k_min <= k_max, got {cfg.k_min}..{cfg.k_max}")
    if cfg.k_max > K_CAP and not cfg.allow_large_k:
        raise ConfigError(f"k_max > {K_CAP} needs --allow-large-k")
    if cfg.direction is not None and cfg.v is not None:
        raise ConfigError("give either a direction index or a vector v, not both")
    if cfg.direction is not None and cfg.direction not in (1, 2, 3, 4):
        raise ConfigError(f"direction must be 1..4, got {cfg.direction}")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be at least 1")
    try:
        cfg.params
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _ray(cfg: RunConfig) -> DirectionRay:
    try:
        if cfg.v is not None:
            return DirectionRay.from_vector(cfg.v, cfg.params)
        return DirectionRay.axis(cfg.direction or 1, cfg.params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def write_table(path: Path, columns, rows, cfg: RunConfig, extra_header=()):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# resonant-tangency {__version__}\n")
        fh.write("# config: " + json.dumps(cfg.header(), sort_keys=True) + "\n")
        for line in extra_header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])


PORTRAIT_PLOT = '''"""Render {csv} (generated by resonant-tangency portrait)."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

groups = defaultdict(list)
with open("{csv}") as fh:
    rows = csv.reader(line for line in fh if not line.startswith("#"))
    next(rows)
    for entity, _, x, y in rows:
        groups[entity].append((float(x), float(y)))

fig, ax = plt.subplots(figsize=(6, 6))
for name in ("unstable_plus", "unstable_minus"):
    if name in groups:
        xs, ys = zip(*groups[name])
        ax.plot(xs, ys, "-", color="tab:red", lw=0.6)
if "stable_local" in groups:
    xs, ys = zip(*groups["stable_local"])
    ax.plot(xs, ys, "-", color="tab:blue", lw=0.6)
orbits = sorted((n for n in groups if n.startswith("orbit_k")), key=lambda n: int(n[7:]))
cmap = plt.get_cmap("viridis", max(len(orbits), 1))
for i, name in enumerate(orbits):
    xs, ys = zip(*groups[name])
    ax.plot(xs, ys, "o", ms=3, color=cmap(i), label=name[6:])
if "homoclinic" in groups:
    xs, ys = zip(*groups["homoclinic"])
    ax.plot(xs, ys, "x", color="k", ms=4)
xs, ys = zip(*groups["fixed_point"])
ax.plot(xs, ys, "s", color="k", ms=5)
ax.set_xlim(-0.1, 1.3)
ax.set_ylim(-0.1, 1.3)
ax.set_xlabel("x")
ax.set_ylabel("y")
ax.legend(fontsize=6, ncol=3)
fig.savefig("{stem}.png", dpi=200)
'''

SWEEP_PLOT = '''"""Render {csv} (generated by resonant-tangency sweep)."""
import csv

import matplotlib.pyplot as plt

data = {{"SN": [], "PD": []}}
with open("{csv}") as fh:
    rows = csv.DictReader(line for line in fh if not line.startswith("#"))
    for r in rows:
        if r["status"] in ("ok", "strip"):
            data[r["kind"]].append((int(r["k"]), float(r["epsilon"]), float(r["scaled_value"])))

limits = {limits}
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for kind, color in (("SN", "tab:blue"), ("PD", "tab:red")):
    if not data[kind]:
        continue
    k, eps, scaled = zip(*data[kind])
    ax1.semilogy(k, [abs(e) for e in eps], "o-", color=color, label=kind)
    ax2.plot(k, scaled, "o-", color=color, label=kind)
    ax2.axhline(limits[kind], color=color, ls="--", lw=0.8)
ax1.set_xlabel("k")
ax1.set_ylabel("|eps|")
ax2.set_xlabel("k")
ax2.set_ylabel("eps / rate ({rate})")
ax1.legend()
fig.tight_layout()
fig.savefig("{stem}.png", dpi=200)
'''


def cmd_portrait(cfg: RunConfig) -> int:
    params = cfg.params
    ds = build_portrait(params, cfg.k_max, k_min=cfg.k_min, n_iterations=cfg.n_iterations, strict=cfg.strict)
    out = Path(cfg.out)
    extra = [f"missing k={k}: {why}" for k, why in ds.missing]
    write_table(out / "portrait.csv", ("entity", "index", "x", "y"), portrait_rows(ds), cfg, extra)
    if cfg.plot_script:
        (out / "plot_portrait.py").write_text(PORTRAIT_PLOT.format(csv="portrait.csv", stem="portrait"))
    for k, why in ds.missing:
        logger.warning("portrait: no stable single-round orbit for k=%d (%s)", k, why)
    print(f"portrait: {len(ds.orbits)} orbits, {len(ds.missing)} missing -> {out / 'portrait.csv'}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    params = cfg.params
    ray = _ray(cfg)
    ks = range(cfg.k_min, cfg.k_max + 1)
    results = locate_many(ks, ray, params, jobs=cfg.jobs, tol_bisect=cfg.tol_bisect, tol_newton=cfg.tol_newton)
    rows = []
    for k, found in results:
        for kind in ("SN", "PD"):
            item = found[kind]
            if isinstance(item, str):
                rows.append((ray.case.value, kind, k, float("nan"), float("nan"), False, item))
            else:
                status = "ok" if item.strict else "strip"
                rows.append((ray.case.value, kind, k, item.epsilon, item.scaled_value, item.strict, status))
    rows.sort(key=lambda r: (r[2], r[1], r[3]))
    out = Path(cfg.out)
    write_table(out / "bifurcations.csv",
                ("case", "kind", "k", "epsilon", "scaled_value", "strict", "status"), rows, cfg)

    rate = RATE_LABELS[ray.case]
    pred = prediction_for(cfg.k_max, ray, params)
    summary = []
    code = EXIT_OK
    try:
        fits = fits_from_results(results, ray, params)
    except InsufficientData as exc:
        fits = None
        code = EXIT_SOLVER
        for kind, lim in (("SN", pred.sn_limit), ("PD", pred.pd_limit)):
            summary.append((ray.case.value, kind, rate, lim, float("nan"), float("nan"), float("nan"),
                            float("nan"), 0, f"insufficient points: {exc}"))
    if fits is not None:
        for fit, lim in zip(fits, (pred.sn_limit, pred.pd_limit)):
            summary.append((ray.case.value, fit.kind, rate, lim, fit.extrapolated_limit, fit.linear_limit,
                            fit.extrapolated_limit / lim - 1.0, fit.fit_residual, len(fit.sequence), "ok"))
    write_table(out / "fit_summary.csv",
                ("case", "kind", "rate", "predicted_limit", "extrapolated_limit", "linear_limit",
                 "relative_error", "fit_residual", "n_points", "status"), summary, cfg)
    if cfg.plot_script:
        limits = {"SN": pred.sn_limit, "PD": pred.pd_limit}
        (out / "plot_sweep.py").write_text(
            SWEEP_PLOT.format(csv="bifurcations.csv", stem="sweep", limits=repr(limits), rate=rate))
    for r in summary:
        print(f"{r[1]}: rate {r[2]}, predicted {r[3]:.6g}, extrapolated {r[4]:.6g} ({r[9]})")
    return code


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.v is not None:
        raise ConfigError("verify runs the coordinate directions; use --direction N")
    params = cfg.params
    checks = condition_checks(params)
    checks += trace_det_checks(params)
    checks += ansatz_checks(params)
    checks += lemma_checks(params)
    directions = (cfg.direction,) if cfg.direction else (1, 2, 3, 4)
    fchecks, _ = fit_checks(params, directions, cfg.k_min, cfg.k_max, jobs=cfg.jobs,
                            tolerance=FIT_TOLERANCE, tol_bisect=cfg.tol_bisect, tol_newton=cfg.tol_newton)
    checks += fchecks
    passed = all(c.passed for c in checks)
    report = {"version": __version__, "config": cfg.header(), "passed": passed,
              "checks": [c.as_dict() for c in checks]}
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "verify.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in checks:
        print(f"[{c.status.upper()}] {c.check}: value={c.value} bound={c.bound} {c.detail}".rstrip())
    return EXIT_OK if passed else EXIT_FAIL


def cmd_predict(cfg: RunConfig) -> int:
    params = cfg.params
    ray = _ray(cfg)
    rep = check_conditions(extract_normal_form(params))
    rows = []
    for k in range(cfg.k_min, cfg.k_max + 1):
        pred = prediction_for(k, ray, params)
        rows.append((k, ray.case.value, pred.rate, pred.sn_limit, pred.pd_limit,
                     pred.epsilon("SN", k), pred.epsilon("PD", k)))
    extra = [f"Delta = {fmt(rep.delta)}"] + [f"{r.name}: {'pass' if r.passed else 'fail'}" for r in rep.results]
    write_table(Path(cfg.out) / "predictions.csv",
                ("k", "case", "rate", "sn_scaled_limit", "pd_scaled_limit", "eps_sn", "eps_pd"), rows, cfg, extra)
    print(f"Delta = {rep.delta:.6g}; case {ray.case.value}, rate {rows[0][2]}")
    print(f"scaled limits: SN {rows[0][3]:.6g}, PD {rows[0][4]:.6g}")
    return EXIT_OK


COMMANDS = {"portrait": cmd_portrait, "sweep": cmd_sweep, "verify": cmd_verify, "predict": cmd_predict}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file; flags override its values")
    g = common.add_argument_group("model")
    for name in ("alpha", "a10", "c20", "d50", "mu1", "mu2", "mu3", "mu4"):
        g.add_argument(f"--{name}", type=float)
    d = common.add_mutually_exclusive_group()
    d.add_argument("--direction", type=int, help="coordinate direction 1..4")
    d.add_argument("--v", help="direction vector a,b,c,d")
    common.add_argument("--k-min", type=int)
    common.add_argument("--k-max", type=int)
    common.add_argument("--allow-large-k", action="store_true", default=None)
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--tol-newton", type=float)
    common.add_argument("--tol-bisect", type=float)
    common.add_argument("--no-plot-script", dest="plot_script", action="store_false", default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="resonant-tangency", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("portrait", parents=[common], help="phase-portrait data")
    p.add_argument("--n-iterations", type=int, help="manifold growth levels")
    p.add_argument("--strict", action="store_true", default=None,
                   help="fail (exit 3) when an orbit in the k range is missing")
    sub.add_parser("sweep", parents=[common], help="bifurcation values along a ray")
    sub.add_parser("verify", parents=[common], help="run the numerical checks")
    sub.add_parser("predict", parents=[common], help="leading-order predictions only")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, DegenerateDirection) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ResonantTangencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
