"""Command-line entry point: JSON config in, delimited artifacts out.

One process runs one subcommand against one merged configuration (built-in
defaults, then the --config file, then --set overrides).  Every run writes
report.json plus subcommand-specific CSV/JSON artifacts and, unless
--no-figures is given, PNG figures, all stamped with the config digest.
The exit code is 0 exactly when every recorded assertion passed.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .fields import (
    PhysicalParams,
    SpectralField,
    random_field,
    rescaled,
    sobolev_norm,
    zero_field,
)
from .evolution import StepperConfig, default_dt, energy_law_residual, evolve, picard_solve
from .normal_form import check_nonresonance, duhamel_residual, multilinear_constants
from .bourgain import scan_bilinear, scan_l4, scan_l6
from .resonance import dyadic_sweep, enumerate_Apq
from .experiments import (
    AssertionRecord,
    run_absorbing_ball,
    run_attractor_ensemble,
    run_smoothing,
    _auto_stride,
)
from . import reporting
from .reporting import config_digest

__all__ = ["RunConfig", "ConfigError", "parse_config", "dispatch", "main"]


class ConfigError(ValueError):
    """Configuration rejected before dispatch."""


DEFAULT_CONFIG: dict = {
    "params": {"alpha": 1.0, "beta": 0.0, "gamma": 1.0},
    "kmax": 32,
    "dt": None,
    "T": 4.0,
    "seed": 1234,
    "outdir": "kawalab-out",
    "initial": {"kind": "random", "decay": 0.8, "scale": 1.0, "seed": 7, "norm": None},
    "forcing": {"kind": "random", "decay": 2.0, "scale": 1.0, "seed": 11, "norm": 1.0},
    "experiment": {},
}

EXPERIMENT_DEFAULTS: dict = {
    "evolve": {},
    "picard": {"delta": 0.05, "iters": 16, "quad_nodes": 1024, "tol": 1e-6,
               "kmax": 8, "norm": 0.1},
    "normal-form-residual": {"t": 0.25, "panels": 4096, "tol": 1e-4,
                             "kmax": 8, "norm": 0.5},
    "multilinear-scan": {"trials": 100, "s": 0.0, "decay": 0.8},
    "bourgain-scan": {"which": "all", "trials": 200, "scan_kmax": 16, "s": 0.0,
                      "nt": 256, "span": 1.0, "eps": 0.1,
                      "l6_trials": 10, "l6_kmax": 8, "l6_nt": 2048, "l6_decay": 0.7},
    "resonance-count": {"sweep_to": 16},
    "absorbing": {"members": 8, "max_norm": 5.0, "decay": 0.8, "slack": 1e-6},
    "smoothing": {"contrast_floor": 10.0, "plateau_fraction": 0.2},
    "attractor": {"norms": [1.0, 5.0], "spread_tol": 0.2, "slack": 1e-6,
                  "T": 20.0},
}

_FIELD_KINDS = ("random", "file", "zero")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one dispatch."""

    params: PhysicalParams
    kmax: int
    dt: float | None
    T: float
    seed: int
    outdir: Path
    initial: dict
    forcing: dict
    experiment: str
    extra: dict
    raw: dict


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if path == "" and key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "experiment":
            out[key] = _merge(out[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _apply_set(raw: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set wants key=value, got {assignment!r}")
    key, _, text = assignment.partition("=")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.split(".")
    if parts[0] not in DEFAULT_CONFIG:
        raise ConfigError(f"unknown config key: {parts[0]}")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into scalar at {part!r} in {key!r}")
    node[parts[-1]] = value


def _need(raw: dict, key: str, kinds, where: str):
    if key not in raw or raw[key] is None:
        raise ConfigError(f"missing config key: {where}{key}")
    if not isinstance(raw[key], kinds):
        raise ConfigError(f"config key {where}{key} has the wrong type")
    return raw[key]


def _validate_field_spec(spec, where: str) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be an object")
    kind = spec.get("kind")
    if kind not in _FIELD_KINDS:
        raise ConfigError(f"{where}.kind must be one of {_FIELD_KINDS}")
    if kind == "random":
        for key in ("decay", "scale", "seed"):
            _need(spec, key, (int, float), f"{where}.")
    if kind == "file":
        path = _need(spec, "path", str, f"{where}.")
        if not Path(path).exists():
            raise ConfigError(f"{where}.path does not exist: {path}")
    return spec


def build_config(raw: dict, experiment: str) -> RunConfig:
    """Validate a merged raw config for one subcommand.

    Parameter validation includes the resonance search: any (alpha, beta)
    admitting a vanishing denominator within the operator range is rejected
    with the witness pair echoed.
    """
    if experiment not in EXPERIMENT_DEFAULTS:
        raise ConfigError(f"unknown experiment: {experiment}")
    pr = _need(raw, "params", dict, "")
    for key in ("alpha", "beta", "gamma"):
        _need(pr, key, (int, float), "params.")
    kmax = _need(raw, "kmax", int, "")
    if kmax < 1:
        raise ConfigError("kmax must be >= 1")
    T = _need(raw, "T", (int, float), "")
    if T <= 0:
        raise ConfigError("T must be positive")
    dt = raw.get("dt")
    if dt is not None and (not isinstance(dt, (int, float)) or dt <= 0):
        raise ConfigError("dt must be positive or null")
    seed = _need(raw, "seed", int, "")
    outdir = Path(_need(raw, "outdir", str, ""))

    bound = max(64, 2 * kmax)
    try:
        params = PhysicalParams(float(pr["alpha"]), float(pr["beta"]), float(pr["gamma"]),
                                nonresonance_bound=bound)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    verdict = check_nonresonance(params, bound)
    if not verdict.nonresonant:
        raise ConfigError(
            f"resonant parameters alpha={params.alpha} beta={params.beta}: "
            f"witness pair {verdict.witness}")

    initial = _validate_field_spec(raw.get("initial"), "initial")
    forcing = _validate_field_spec(raw.get("forcing"), "forcing")
    extra = dict(EXPERIMENT_DEFAULTS[experiment])
    user_extra = raw.get("experiment") or {}
    if not isinstance(user_extra, dict):
        raise ConfigError("experiment must be an object")
    for key, val in user_extra.items():
        if key not in extra:
            raise ConfigError(f"unknown experiment key for {experiment}: {key}")
        extra[key] = val

    merged = copy.deepcopy(raw)
    merged["experiment"] = {"name": experiment, **extra}
    return RunConfig(params=params, kmax=kmax, dt=None if dt is None else float(dt),
                     T=float(T), seed=seed, outdir=outdir, initial=initial,
                     forcing=forcing, experiment=experiment, extra=extra, raw=merged)


def parse_config(path, experiment: str = "evolve", overrides=()) -> RunConfig:
    """Load a JSON config file over the defaults and validate it."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        user = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    raw = _merge(DEFAULT_CONFIG, user)
    for assignment in overrides:
        _apply_set(raw, assignment)
    return build_config(raw, experiment)


def _build_field(spec: dict, kmax: int, role: str):
    """Realize a field spec; forcing 'zero' maps to None (no forcing term)."""
    kind = spec["kind"]
    if kind == "zero":
        return None if role == "forcing" else zero_field(kmax)
    if kind == "random":
        u = random_field(kmax, float(spec["decay"]), float(spec["scale"]), int(spec["seed"]))
    else:
        u = reporting.read_spectrum(spec["path"])
        if u.kmax != kmax:
            raise ConfigError(f"{role} file has kmax={u.kmax}, config says {kmax}")
    norm = spec.get("norm")
    if norm is not None:
        u = rescaled(u, float(norm))
    return u


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (payload, assertions, series or None)

def _traj_series(traj, f) -> dict:
    return {
        "t": traj.times,
        "l2": traj.norms(0.0),
        "h1": traj.norms(1.0),
        "h2": traj.norms(2.0),
        "energy_residual": energy_law_residual(traj, f),
    }


def _run_evolve(cfg: RunConfig, out: Path, digest: str, figures: bool):
    g = _build_field(cfg.initial, cfg.kmax, "initial")
    f = _build_field(cfg.forcing, cfg.kmax, "forcing")
    dt = cfg.dt if cfg.dt is not None else default_dt(g, f, cfg.params)
    stride = _auto_stride(cfg.T, dt)
    traj = evolve(g, f, cfg.params, cfg.T, StepperConfig(dt=dt), sample_stride=stride)
    series = _traj_series(traj, f)
    reporting.write_timeseries_csv(out / "timeseries.csv", series, digest)
    reporting.write_checkpoint(out / "checkpoint-initial.json", g, 0.0, cfg.params, digest)
    reporting.write_checkpoint(out / "checkpoint-final.json", traj.state(len(traj) - 1),
                               float(traj.times[-1]), cfg.params, digest)
    if figures:
        reporting.render_series_figure(series, out / "timeseries.png",
                                       "norms along the run", logy=False)
    payload = {
        "dt": traj.dt,
        "samples": len(traj),
        "final_norms": {"l2": float(series["l2"][-1]), "h2": float(series["h2"][-1])},
    }
    return payload, [], None


def _run_picard(cfg: RunConfig, out: Path, digest: str, figures: bool):
    # the quadrature only resolves the dispersive oscillation when
    # delta/quad_nodes * max phase mismatch is order one, so this subcommand
    # carries its own kmax and data-norm defaults instead of the global ones
    kmax = cfg.kmax if cfg.extra["kmax"] is None else int(cfg.extra["kmax"])
    g = _build_field(cfg.initial, kmax, "initial")
    if cfg.extra["norm"] is not None:
        g = rescaled(g, float(cfg.extra["norm"]))
    f = _build_field(cfg.forcing, kmax, "forcing")
    delta = float(cfg.extra["delta"])
    res = picard_solve(g, f, cfg.params, delta, int(cfg.extra["iters"]),
                       quad_nodes=int(cfg.extra["quad_nodes"]))
    # the cross-check stepper needs the same oscillation resolution
    dt = cfg.dt if cfg.dt is not None else min(default_dt(g, f, cfg.params), delta / 512.0)
    traj = evolve(g, f, cfg.params, delta, StepperConfig(dt=dt))
    diff = sobolev_norm(
        SpectralField(kmax=kmax, coeffs=traj.coeffs[-1] - res.field.coeffs), 0.0)
    tol = float(cfg.extra["tol"])
    assertions = [AssertionRecord("stepper_agreement", bool(diff <= tol), float(diff), tol,
                                  "upper", "L2 gap between the fixed point and the stepper")]
    series = {"t": np.arange(len(res.contraction_history), dtype=np.float64),
              "contraction": res.contraction_history}
    reporting.write_timeseries_csv(out / "timeseries.csv", series, digest)
    reporting.write_checkpoint(out / "checkpoint-final.json", res.field, delta,
                               cfg.params, digest)
    if figures:
        reporting.render_series_figure(series, out / "contraction.png",
                                       "fixed-point iteration distances", logy=True)
    payload = {"delta": delta, "quad_nodes": res.quad_nodes,
               "stepper_gap": float(diff),
               "contraction_history": res.contraction_history}
    return payload, assertions, None


def _run_normal_form_residual(cfg: RunConfig, out: Path, digest: str, figures: bool):
    # the memory integrals oscillate at the dispersion rate of the highest
    # mode, so this subcommand also defaults to a small kmax and a panel
    # count that keeps phase(kmax) * t / panels near one
    kmax = cfg.kmax if cfg.extra["kmax"] is None else int(cfg.extra["kmax"])
    g = _build_field(cfg.initial, kmax, "initial")
    if cfg.extra["norm"] is not None:
        g = rescaled(g, float(cfg.extra["norm"]))
    f = _build_field(cfg.forcing, kmax, "forcing")
    t = float(cfg.extra["t"])
    panels = int(cfg.extra["panels"])
    if panels < 2:
        raise ConfigError("normal-form-residual needs at least 2 panels")
    traj = evolve(g, f, cfg.params, t, StepperConfig(dt=t / panels))
    rep = duhamel_residual(traj, g, f, t)
    tol = float(cfg.extra["tol"])
    assertions = [AssertionRecord("duhamel_residual", rep.total_relative <= tol,
                                  rep.total_relative, tol, "upper",
                                  f"relative L2 defect at t={rep.t:g}, {rep.panels} panels")]
    series = _traj_series(traj, f)
    reporting.write_timeseries_csv(out / "timeseries.csv", series, digest)
    if figures:
        reporting.render_series_figure(series, out / "timeseries.png",
                                       "norms along the run", logy=False)
    payload = {"t": rep.t, "panels": rep.panels, "total_relative": rep.total_relative,
               "lhs_norm": rep.lhs_norm, "term_h2": rep.term_magnitudes}
    return payload, assertions, None


def _finite_assertion(name: str, values) -> AssertionRecord:
    bad = int(np.sum(~np.isfinite(np.asarray(values, dtype=np.float64))))
    return AssertionRecord(name, bad == 0, float(bad), 0.0, "upper",
                           "count of non-finite ratios")


def _run_multilinear_scan(cfg: RunConfig, out: Path, digest: str, figures: bool):
    rep = multilinear_constants(cfg.params, cfg.kmax, float(cfg.extra["s"]),
                                int(cfg.extra["trials"]), cfg.seed,
                                decay=float(cfg.extra["decay"]))
    columns = {"trial": np.arange(rep.trials)}
    columns.update(rep.ratios)
    reporting.write_columns_csv(out / "scan-multilinear.csv", columns, digest)
    assertions = [_finite_assertion(f"finite:{name}", vals)
                  for name, vals in rep.ratios.items()]
    if figures:
        for name, vals in rep.ratios.items():
            fake = SimpleNamespace(name=f"multilinear {name}", ratios=np.asarray(vals))
            reporting.render_scan_figure(fake, out / f"scan-{name}.png")
    payload = {"kmax": rep.kmax, "s": rep.s, "trials": rep.trials, "seed": rep.seed,
               "decay": rep.decay, "stats": rep.stats}
    return payload, assertions, None


def _run_bourgain_scan(cfg: RunConfig, out: Path, digest: str, figures: bool):
    which = str(cfg.extra["which"])
    wanted = ("bilinear", "l4", "l6") if which == "all" else (which,)
    if any(w not in ("bilinear", "l4", "l6") for w in wanted):
        raise ConfigError("bourgain-scan 'which' must be bilinear, l4, l6, or all")
    x = cfg.extra
    scans = []
    if "bilinear" in wanted:
        scans.append(scan_bilinear(int(x["trials"]), int(x["scan_kmax"]), float(x["s"]),
                                   cfg.seed, cfg.params, nt=int(x["nt"]), span=float(x["span"])))
    if "l4" in wanted:
        scans.append(scan_l4(int(x["trials"]), int(x["scan_kmax"]), cfg.seed, cfg.params,
                             nt=int(x["nt"]), span=float(x["span"])))
    if "l6" in wanted:
        scans.append(scan_l6(int(x["l6_trials"]), int(x["l6_kmax"]), float(x["eps"]),
                             cfg.seed, cfg.params, nt=int(x["l6_nt"]),
                             decay=float(x["l6_decay"])))
    assertions, payload = [], {}
    for scan in scans:
        reporting.write_scan_csv(out / f"scan-{scan.name}.csv", scan, digest)
        if figures:
            reporting.render_scan_figure(scan, out / f"scan-{scan.name}.png")
        assertions.append(_finite_assertion(f"finite:{scan.name}", scan.ratios))
        payload[scan.name] = scan.summary()
    return payload, assertions, None


def _run_resonance_count(cfg: RunConfig, out: Path, digest: str, figures: bool):
    sweep_to = int(cfg.extra["sweep_to"])
    if sweep_to < 1:
        raise ConfigError("sweep_to must be >= 1")
    ks = [1 << i for i in range(sweep_to.bit_length()) if (1 << i) <= sweep_to]
    rows = dyadic_sweep(cfg.params, ks)
    reporting.write_sweep_csv(out / "sweep.csv", rows, digest)
    table = enumerate_Apq(1, 1, cfg.params)
    reporting.write_table_csv(out / "table-K1.csv", table, digest)
    assertions = []
    big = [r for r in rows if r.K >= 16 and r.max_count > 0]
    if big:
        growth = max(math.log(r.max_count) / math.log(r.K) for r in big)
        assertions.append(AssertionRecord("subunit_growth", growth < 1.0, growth, 1.0,
                                          "upper", "max of log(max_count)/log(K), K >= 16"))
    if figures:
        reporting.render_loglog_figure([r.K for r in rows],
                                       {"max_count": [max(r.max_count, 1) for r in rows]},
                                       out / "sweep.png", "K", "largest class per shell",
                                       guide=(1.0, "slope 1"))
    payload = {"K": ks, "rows": [r._asdict() for r in rows],
               "table_K1": {"keys": [[int(a), int(b)] for a, b in table.group_keys],
                            "counts": [int(c) for c in table.group_sizes()]}}
    return payload, assertions, None


def _experiment_outputs(report, out: Path, digest: str, figures: bool, figure_logy=False):
    reporting.write_timeseries_csv(out / "timeseries.csv", report.series, digest)
    if figures:
        reporting.render_series_figure(report.series, out / "timeseries.png",
                                       report.name, logy=figure_logy)
    return reporting.experiment_payload(report), list(report.assertions)


def _run_absorbing(cfg: RunConfig, out: Path, digest: str, figures: bool):
    f = _build_field(cfg.forcing, cfg.kmax, "forcing")
    if f is None:
        raise ConfigError("the absorbing experiment needs nonzero forcing")
    n = int(cfg.extra["members"])
    if n < 1:
        raise ConfigError("members must be >= 1")
    top = float(cfg.extra["max_norm"])
    decay = float(cfg.extra["decay"])
    norms = [top * (i + 1) / n for i in range(n)]
    gs = [rescaled(random_field(cfg.kmax, decay, 1.0, cfg.seed + i), norms[i])
          for i in range(n)]
    report = run_absorbing_ball(gs, f, cfg.params, cfg.T,
                                StepperConfig(dt=cfg.dt), slack=float(cfg.extra["slack"]),
                                labels=[f"m{i}" for i in range(n)])
    payload, assertions = _experiment_outputs(report, out, digest, figures)
    return payload, assertions, None


def _run_smoothing(cfg: RunConfig, out: Path, digest: str, figures: bool):
    g = _build_field(cfg.initial, cfg.kmax, "initial")
    f = _build_field(cfg.forcing, cfg.kmax, "forcing")
    floor = cfg.extra["contrast_floor"]
    frac = cfg.extra["plateau_fraction"]
    report = run_smoothing(g, f, cfg.params, cfg.T, StepperConfig(dt=cfg.dt),
                           contrast_floor=None if floor is None else float(floor),
                           plateau_fraction=None if frac is None else float(frac))
    payload, assertions = _experiment_outputs(report, out, digest, figures)
    return payload, assertions, None


def _run_attractor(cfg: RunConfig, out: Path, digest: str, figures: bool):
    base = _build_field(cfg.initial, cfg.kmax, "initial")
    f = _build_field(cfg.forcing, cfg.kmax, "forcing")
    norms = [float(v) for v in cfg.extra["norms"]]
    if not norms:
        raise ConfigError("attractor needs at least one norm")
    gs = [rescaled(base, v) for v in norms]
    # radii take a few damping times to stabilize after the restart, so the
    # horizon defaults long here rather than to the global T
    T = cfg.T if cfg.extra["T"] is None else float(cfg.extra["T"])
    report = run_attractor_ensemble(gs, f, cfg.params, T, StepperConfig(dt=cfg.dt),
                                    slack=float(cfg.extra["slack"]),
                                    spread_tol=float(cfg.extra["spread_tol"]),
                                    labels=[f"n{v:g}" for v in norms])
    payload, assertions = _experiment_outputs(report, out, digest, figures)
    return payload, assertions, None


_HANDLERS = {
    "evolve": _run_evolve,
    "picard": _run_picard,
    "normal-form-residual": _run_normal_form_residual,
    "multilinear-scan": _run_multilinear_scan,
    "bourgain-scan": _run_bourgain_scan,
    "resonance-count": _run_resonance_count,
    "absorbing": _run_absorbing,
    "smoothing": _run_smoothing,
    "attractor": _run_attractor,
}


def dispatch(cfg: RunConfig, figures: bool = True) -> int:
    """Run one validated config; returns the process exit code."""
    out = cfg.outdir
    out.mkdir(parents=True, exist_ok=True)
    digest = config_digest(cfg.raw)
    payload, assertions, _ = _HANDLERS[cfg.experiment](cfg, out, digest, figures)
    passed = all(a.passed for a in assertions)
    report = {
        "experiment": cfg.experiment,
        "passed": passed,
        "config": cfg.raw,
        "assertions": [{"name": a.name, "passed": a.passed, "observed": a.observed,
                        "bound": a.bound, "kind": a.kind, "note": a.note}
                       for a in assertions],
        "results": payload,
    }
    reporting.write_report_json(out / "report.json", report, digest)
    for a in assertions:
        print(a.line())
    print(f"[{cfg.experiment}] {'PASS' if passed else 'FAIL'} -> {out / 'report.json'}")
    return 0 if passed else 1


def _build_parser() -> argparse.ArgumentParser:
    epilog = ("default config:\n" + json.dumps(DEFAULT_CONFIG, indent=2)
              + "\n\nper-experiment defaults (config key 'experiment'):\n"
              + json.dumps(EXPERIMENT_DEFAULTS, indent=2))
    parser = argparse.ArgumentParser(
        prog="kawalab",
        description="Spectral studies of the damped forced fifth-order dispersive "
                    "equation on the torus.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in _HANDLERS:
        s = sub.add_parser(name, help=f"run the {name} study")
        s.add_argument("--config", type=str, default=None,
                       help="JSON config file merged over the defaults")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, value parsed as JSON "
                            "(e.g. --set params.alpha=2)")
        s.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering; delimited outputs only")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = parse_config(args.config, args.command, args.set)
        else:
            raw = copy.deepcopy(DEFAULT_CONFIG)
            for assignment in args.set:
                _apply_set(raw, assignment)
            cfg = build_config(raw, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return dispatch(cfg, figures=not args.no_figures)
    except Exception as exc:  # surfaced with context, nonzero for CI
        print(f"{cfg.experiment} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
