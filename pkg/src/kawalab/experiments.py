"""Long-time numerical studies: absorbing ball, nonlinear smoothing, ensembles.

Each runner integrates one or more trajectories, tracks the norms the
corresponding estimate controls, and returns an ExperimentReport whose
assertions carry their tolerances and the settings they were checked at.
Pass/fail is decided here; persistence lives in the reporting module.

Ensemble members are independent and run through parallel_map, which honors
the KAWALAB_THREADS environment variable (default: serial).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import PhysicalParams, SpectralField, sobolev_norm
from .evolution import (
    StepperConfig,
    Trajectory,
    absorbing_time,
    default_dt,
    evolve,
    phase,
)

__all__ = [
    "AssertionRecord",
    "ExperimentReport",
    "worker_count",
    "parallel_map",
    "decay_envelope",
    "run_absorbing_ball",
    "run_smoothing",
    "run_attractor_ensemble",
]

# assertions on fitted log-slopes tolerate this much upward drift per unit time
SLOPE_TOL = 1e-3

_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class AssertionRecord:
    """One checked inequality: observed vs bound, with the direction spelled
    out ("upper" means observed <= bound passes, "lower" the reverse)."""

    name: str
    passed: bool
    observed: float
    bound: float
    kind: str = "upper"
    note: str = ""

    def line(self) -> str:
        rel = "<=" if self.kind == "upper" else ">="
        tag = "PASS" if self.passed else "FAIL"
        out = f"{tag} {self.name}: {self.observed:.6g} {rel} {self.bound:.6g}"
        return out + (f"  ({self.note})" if self.note else "")


def _upper(name: str, observed: float, bound: float, note: str = "") -> AssertionRecord:
    return AssertionRecord(name, bool(observed <= bound), float(observed), float(bound), "upper", note)


def _lower(name: str, observed: float, bound: float, note: str = "") -> AssertionRecord:
    return AssertionRecord(name, bool(observed >= bound), float(observed), float(bound), "lower", note)


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one scripted study.

    ``series`` maps column names to equal-length arrays sampled at
    ``series["t"]``; ``settings`` records every knob needed to reproduce the
    run (actual dt, kmax, horizon, member norms, tolerances).
    """

    name: str
    params: PhysicalParams
    settings: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    assertions: tuple = ()

    def __post_init__(self) -> None:
        if "t" not in self.series:
            raise ValueError("series must include a 't' column")
        n = len(self.series["t"])
        for key, col in self.series.items():
            if len(col) != n:
                raise ValueError(f"series column {key!r} has length {len(col)} != {n}")

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def summary(self) -> str:
        head = f"[{self.name}] {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + ["  " + a.line() for a in self.assertions])


# ---------------------------------------------------------------------------
# parallel plumbing

def worker_count(workers: int | None = None) -> int:
    """Explicit argument wins, then KAWALAB_THREADS, then serial."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("KAWALAB_THREADS")
    return max(1, int(env)) if env else 1


def parallel_map(fn, items, workers: int | None = None) -> list:
    """Order-preserving map, threaded when more than one worker is allowed."""
    items = list(items)
    nw = min(worker_count(workers), len(items)) if items else 1
    if nw <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=nw) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# shared helpers

def decay_envelope(norm_g: float, norm_f: float, gamma: float, t: np.ndarray) -> np.ndarray:
    """exp(-gamma*t)*||g|| + (||f||/gamma)*(1 - exp(-gamma*t)), the L2 bound
    every damped forced trajectory obeys pointwise in time."""
    if gamma <= 0:
        raise ValueError("the decay envelope needs gamma > 0")
    e = np.exp(-gamma * np.asarray(t, dtype=np.float64))
    return e * norm_g + (norm_f / gamma) * (1.0 - e)


def _fit_log_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against t; y is floored to keep the
    logarithm finite when a series decays to exactly zero."""
    if len(t) < 2:
        raise ValueError("slope fit needs at least two samples")
    return float(np.polyfit(t, np.log(np.maximum(y, _LOG_FLOOR)), 1)[0])


def _auto_stride(t_final: float, dt: float, target: int = 2000) -> int:
    n_steps = max(1, math.ceil(t_final / dt - 1e-12))
    return max(1, math.ceil(n_steps / target))


def _common_config(gs, f, p, cfg: StepperConfig | None) -> StepperConfig:
    """Pin one dt for a whole ensemble so the sampled grids coincide."""
    if cfg is not None and cfg.dt is not None:
        return cfg
    dt = min(default_dt(g, f, p) for g in gs)
    if cfg is None:
        return StepperConfig(dt=dt)
    return StepperConfig(dt=dt, nx=cfg.nx, nonlinear=cfg.nonlinear)


def _sobolev_series(coeffs: np.ndarray, s: float) -> np.ndarray:
    k = np.arange(1, coeffs.shape[1] + 1, dtype=np.float64)
    return np.sqrt(2.0 * np.sum(k ** (2.0 * s) * np.abs(coeffs) ** 2, axis=1))


def _linear_part(g_coeffs: np.ndarray, times: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Damped free flow of a spectrum over a whole sample grid at once."""
    k = np.arange(1, len(g_coeffs) + 1)
    rate = p.gamma + 1j * phase(k, p)
    return g_coeffs[None, :] * np.exp(-np.outer(times, rate))


def _member_labels(n: int, labels) -> list:
    if labels is None:
        return [f"member{i}" for i in range(n)]
    labels = [str(x) for x in labels]
    if len(labels) != n:
        raise ValueError("labels must match the ensemble size")
    return labels


# ---------------------------------------------------------------------------
# absorbing ball

def run_absorbing_ball(gs, f: SpectralField, p: PhysicalParams, T: float,
                       cfg: StepperConfig | None = None, slack: float = 1e-6,
                       labels=None, workers: int | None = None) -> ExperimentReport:
    """Check the pointwise decay envelope and ball entry for an ensemble.

    Every member must satisfy ||u(t)|| <= envelope(t) within ``slack`` at all
    samples, enter the ball of radius 2||f||/gamma no later than its analytic
    entry time (plus one sample spacing), and stay inside afterwards.
    """
    gs = list(gs)
    if not gs:
        raise ValueError("need at least one initial datum")
    if p.gamma <= 0:
        raise ValueError("the absorbing ball needs gamma > 0")
    norm_f = sobolev_norm(f, 0.0)
    if norm_f == 0.0:
        raise ValueError("the absorbing ball needs f != 0")
    radius = 2.0 * norm_f / p.gamma

    names = _member_labels(len(gs), labels)
    cfg = _common_config(gs, f, p, cfg)
    stride = _auto_stride(T, cfg.dt)
    trajs = parallel_map(lambda g: evolve(g, f, p, T, cfg, sample_stride=stride),
                         gs, workers=workers)

    times = trajs[0].times
    h = trajs[0].sample_spacing
    series: dict = {"t": times}
    assertions: list[AssertionRecord] = []
    norms_g, entries, t_absorbs = [], [], []
    for name, g, traj in zip(names, gs, trajs):
        ng = sobolev_norm(g, 0.0)
        norms_g.append(ng)
        norm_t = traj.norms(0.0)
        env_t = decay_envelope(ng, norm_f, p.gamma, times)
        series[f"norm_{name}"] = norm_t
        series[f"envelope_{name}"] = env_t

        assertions.append(_upper(f"envelope:{name}", float(np.max(norm_t - env_t)), slack,
                                 note="max over samples of ||u(t)|| - envelope(t)"))

        t_ab = absorbing_time(ng, norm_f, p.gamma)
        t_absorbs.append(t_ab)
        inside = np.flatnonzero(norm_t <= radius + slack)
        entry = float(times[inside[0]]) if inside.size else math.inf
        entries.append(entry)
        assertions.append(_upper(f"entry:{name}", entry, t_ab + h,
                                 note=f"first sample inside radius {radius:.6g}"))
        tail = norm_t[times >= t_ab + h]
        worst = float(np.max(tail)) if tail.size else 0.0
        assertions.append(_upper(f"containment:{name}", worst, radius + slack,
                                 note="max ||u|| after the analytic entry time"))

    settings = {
        "members": names,
        "norm_g": norms_g,
        "norm_f": norm_f,
        "radius": radius,
        "analytic_entry": t_absorbs,
        "observed_entry": entries,
        "T": float(T),
        "dt": float(trajs[0].dt),
        "sample_stride": stride,
        "kmax": trajs[0].kmax,
        "slack": slack,
    }
    return ExperimentReport("absorbing_ball", p, settings, series, tuple(assertions))


# ---------------------------------------------------------------------------
# nonlinear smoothing

def run_smoothing(g: SpectralField, f: SpectralField | None, p: PhysicalParams, T: float,
                  cfg: StepperConfig | None = None,
                  contrast_floor: float | None = 10.0,
                  plateau_fraction: float | None = 0.2) -> ExperimentReport:
    """Track the H2 norm of the nonlinear remainder u(t) - exp(-gamma t) e^{Lt} g.

    The remainder must plateau: its fitted log-slope over the final half of
    the run stays below SLOPE_TOL.  With the default thresholds the run also
    asserts the two-derivative gain is visible: the datum's H2/L2 contrast
    exceeds ``contrast_floor`` while the plateau stays under
    ``plateau_fraction`` of ||g||_H2.  Pass None to drop either check (smooth
    small data makes the contrast meaningless).
    """
    cfg = _common_config([g], f, p, cfg)
    stride = _auto_stride(T, cfg.dt)
    traj = evolve(g, f, p, T, cfg, sample_stride=stride)
    times = traj.times

    remainder = traj.coeffs - _linear_part(g.coeffs, times, p)
    rem_h2 = _sobolev_series(remainder, 2.0)
    g_h2 = sobolev_norm(g, 2.0)
    g_l2 = sobolev_norm(g, 0.0)
    series = {
        "t": times,
        "remainder_h2": rem_h2,
        "state_h2": traj.norms(2.0),
        "linear_h2": np.exp(-p.gamma * times) * g_h2,
        "state_l2": traj.norms(0.0),
    }

    late = times >= T / 2.0
    plateau = float(np.max(rem_h2[late]))
    slope = _fit_log_slope(times[late], rem_h2[late])
    assertions = [
        _upper("plateau_slope", slope, SLOPE_TOL,
               note="log-slope of ||remainder||_H2 over the final half"),
    ]
    if contrast_floor is not None:
        assertions.append(_lower("datum_contrast", g_h2 / g_l2, contrast_floor,
                                 note="||g||_H2 / ||g||_L2"))
    if plateau_fraction is not None:
        assertions.append(_upper("plateau", plateau, plateau_fraction * g_h2,
                                 note=f"max late ||remainder||_H2 vs {plateau_fraction} * ||g||_H2"))

    settings = {
        "norm_g": g_l2,
        "norm_g_h2": g_h2,
        "norm_f": 0.0 if f is None else sobolev_norm(f, 0.0),
        "plateau": plateau,
        "plateau_slope": slope,
        "T": float(T),
        "dt": float(traj.dt),
        "sample_stride": stride,
        "kmax": traj.kmax,
        "slope_tol": SLOPE_TOL,
    }
    return ExperimentReport("smoothing", p, settings, series, tuple(assertions))


# ---------------------------------------------------------------------------
# ensemble radii

def _tail_radius(traj: Trajectory, t0_index: int, p: PhysicalParams) -> np.ndarray:
    """H2 distance from the trajectory to the damped free flow restarted at
    sample t0; NaN before the restart."""
    times = traj.times
    out = np.full(len(times), np.nan)
    rel = times[t0_index:] - times[t0_index]
    lin = _linear_part(traj.coeffs[t0_index], rel, p)
    out[t0_index:] = _sobolev_series(traj.coeffs[t0_index:] - lin, 2.0)
    return out


def run_attractor_ensemble(gs, f: SpectralField | None, p: PhysicalParams, T: float,
                           cfg: StepperConfig | None = None, slack: float = 1e-6,
                           spread_tol: float = 0.2, labels=None,
                           workers: int | None = None) -> ExperimentReport:
    """Post-absorption H2 radii of the nonlinear parts across an ensemble.

    After each member's analytic entry time T0 the linear flow restarted from
    u(T0) decays away; what remains must (i) stabilize (log-slope test on the
    final half) and (ii) fill a radius independent of the initial norm within
    ``spread_tol``.  With f = 0 the radii must instead collapse toward zero,
    and entry, which is undefined, is skipped (the restart is taken at T/2).
    """
    gs = list(gs)
    if not gs:
        raise ValueError("need at least one initial datum")
    if p.gamma <= 0:
        raise ValueError("ensemble radii need gamma > 0")
    norm_f = 0.0 if f is None else sobolev_norm(f, 0.0)

    names = _member_labels(len(gs), labels)
    cfg = _common_config(gs, f, p, cfg)
    stride = _auto_stride(T, cfg.dt)
    trajs = parallel_map(lambda g: evolve(g, f, p, T, cfg, sample_stride=stride),
                         gs, workers=workers)

    times = trajs[0].times
    h = trajs[0].sample_spacing
    series: dict = {"t": times}
    assertions: list[AssertionRecord] = []
    norms_g, radii, final_radii, restarts = [], [], [], []
    late = times >= T / 2.0
    for name, g, traj in zip(names, gs, trajs):
        ng = sobolev_norm(g, 0.0)
        norms_g.append(ng)
        norm_t = traj.norms(0.0)
        series[f"norm_{name}"] = norm_t

        # exactness of the damped free flow shrink, per member
        probe = _linear_part(g.coeffs, np.array([0.7 * T]), p)[0]
        lin_norm = float(np.sqrt(2.0 * np.sum(np.abs(probe) ** 2)))
        drift = abs(lin_norm - math.exp(-p.gamma * 0.7 * T) * ng)
        assertions.append(_upper(f"linear_decay:{name}", drift, 1e-12 * max(ng, 1.0),
                                 note="free-flow norm vs exp(-gamma t)*||g||"))

        if norm_f > 0.0:
            t_ab = absorbing_time(ng, norm_f, p.gamma)
            if t_ab + h >= T / 2.0:
                raise ValueError("horizon too short: absorption eats the study window")
            i0 = int(np.searchsorted(times, t_ab + h))
        else:
            i0 = int(np.searchsorted(times, T / 2.0))
        restarts.append(float(times[i0]))
        rad_t = _tail_radius(traj, i0, p)
        series[f"radius_{name}"] = rad_t

        tail_r = rad_t[late]
        radius = float(np.max(tail_r))
        radii.append(radius)
        final_radii.append(float(rad_t[-1]))
        if norm_f > 0.0:
            slope = _fit_log_slope(times[late], tail_r)
            assertions.append(_upper(f"radius_slope:{name}", slope, SLOPE_TOL,
                                     note="log-slope of the H2 radius over the final half"))

    if norm_f > 0.0:
        spread = max(radii) / min(radii) - 1.0 if min(radii) > 0 else math.inf
        assertions.append(_upper("radius_spread", spread, spread_tol,
                                 note="max/min - 1 of the stabilized H2 radii"))
    else:
        # the remainder rises right after the restart before dying off, so the
        # collapse is read off the last sample rather than the window max
        floor = max(max(sobolev_norm(g, 2.0) for g in gs), 1.0)
        assertions.append(_upper("radius_decay", max(final_radii), slack * floor,
                                 note="unforced runs: radii collapse toward zero"))

    settings = {
        "members": names,
        "norm_g": norms_g,
        "norm_f": norm_f,
        "restart_times": restarts,
        "radii": radii,
        "final_radii": final_radii,
        "spread_tol": spread_tol,
        "T": float(T),
        "dt": float(trajs[0].dt),
        "sample_stride": stride,
        "kmax": trajs[0].kmax,
        "slack": slack,
    }
    return ExperimentReport("attractor_ensemble", p, settings, series, tuple(assertions))
