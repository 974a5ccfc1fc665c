"""Scripted studies: records, parallel plumbing, and the three runners."""

import math
import threading

import numpy as np
import pytest

from kawalab import (
    AssertionRecord,
    ExperimentReport,
    PhysicalParams,
    StepperConfig,
    absorbing_time,
    decay_envelope,
    parallel_map,
    random_field,
    rescaled,
    run_absorbing_ball,
    run_attractor_ensemble,
    run_smoothing,
    worker_count,
    zero_field,
)


# ---------------------------------------------------------------------------
# record formatting

def test_assertion_record_lines():
    ok = AssertionRecord("envelope:a", True, 1.25, 2.0, "upper", "stays below")
    assert ok.line() == "PASS envelope:a: 1.25 <= 2  (stays below)"
    bad = AssertionRecord("contrast", False, 3.0, 10.0, "lower")
    assert bad.line() == "FAIL contrast: 3 >= 10"


def test_experiment_report_validation(p101):
    with pytest.raises(ValueError, match="'t' column"):
        ExperimentReport("x", p101, series={"u": np.zeros(3)})
    with pytest.raises(ValueError, match="length"):
        ExperimentReport("x", p101, series={"t": np.zeros(3), "u": np.zeros(2)})
    rep = ExperimentReport(
        "x",
        p101,
        series={"t": np.zeros(2), "u": np.ones(2)},
        assertions=(AssertionRecord("a", True, 0.0, 1.0),),
    )
    assert rep.passed
    assert rep.summary().startswith("[x] PASS")
    failing = ExperimentReport(
        "y",
        p101,
        series={"t": np.zeros(1)},
        assertions=(
            AssertionRecord("a", True, 0.0, 1.0),
            AssertionRecord("b", False, 2.0, 1.0),
        ),
    )
    assert not failing.passed
    assert "FAIL b" in failing.summary()


# ---------------------------------------------------------------------------
# parallel plumbing

def test_worker_count(monkeypatch):
    assert worker_count(3) == 3
    assert worker_count(0) == 1
    monkeypatch.delenv("KAWALAB_THREADS", raising=False)
    assert worker_count(None) == 1
    monkeypatch.setenv("KAWALAB_THREADS", "4")
    assert worker_count(None) == 4
    assert worker_count(2) == 2  # explicit beats the environment


def test_parallel_map_preserves_order():
    items = list(range(24))
    seen = []
    lock = threading.Lock()

    def fn(x):
        with lock:
            seen.append(x)
        return x * x

    assert parallel_map(fn, items, workers=4) == [x * x for x in items]
    assert sorted(seen) == items
    assert parallel_map(fn, [], workers=4) == []
    assert parallel_map(lambda x: -x, [5], workers=1) == [-5]


def test_decay_envelope_values():
    t = np.array([0.0, math.log(2.0)])
    env = decay_envelope(3.0, 1.0, 1.0, t)
    assert env[0] == 3.0
    assert env[1] == pytest.approx(1.5 + 0.5)
    with pytest.raises(ValueError, match="gamma > 0"):
        decay_envelope(1.0, 1.0, 0.0, t)


# ---------------------------------------------------------------------------
# absorbing-ball study

def test_absorbing_ball_small_run(p101):
    f = rescaled(random_field(8, 2.0, 1.0, seed=11), 1.0)
    gs = [
        rescaled(random_field(8, 0.8, 1.0, seed=100), 3.0),
        rescaled(random_field(8, 0.8, 1.0, seed=101), 0.5),
    ]
    rep = run_absorbing_ball(gs, f, p101, 3.0, labels=["far", "near"])
    assert rep.passed
    assert rep.settings["radius"] == pytest.approx(2.0)
    names = [a.name for a in rep.assertions]
    assert "envelope:far" in names
    assert "entry:far" in names
    assert "containment:near" in names
    # the analytic entry time matches the closed form for the far member
    t_far = absorbing_time(3.0, 1.0, 1.0)
    assert rep.settings["analytic_entry"][0] == pytest.approx(t_far)
    assert rep.settings["analytic_entry"][1] == 0.0  # starts inside
    assert {"t", "norm_far", "envelope_far", "norm_near", "envelope_near"} == set(rep.series)


def test_absorbing_ball_validation(p101):
    f = rescaled(random_field(4, 1.0, 1.0, seed=12), 1.0)
    g = rescaled(random_field(4, 1.0, 1.0, seed=13), 1.0)
    with pytest.raises(ValueError, match="at least one"):
        run_absorbing_ball([], f, p101, 1.0)
    with pytest.raises(ValueError, match="gamma > 0"):
        run_absorbing_ball([g], f, PhysicalParams(1.0, 0.0, 0.0), 1.0)
    with pytest.raises(ValueError, match="f != 0"):
        run_absorbing_ball([g], zero_field(4), p101, 1.0)
    with pytest.raises(ValueError, match="labels"):
        run_absorbing_ball([g], f, p101, 1.0, labels=["a", "b"])


# ---------------------------------------------------------------------------
# smoothing study

def test_smoothing_small_run(p101):
    g = random_field(16, 0.6, 1.0, seed=7)
    f = rescaled(random_field(16, 2.0, 1.0, seed=11), 1.0)
    rep = run_smoothing(g, f, p101, 20.0)
    assert rep.passed
    names = [a.name for a in rep.assertions]
    assert names == ["plateau_slope", "datum_contrast", "plateau"]
    assert set(rep.series) == {"t", "remainder_h2", "state_h2", "linear_h2", "state_l2"}
    assert rep.settings["plateau"] > 0.0
    assert abs(rep.settings["plateau_slope"]) <= 1e-3
    # dropping the optional thresholds drops their assertions
    bare = run_smoothing(g, f, p101, 20.0, contrast_floor=None, plateau_fraction=None)
    assert [a.name for a in bare.assertions] == ["plateau_slope"]


# ---------------------------------------------------------------------------
# ensemble radii

def test_attractor_forced_small_run(p101):
    base = random_field(16, 0.6, 1.0, seed=7)
    f = rescaled(random_field(16, 2.0, 1.0, seed=11), 1.0)
    gs = [rescaled(base, 1.0), rescaled(base, 3.0)]
    rep = run_attractor_ensemble(gs, f, p101, 20.0, workers=2)
    assert rep.passed
    names = [a.name for a in rep.assertions]
    assert "linear_decay:member0" in names
    assert "radius_slope:member0" in names
    assert "radius_spread" in names
    spread = [a for a in rep.assertions if a.name == "radius_spread"][0]
    assert spread.observed < 0.01  # members forget their data
    radii = rep.settings["final_radii"]
    assert len(radii) == 2
    assert radii[0] == pytest.approx(radii[1], rel=0.01)


def test_attractor_unforced_decay(p101):
    gs = [rescaled(random_field(8, 0.8, 1.0, seed=21), 1.0)]
    rep = run_attractor_ensemble(gs, None, p101, 10.0)
    assert rep.passed
    names = [a.name for a in rep.assertions]
    assert "radius_decay" in names
    decay = [a for a in rep.assertions if a.name == "radius_decay"][0]
    assert decay.observed <= 1e-6


def test_attractor_validation(p101):
    g = rescaled(random_field(4, 0.8, 1.0, seed=22), 100.0)
    f = rescaled(random_field(4, 1.0, 1.0, seed=23), 1.0)
    with pytest.raises(ValueError, match="gamma > 0"):
        run_attractor_ensemble([g], f, PhysicalParams(1.0, 0.0, 0.0), 10.0)
    with pytest.raises(ValueError, match="horizon too short"):
        run_attractor_ensemble([g], f, p101, 6.0)
