"""Exact-arithmetic identities, triple classification, and shell tables."""

from fractions import Fraction

import numpy as np
import pytest

from kawalab import (
    PhysicalParams,
    ResonanceTable,
    classify_resonant_triple,
    dyadic_sweep,
    enumerate_Apq,
    four_phase_factorization_check,
    gamma_gap_stats,
    kappa,
    quintic_identity_check,
    theta,
)

from baselines import SWEEP_MAX_COUNTS


# ---------------------------------------------------------------------------
# telescoping identities

def test_quintic_identity_random_pairs():
    rng = np.random.default_rng(60)
    lo, hi = -10**6, 10**6
    for _ in range(20000):
        k1 = int(rng.integers(lo, hi))
        k2 = int(rng.integers(lo, hi))
        if k1 == 0 or k2 == 0:
            continue
        assert quintic_identity_check(k1, k2)


def test_quintic_identity_edge_values():
    for pair in [(1, -1), (1, 1), (10**12, -10**12 + 7), (-3, 10**15), (0, 5)]:
        assert quintic_identity_check(*pair)


def test_four_phase_factorization_random():
    rng = np.random.default_rng(61)
    params = [
        PhysicalParams(1.0, 0.0, 1.0),
        PhysicalParams(1.0, 1.0, 0.0),
        PhysicalParams(0.5, -0.375, 1.0),
        PhysicalParams(0.1, 0.7, 1.0),
    ]
    for i in range(2000):
        ks = rng.integers(-100, 101, size=3)
        k4 = -int(ks.sum())
        ms = rng.integers(-10**6, 10**6, size=3)
        m4 = -int(ms.sum())
        p = params[i % len(params)]
        assert four_phase_factorization_check(
            (int(ks[0]), int(ks[1]), int(ks[2]), k4),
            (int(ms[0]), int(ms[1]), int(ms[2]), m4),
            p,
        )


def test_four_phase_rejects_nonzero_sums(p101):
    with pytest.raises(ValueError, match="wavenumbers"):
        four_phase_factorization_check((1, 2, 3, 4), (0, 0, 0, 0), p101)
    with pytest.raises(ValueError, match="offsets"):
        four_phase_factorization_check((1, 2, 3, -6), (1, 0, 0, 0), p101)


# ---------------------------------------------------------------------------
# phase functions

def test_theta_and_kappa_values(p101):
    q = PhysicalParams(1.0, 1.0, 0.0)
    assert theta(1, 2, 3, p101) == 125.0
    assert theta(1, 2, 3, q) == 122.0
    assert kappa(1, 2, 3, p101) == -276.0
    assert kappa(1, 2, 3, q) == -240.0
    # both are symmetric under permutation
    assert theta(3, 1, 2, p101) == theta(1, 2, 3, p101)
    assert kappa(2, 3, 1, q) == kappa(1, 2, 3, q)


# ---------------------------------------------------------------------------
# triple classification

@pytest.mark.parametrize(
    "triple,label,vanishing",
    [
        ((2, -2, 3), "S2", (True, False, False)),
        ((3, 2, -2), "degenerate", (False, True, False)),
        ((2, 3, -2), "S3", (False, False, True)),
        ((-1, 1, 1), "S1", (True, False, True)),
        ((4, -4, -4), "S1", (True, False, True)),
        ((1, -1, 1), "degenerate", (True, True, False)),
        ((1, 1, -1), "degenerate", (False, True, True)),
        ((2, -2, 2), "degenerate", (True, True, False)),
        ((5, -3, 3), "degenerate", (False, True, False)),
        ((1, 2, 3), "nonresonant", (False, False, False)),
    ],
)
def test_classification_probes(triple, label, vanishing):
    got = classify_resonant_triple(*triple)
    assert got.label == label
    assert got.vanishing == vanishing


def test_classification_rejects_zero_modes():
    with pytest.raises(ValueError):
        classify_resonant_triple(0, 1, 2)
    with pytest.raises(ValueError):
        classify_resonant_triple(1, 2, 0)


def test_classification_partitions_small_box():
    labels = {"degenerate": 0, "S1": 0, "S2": 0, "S3": 0, "nonresonant": 0}
    rng = range(-4, 5)
    for k1 in rng:
        for k2 in rng:
            for k3 in rng:
                if 0 in (k1, k2, k3):
                    continue
                got = classify_resonant_triple(k1, k2, k3)
                labels[got.label] += 1
                s12, s23, s31 = got.vanishing
                assert (s12, s23, s31) == (k1 + k2 == 0, k2 + k3 == 0, k3 + k1 == 0)
                if got.label == "degenerate":
                    assert s23
                elif got.label == "S1":
                    assert s12 and s31 and not s23
                elif got.label == "S2":
                    assert s12 and not s23 and not s31
                elif got.label == "S3":
                    assert s31 and not s23 and not s12
                else:
                    assert not any(got.vanishing)
    assert sum(labels.values()) == 8**3
    assert min(labels.values()) > 0


# ---------------------------------------------------------------------------
# shell enumeration

def manual_groups(kmin, kmax, alpha, beta):
    a, b = Fraction(alpha), Fraction(beta)
    scale = np.lcm(a.denominator, b.denominator)
    ai, bi = int(a * int(scale)), int(b * int(scale))
    vals = list(range(-kmax, -kmin + 1)) + list(range(kmin, kmax + 1))
    groups = {}
    for k1 in vals:
        for k2 in vals:
            for k3 in vals:
                key = (k1 + k2 + k3,
                       -ai * (k1**5 + k2**5 + k3**5) + bi * (k1**3 + k2**3 + k3**3))
                groups[key] = groups.get(key, 0) + 1
    return groups


def test_unit_shell_by_hand(p101):
    table = enumerate_Apq(1, 1, p101)
    assert table.shell == (1, 1)
    assert table.kappa_scale == 1
    assert dict(((p, q), n) for p, q, n in table.counts()) == {
        (3, -3): 1, (1, -1): 3, (-1, 1): 3, (-3, 3): 1,
    }
    # the size-3 groups have vanishing shifted key, so only the singletons
    # enter the divisor-counted maximum
    assert table.max_count == 1
    assert table.max_count_all == 3
    assert table.argmax_key in {(3, -3), (-3, 3)}
    assert sorted(table.entries(1, -1)) == [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    assert table.entries(0, 0) == []
    assert table.verify(p101)


def test_int64_path_matches_manual_dict(p101):
    table = enumerate_Apq(1, 2, p101)
    got = {(p_, q_): n for p_, q_, n in table.counts()}
    assert got == manual_groups(1, 2, 1.0, 0.0)
    assert int(table.group_sizes().sum()) == 4**3
    assert table.verify(p101)


def test_exact_path_matches_manual_dict():
    # a denominator of 2**50 pushes the overflow bound past int64
    alpha = 1.0 + 2.0**-50
    p = PhysicalParams(alpha, 0.0, 1.0)
    table = enumerate_Apq(1, 2, p)
    assert table.kappa_scale == 2**50
    got = {(p_, q_): n for p_, q_, n in table.counts()}
    assert got == manual_groups(1, 2, alpha, 0.0)
    assert table.verify(p)


def test_verify_rejects_foreign_parameters(p101):
    table = enumerate_Apq(1, 2, p101)
    assert not table.verify(PhysicalParams(1.0, 1.0, 1.0))   # same scale, wrong keys
    assert not table.verify(PhysicalParams(0.5, 0.0, 1.0))   # different scale


def test_enumeration_validation_and_empty_shell(p101):
    with pytest.raises(ValueError, match="kmin >= 1"):
        enumerate_Apq(0, 4, p101)
    empty = enumerate_Apq(3, 2, p101)
    assert empty.triples.shape == (0, 3)
    assert empty.group_sizes().size == 0


def test_worker_split_is_deterministic(p101):
    base = enumerate_Apq(2, 5, p101, workers=None)
    split = enumerate_Apq(2, 5, p101, workers=4)
    assert base.counts() == split.counts()
    assert np.array_equal(base.triples, split.triples)


def test_dyadic_sweep_counts(p101, monkeypatch):
    rows = dyadic_sweep(p101, [1, 2, 4])
    assert [r.K for r in rows] == [1, 2, 4]
    for r in rows:
        assert r.max_count == SWEEP_MAX_COUNTS[r.K]
    monkeypatch.setenv("KAWALAB_THREADS", "2")
    threaded = dyadic_sweep(p101, [1, 2, 4])
    assert threaded == rows


# ---------------------------------------------------------------------------
# gap statistics

def test_gamma_gap_hand_values(p101):
    rep = gamma_gap_stats(1, 2, p101)
    assert rep.min_gap == 30.0
    assert rep.argmin_n == 0
    assert rep.ratio_to_delta4 == 30.0
    rep2 = gamma_gap_stats(1, 2, PhysicalParams(1.0, 1.0, 0.0))
    assert rep2.min_gap == 24.0
    assert rep2.ratio_to_delta4 == 24.0
    # delta = 2 scales the ratio by delta^4 = 16
    rep3 = gamma_gap_stats(2, 8, p101)
    assert rep3.ratio_to_delta4 == rep3.min_gap / 16.0


def test_gamma_gap_validation(p101):
    with pytest.raises(ValueError, match="positive integer"):
        gamma_gap_stats(0, 4, p101)
    with pytest.raises(ValueError, match="at least 2"):
        gamma_gap_stats(1, 1, p101)
