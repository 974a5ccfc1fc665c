"""Space-time samples, modulation norms, and functional-ratio scans."""

import math

import numpy as np
import pytest

from kawalab import (
    PhysicalParams,
    SpaceTimeSample,
    bilinear_ratio,
    characteristic_sample,
    dx_sample,
    l4_ratio,
    l6_ratio,
    make_field,
    product_sample,
    random_sample,
    scan_bilinear,
    scan_l4,
    scan_l6,
    windowed_transform,
    xsb_norm,
    ys_norm,
    zs_norm,
)

from baselines import (
    L4_CHARACTERISTIC,
    TIME_SPIKE_PREFACTOR,
    TIME_SPIKE_SLOPE,
    ZS_OVER_YS_MAX,
)


# ---------------------------------------------------------------------------
# sample container

def test_sample_validation():
    good = np.zeros((2, 8), dtype=complex)
    with pytest.raises(ValueError):
        SpaceTimeSample(kmax=2, span=1.0, values=np.zeros((3, 8), complex))
    with pytest.raises(ValueError):
        SpaceTimeSample(kmax=2, span=0.0, values=good)
    with pytest.raises(ValueError):
        SpaceTimeSample(kmax=2, span=1.0, values=good, window=("hann", 0.1))
    with pytest.raises(ValueError):
        SpaceTimeSample(kmax=2, span=1.0, values=good, window=("tukey", 0.6))
    bad = good.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        SpaceTimeSample(kmax=2, span=1.0, values=bad)
    u = SpaceTimeSample(kmax=2, span=1.0, values=good)
    assert u.nt == 8
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0  # read-only view


def test_window_array_cases():
    vals = np.ones((1, 16), dtype=complex)
    flat = SpaceTimeSample(kmax=1, span=2.0, values=vals, window=("tukey", 0.0))
    assert np.all(flat.window_array() == 1.0)
    tapered = SpaceTimeSample(kmax=1, span=2.0, values=vals, window=("tukey", 0.5))
    w = tapered.window_array()
    assert w[0] == 0.0 and w.max() == 1.0


def test_characteristic_sample_bounds(p101):
    with pytest.raises(ValueError, match="mode must satisfy"):
        characteristic_sample(0, 4, 64, 1.0, p101)
    with pytest.raises(ValueError, match="mode must satisfy"):
        characteristic_sample(5, 4, 64, 1.0, p101)
    u = characteristic_sample(2, 4, 64, 1.0, p101, amplitude=0.5)
    assert np.allclose(np.abs(u.values[1]), 0.5)
    assert np.allclose(u.values[0], 0.0)
    # the stored carrier is exp(-i phase t)
    t = u.times
    assert np.allclose(u.values[1], 0.5 * np.exp(-1j * 32.0 * t), rtol=1e-13)


# ---------------------------------------------------------------------------
# transform and norms

def test_transform_Parseval_anchor(p101):
    u = random_sample(3, 128, 0.7, seed=70)
    dt = 0.7 / 128
    w = u.window_array()
    anchor = math.sqrt(2.0 * dt * np.sum((np.abs(u.values) * w[None, :]) ** 2))
    assert xsb_norm(u, 0.0, 0.0, p101) == pytest.approx(anchor, rel=1e-12)


def test_xsb_monotone_in_b(p101):
    u = random_sample(4, 256, 1.0, seed=71)
    n0 = xsb_norm(u, 0.0, 0.0, p101)
    n3 = xsb_norm(u, 0.0, 0.3, p101)
    n5 = xsb_norm(u, 0.0, 0.5, p101)
    assert n0 <= n3 <= n5
    with pytest.raises(ValueError):
        xsb_norm(u, math.nan, 0.0, p101)


def test_dual_norm_ordering(p101):
    for seed in range(72, 78):
        u = random_sample(5, 128, 0.5, seed=seed)
        assert zs_norm(u, 0.0, p101) <= ys_norm(u, 0.0, p101)


def test_characteristic_norm_is_mode_independent(p101):
    # on a 2*pi window the carrier lands on an exact integer bin, so the
    # modulation weight sees zero offset for every mode
    span = 2 * math.pi
    norms = [
        xsb_norm(characteristic_sample(k, 6, 16384, span, p101), 0.0, 0.45, p101)
        for k in (1, 2, 3, 5)
    ]
    for n in norms[1:]:
        assert n == pytest.approx(norms[0], rel=1e-10)


def test_norms_invariant_under_time_translation(p101):
    vals = random_sample(3, 256, 1.0, seed=79).values
    u = SpaceTimeSample(kmax=3, span=1.0, values=vals, window=("tukey", 0.0))
    v = SpaceTimeSample(kmax=3, span=1.0, values=np.roll(vals, 37, axis=1),
                        window=("tukey", 0.0))
    for s, b in [(0.0, 0.45), (1.0, 0.1), (0.0, -0.5)]:
        assert xsb_norm(v, s, b, p101) == pytest.approx(xsb_norm(u, s, b, p101), rel=1e-12)
    assert ys_norm(v, 0.0, p101) == pytest.approx(ys_norm(u, 0.0, p101), rel=1e-12)
    assert zs_norm(v, 0.0, p101) == pytest.approx(zs_norm(u, 0.0, p101), rel=1e-12)


def test_transform_returns_grid(p101):
    u = random_sample(2, 64, 0.5, seed=80)
    uhat, tau, dtau = windowed_transform(u)
    assert uhat.shape == (2, 64)
    assert dtau == pytest.approx(2 * math.pi / 0.5)
    assert tau.size == 64
    assert tau[0] == 0.0


# ---------------------------------------------------------------------------
# products and derivatives

def test_product_of_distinct_single_modes(p101):
    nt, span = 32, 1.0
    a = 0.3 + 0.4j
    b = -0.2 + 0.1j
    vu = np.zeros((2, nt), complex)
    vu[0] = a
    vv = np.zeros((2, nt), complex)
    vv[1] = b
    u = SpaceTimeSample(kmax=2, span=span, values=vu)
    v = SpaceTimeSample(kmax=2, span=span, values=vv)
    w = product_sample(u, v)
    assert w.kmax == 4
    assert np.allclose(w.values[2], a * b)               # mode 3 = 1 + 2
    assert np.allclose(w.values[0], np.conj(a) * b)      # mode 1 = -1 + 2
    assert np.allclose(w.values[1], 0.0)
    assert np.allclose(w.values[3], 0.0)


def test_product_drops_mean_mode(p101):
    nt = 16
    vu = np.zeros((1, nt), complex)
    vu[0] = 1.0 + 1.0j
    u = SpaceTimeSample(kmax=1, span=1.0, values=vu)
    w = product_sample(u, u)
    assert w.kmax == 2
    assert np.allclose(w.values[1], (1.0 + 1.0j) ** 2)   # mode 2
    assert np.allclose(w.values[0], 0.0)                 # mode 1 absent


def test_product_requires_matching_grids():
    a = SpaceTimeSample(kmax=1, span=1.0, values=np.zeros((1, 8), complex))
    b = SpaceTimeSample(kmax=1, span=2.0, values=np.zeros((1, 8), complex))
    with pytest.raises(ValueError, match="share kmax, nt, and span"):
        product_sample(a, b)
    c = SpaceTimeSample(kmax=1, span=1.0, values=np.zeros((1, 8), complex),
                        window=("tukey", 0.25))
    with pytest.raises(ValueError, match="share the window"):
        product_sample(a, c)


def test_dx_multiplies_by_ik():
    vals = np.ones((3, 8), dtype=complex)
    u = SpaceTimeSample(kmax=3, span=1.0, values=vals)
    d = dx_sample(u)
    for k in (1, 2, 3):
        assert np.allclose(d.values[k - 1], 1j * k)


# ---------------------------------------------------------------------------
# functional ratios

def test_l4_characteristic_value(p101):
    span = 2 * math.pi
    u1 = characteristic_sample(1, 8, 16384, span, p101)
    u5 = characteristic_sample(5, 8, 16384, span, p101)
    r1 = l4_ratio(u1, p101)
    assert r1 == pytest.approx(L4_CHARACTERISTIC, rel=1e-12)
    assert l4_ratio(u5, p101) == pytest.approx(r1, rel=1e-10)


def test_l4_delta_validation(p101):
    u = random_sample(2, 64, 1.0, seed=81)
    with pytest.raises(ValueError, match="delta"):
        l4_ratio(u, p101, delta=0.0)
    with pytest.raises(ValueError, match="delta"):
        l4_ratio(u, p101, delta=1.5)
    zero = SpaceTimeSample(kmax=2, span=1.0, values=np.zeros((2, 64), complex))
    with pytest.raises(ValueError, match="zero sample"):
        l4_ratio(zero, p101)


def test_bilinear_zero_factor_rejected(p101):
    u = random_sample(2, 64, 1.0, seed=82)
    zero = SpaceTimeSample(kmax=2, span=1.0, values=np.zeros((2, 64), complex))
    with pytest.raises(ValueError, match="zero factor"):
        bilinear_ratio(u, zero, 0.0, p101)
    r = bilinear_ratio(u, u, 0.0, p101)
    assert r > 0.0


def test_l6_single_mode_closed_form(p101):
    # for a single spatial mode the quotient is explicit: the sixth-power
    # integral of 2A cos(kx) against the squared datum norm and k^eps
    span = 2 * math.pi
    expected = (80.0 * math.pi**2) ** (1.0 / 6.0) / math.sqrt(2.0)
    h1 = make_field([0.7])
    assert l6_ratio(h1, 0.0, span, p101, nt=512) == pytest.approx(expected, rel=1e-12)
    h2 = make_field([0.0, 1.3])
    got = l6_ratio(h2, 0.3, span, p101, nt=512)
    assert got == pytest.approx(expected / 2.0**0.3, rel=1e-12)


def test_l6_rejects_zero_field(p101):
    from kawalab import zero_field

    with pytest.raises(ValueError, match="zero field"):
        l6_ratio(zero_field(3), 0.1, 2 * math.pi, p101)


# ---------------------------------------------------------------------------
# scans

def test_scan_reproducibility_and_summary(p101):
    a = scan_bilinear(5, 4, 0.0, 90, p101, nt=64, span=0.5)
    b = scan_bilinear(5, 4, 0.0, 90, p101, nt=64, span=0.5)
    assert np.array_equal(a.ratios, b.ratios)
    s = a.summary()
    assert s["name"] == a.name
    assert s["trials"] == 5
    assert s["max"] >= s["q90"] >= s["median"]
    c = scan_l4(4, 4, 91, p101, nt=64, span=0.5)
    assert c.ratios.size == 4
    d = scan_l6(3, 3, 0.1, 92, p101, nt=256)
    assert d.ratios.size == 3
    assert np.all(d.ratios > 0)


def test_dual_norm_span_bound(p101):
    worst = 0.0
    for span in (0.25, 0.5, 1.0):
        for i in range(40):
            u = random_sample(8, 512, span, seed=777 + i)
            worst = max(worst, zs_norm(u, 0.0, p101) / (span**0.9 * ys_norm(u, 0.0, p101)))
    assert worst == pytest.approx(ZS_OVER_YS_MAX, rel=1e-9)
    assert worst < 1.0


def test_time_spike_localization_exponent(p101):
    b, bp, nt = 0.1, 0.45, 1024
    spans = [1.0, 0.5, 0.25, 0.125]
    logs, logr, pref = [], [], []
    for span in spans:
        vals = np.zeros((1, nt), complex)
        vals[0, nt // 2] = 1.0
        u = SpaceTimeSample(kmax=1, span=span, values=vals, window=("tukey", span / 8))
        r = xsb_norm(u, 0.0, b, p101) / xsb_norm(u, 0.0, bp, p101)
        logs.append(math.log(span))
        logr.append(math.log(r))
        pref.append(r / span**0.35)
    slope = float(np.polyfit(logs, logr, 1)[0])
    assert slope == pytest.approx(TIME_SPIKE_SLOPE, rel=1e-6)
    assert max(pref) == pytest.approx(TIME_SPIKE_PREFACTOR, rel=1e-9)
    # the exponent matches the gap between the two modulation weights
    assert slope == pytest.approx(bp - b, rel=0.01)
