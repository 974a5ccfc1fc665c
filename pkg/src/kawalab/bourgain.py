"""Discrete dispersive space-time functionals on windowed samples.

A SpaceTimeSample holds the positive-mode coefficients of a real mean-zero
field on a uniform time grid over [0, span).  Functionals first multiply by
a smooth taper (exactly once), then take the discrete time transform; the
time-frequency grid is tau_m = 2*pi*m/span for integer m, so a span of 2*pi
gives integer frequencies.  Normalizations are chosen so that the (s, b) =
(0, 0) functional coincides with the windowed space-time L2 norm exactly,
which anchors every other weight choice to a Plancherel identity.

The modulation weight <tau + alpha*k^5 - beta*k^3> measures distance from
the dispersion characteristic; a free linear wave sits at zero modulation,
so its norm reduces to the taper's own spectrum independent of the mode.
Angle brackets are 1 + |.| throughout.

High modes whose characteristic frequency exceeds the representable band
fold back onto the grid; the functionals are then still well defined and
deterministic, but they measure the folded spectrum.  Scan baselines are
recorded at fixed (nt, span) for exactly this reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.signal.windows import tukey

from .evolution import phase
from .fields import PhysicalParams, SpectralField, default_grid_size, sobolev_norm

__all__ = [
    "SpaceTimeSample",
    "characteristic_sample",
    "random_sample",
    "windowed_transform",
    "xsb_norm",
    "ys_norm",
    "zs_norm",
    "product_sample",
    "dx_sample",
    "bilinear_ratio",
    "l4_ratio",
    "l6_ratio",
    "ScanResult",
    "scan_bilinear",
    "scan_l4",
    "scan_l6",
]

DEFAULT_TAPER_FRACTION = 0.125  # taper width per side, as a fraction of span


def _jb(x):
    return 1.0 + np.abs(x)


@dataclass(frozen=True)
class SpaceTimeSample:
    """Positive-mode time series u_k(t_j), k = 1..kmax, t_j = j*span/nt.

    values[k-1, j] is the k-th coefficient at time t_j; the implied field is
    real, so negative modes are conjugates.  window describes the taper
    ("tukey", width per side in time units) applied once inside the
    transform, never to the stored values."""

    kmax: int
    span: float
    values: np.ndarray  # (kmax, nt) complex128
    window: tuple[str, float] = dataclass_field(default=("tukey", 0.0))

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[0] != self.kmax:
            raise ValueError("values must have shape (kmax, nt)")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("sample values must be finite")
        if not (self.span > 0 and math.isfinite(self.span)):
            raise ValueError("span must be positive and finite")
        name, width = self.window
        if name != "tukey":
            raise ValueError(f"unknown window {name!r}")
        if not 0.0 <= width <= self.span / 2:
            raise ValueError("taper width must lie in [0, span/2]")

    @property
    def nt(self) -> int:
        return self.values.shape[1]

    @property
    def mmax(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.nt) * (self.span / self.nt)

    def window_array(self) -> np.ndarray:
        _, width = self.window
        frac = 2.0 * width / self.span  # tukey's alpha is the total tapered fraction
        return tukey(self.nt, alpha=frac, sym=False)

    def k(self) -> np.ndarray:
        return np.arange(1, self.kmax + 1)


def _default_window(span: float) -> tuple[str, float]:
    return ("tukey", DEFAULT_TAPER_FRACTION * span)


def characteristic_sample(
    k: int,
    kmax: int,
    nt: int,
    span: float,
    p: PhysicalParams,
    amplitude: complex = 1.0,
    taper: float | None = None,
) -> SpaceTimeSample:
    """Free linear wave concentrated on a single mode: u_k(t) = A e^{-i phase(k) t}."""
    if not 1 <= k <= kmax:
        raise ValueError("mode must satisfy 1 <= k <= kmax")
    t = np.arange(nt) * (span / nt)
    vals = np.zeros((kmax, nt), dtype=np.complex128)
    vals[k - 1] = amplitude * np.exp(-1j * phase(k, p) * t)
    window = ("tukey", DEFAULT_TAPER_FRACTION * span if taper is None else taper)
    return SpaceTimeSample(kmax=kmax, span=span, values=vals, window=window)


def random_sample(
    kmax: int,
    nt: int,
    span: float,
    seed: int,
    kdecay: float = 1.0,
    mdecay: float = 1.5,
    scale: float = 1.0,
) -> SpaceTimeSample:
    """Seeded band-limited noise: independent complex Gaussian time-frequency
    coefficients damped by k^-kdecay and <m>^-mdecay, synthesized on the grid."""
    rng = np.random.default_rng(seed)
    m = np.fft.fftfreq(nt, d=1.0 / nt)
    amp = (
        np.arange(1, kmax + 1, dtype=np.float64)[:, None] ** (-kdecay)
        * _jb(m)[None, :] ** (-mdecay)
    )
    spec = amp * (rng.standard_normal((kmax, nt)) + 1j * rng.standard_normal((kmax, nt)))
    vals = np.fft.ifft(spec, axis=1) * (scale * nt / math.sqrt(nt))
    return SpaceTimeSample(
        kmax=kmax, span=span, values=vals, window=_default_window(span)
    )


def windowed_transform(u: SpaceTimeSample):
    """Apply the taper and return (uhat, tau, dtau).

    uhat[k-1, m] = (dt / sqrt(2 pi)) * sum_j w_j u_k(t_j) e^{-i tau_m t_j}
    with tau_m = 2 pi m / span on the usual FFT bin layout.  With this
    scaling, sum_m |uhat|^2 dtau = dt * sum_j |w u|^2 exactly (discrete
    Parseval), which is what makes the (0,0) functional the grid L2 norm."""
    nt = u.nt
    dt = u.span / nt
    w = u.window_array()
    uhat = np.fft.fft(u.values * w[None, :], axis=1) * (dt / math.sqrt(2.0 * math.pi))
    m = np.fft.fftfreq(nt, d=1.0 / nt)
    tau = (2.0 * math.pi / u.span) * m
    dtau = 2.0 * math.pi / u.span
    return uhat, tau, dtau


def _modulation(u: SpaceTimeSample, tau: np.ndarray, p: PhysicalParams) -> np.ndarray:
    return _jb(tau[None, :] + phase(u.k(), p)[:, None])


def xsb_norm(u: SpaceTimeSample, s: float, b: float, p: PhysicalParams) -> float:
    """Dispersive space-time norm: <k>^s <tau + phase(k)>^b weights in l2."""
    if not (math.isfinite(s) and math.isfinite(b)):
        raise ValueError("s and b must be finite")
    uhat, tau, dtau = windowed_transform(u)
    mod = _modulation(u, tau, p)
    kw = _jb(u.k()) ** (2.0 * s)
    total = 2.0 * dtau * np.sum(kw * np.sum(mod ** (2.0 * b) * np.abs(uhat) ** 2, axis=1))
    return math.sqrt(total)


def _l2l1(u: SpaceTimeSample, s: float, p: PhysicalParams, divide_modulation: bool) -> float:
    uhat, tau, dtau = windowed_transform(u)
    mag = np.abs(uhat)
    if divide_modulation:
        mag = mag / _modulation(u, tau, p)
    per_k = np.sum(mag, axis=1) * dtau
    kw = _jb(u.k()) ** (2.0 * s)
    return math.sqrt(2.0 * float(np.sum(kw * per_k**2)))


def ys_norm(u: SpaceTimeSample, s: float, p: PhysicalParams) -> float:
    """xsb_norm at b = 1/2 plus the l2_k L1_tau piece; controls sup-in-time H^s."""
    return xsb_norm(u, s, 0.5, p) + _l2l1(u, s, p, divide_modulation=False)


def zs_norm(u: SpaceTimeSample, s: float, p: PhysicalParams) -> float:
    """xsb_norm at b = -1/2 plus the modulation-divided l2_k L1_tau piece."""
    return xsb_norm(u, s, -0.5, p) + _l2l1(u, s, p, divide_modulation=True)


def _batch_physical(values: np.ndarray, kmax: int, nx: int) -> np.ndarray:
    """Real field on the x grid for every time row at once: (nt, nx)."""
    nt = values.shape[1]
    spec = np.zeros((nt, nx // 2 + 1), dtype=np.complex128)
    spec[:, 1 : kmax + 1] = values.T
    return np.fft.irfft(spec, n=nx, axis=1) * nx


def product_sample(u1: SpaceTimeSample, u2: SpaceTimeSample) -> SpaceTimeSample:
    """Pointwise space-time product, exact through mode 2*kmax.

    The grid is wide enough that no product mode folds back, so the output
    coefficients are the exact convolution at each time sample.  The spatial
    mean of the product is dropped (samples represent mean-zero fields);
    consumers differentiate in x, which annihilates it regardless.  Inputs
    must share the grid and window; the product keeps raw (unwindowed)
    values so the taper is still applied exactly once, inside whichever
    functional consumes the result."""
    if u1.kmax != u2.kmax or u1.nt != u2.nt or u1.span != u2.span:
        raise ValueError("operands must share kmax, nt, and span")
    if u1.window != u2.window:
        raise ValueError("operands must share the window")
    K = u1.kmax
    nx = default_grid_size(2 * K)
    f1 = _batch_physical(u1.values, K, nx)
    f2 = _batch_physical(u2.values, K, nx)
    prod = np.fft.rfft(f1 * f2, axis=1) / nx
    return SpaceTimeSample(
        kmax=2 * K, span=u1.span, values=prod[:, 1 : 2 * K + 1].T, window=u1.window
    )


def dx_sample(u: SpaceTimeSample) -> SpaceTimeSample:
    vals = (1j * u.k())[:, None] * u.values
    return SpaceTimeSample(kmax=u.kmax, span=u.span, values=vals, window=u.window)


def bilinear_ratio(
    u1: SpaceTimeSample, u2: SpaceTimeSample, s: float, p: PhysicalParams
) -> float:
    """Bilinear-smoothing quotient: the low-regularity norm of d/dx (u1 u2)
    against the product of the b = 3/10 norms of the factors."""
    den = xsb_norm(u1, s, 0.3, p) * xsb_norm(u2, s, 0.3, p)
    if den == 0.0:
        raise ValueError("zero factor norm: ratio undefined")
    num = zs_norm(dx_sample(product_sample(u1, u2)), s, p)
    return num / den


def l4_ratio(u: SpaceTimeSample, p: PhysicalParams, delta: float | None = None) -> float:
    """Quartic space-time quotient: the L4 norm of the sharp restriction of u
    to t in [0, delta) over its b = 3/10 norm.  delta defaults to span/2."""
    if delta is None:
        delta = u.span / 2.0
    if not 0.0 < delta <= u.span:
        raise ValueError("delta must lie in (0, span]")
    den = xsb_norm(u, 0.0, 0.3, p)
    if den == 0.0:
        raise ValueError("zero sample: ratio undefined")
    nx = default_grid_size(u.kmax)
    fields = _batch_physical(u.values, u.kmax, nx)
    mask = u.times < delta
    dt = u.span / u.nt
    dxs = 2.0 * math.pi / nx
    num4 = float(np.sum(fields[mask] ** 4)) * dt * dxs
    return num4**0.25 / den


def l6_ratio(
    h: SpectralField,
    eps: float,
    span: float,
    p: PhysicalParams,
    nt: int = 2048,
) -> float:
    """Sextic quotient of the free flow: ||e^{Lt} h||_{L6} over ||h||_{H^eps}.

    The spatial integral is exact (the grid resolves all 6*kmax product
    modes); the time integral is a uniform-grid quadrature of the undamped
    flow over [0, span)."""
    den = sobolev_norm(h, eps)
    if den == 0.0:
        raise ValueError("zero field: ratio undefined")
    t = np.arange(nt) * (span / nt)
    vals = h.coeffs[:, None] * np.exp(-1j * np.outer(phase(h.k, p), t))
    nx = 1 << (6 * h.kmax + 2 - 1).bit_length()
    fields = _batch_physical(vals, h.kmax, nx)
    dt = span / nt
    dxs = 2.0 * math.pi / nx
    num6 = float(np.sum(fields**6)) * dt * dxs
    return num6 ** (1.0 / 6.0) / den


@dataclass(frozen=True)
class ScanResult:
    """Empirical ratio scan: per-trial values plus the settings that fix them."""

    name: str
    settings: dict
    seeds: tuple[int, ...]
    ratios: np.ndarray

    def summary(self) -> dict:
        q = np.quantile(self.ratios, [0.5, 0.9, 1.0])
        return {
            "name": self.name,
            "trials": int(self.ratios.size),
            "max": float(q[2]),
            "mean": float(np.mean(self.ratios)),
            "median": float(q[0]),
            "q90": float(q[1]),
            **{k: v for k, v in self.settings.items()},
        }


def scan_bilinear(
    trials: int,
    kmax: int,
    s: float,
    seed: int,
    p: PhysicalParams,
    nt: int = 256,
    span: float = 1.0,
) -> ScanResult:
    """Seeded sweep of bilinear_ratio over independent random sample pairs."""
    ratios = np.empty(trials)
    seeds = []
    for i in range(trials):
        s1, s2 = seed + 2 * i, seed + 2 * i + 1
        u1 = random_sample(kmax, nt, span, s1)
        u2 = random_sample(kmax, nt, span, s2)
        ratios[i] = bilinear_ratio(u1, u2, s, p)
        seeds.append(s1)
    return ScanResult(
        name="bilinear",
        settings={"kmax": kmax, "s": s, "b": 0.3, "nt": nt, "span": span},
        seeds=tuple(seeds),
        ratios=ratios,
    )


def scan_l4(
    trials: int,
    kmax: int,
    seed: int,
    p: PhysicalParams,
    nt: int = 256,
    span: float = 1.0,
) -> ScanResult:
    ratios = np.empty(trials)
    for i in range(trials):
        u = random_sample(kmax, nt, span, seed + i)
        ratios[i] = l4_ratio(u, p)
    return ScanResult(
        name="l4",
        settings={"kmax": kmax, "s": 0.0, "b": 0.3, "nt": nt, "span": span},
        seeds=tuple(seed + i for i in range(trials)),
        ratios=ratios,
    )


def scan_l6(
    trials: int,
    kmax: int,
    eps: float,
    seed: int,
    p: PhysicalParams,
    span: float = 2.0 * math.pi,
    nt: int = 2048,
    decay: float = 0.7,
) -> ScanResult:
    """Seeded sweep of l6_ratio over random initial fields at one truncation."""
    from .fields import random_field

    ratios = np.empty(trials)
    for i in range(trials):
        h = random_field(kmax, decay, 1.0, seed + i)
        ratios[i] = l6_ratio(h, eps, span, p, nt=nt)
    return ScanResult(
        name="l6",
        settings={"kmax": kmax, "s": eps, "b": float("nan"), "nt": nt, "span": span},
        seeds=tuple(seed + i for i in range(trials)),
        ratios=ratios,
    )
