"""Mean-zero spectral fields on the circle.

A real, mean-zero function on [0, 2*pi) is represented by its Fourier
coefficients c_k = (1/2*pi) * integral(exp(-i*k*x) * u(x) dx) for k >= 1;
c_0 = 0 and c_{-k} = conj(c_k) are implied.  All Sobolev norms are the
plain little-l2 norms of the two-sided coefficient sequence,

    ||u||_{H^s}^2 = 2 * sum_{k>=1} |k|^(2s) |c_k|^2,

so ||u||_{L^2}^2 equals (1/2*pi) * integral(u^2 dx).

Physical-space grids carry at least 4*kmax + 2 points.  That is more than
the classical 2/3 dealiasing rule asks for: a quadratic product of two
fields with modes up to kmax then has every one of its modes (up to
2*kmax) represented exactly on the grid, with no aliasing at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpectralField",
    "PhysicalParams",
    "make_field",
    "random_field",
    "zero_field",
    "sobolev_norm",
    "rescaled",
    "l2_inner",
    "to_physical",
    "to_spectral",
    "from_full_spectrum",
    "nonlinear_term",
    "grid_points",
    "min_grid_size",
    "default_grid_size",
]

#: absolute per-mode tolerance for Hermitian-symmetry / mean-zero checks on import
HERMITIAN_TOL = 1e-12


def _nonresonance_witness(alpha: float, beta: float, kbound: int):
    """Search |k1|,|k2| <= kbound for a pair with 5*alpha*(k1^2+k2^2+k1*k2) = 3*beta.

    Returns the first violating pair or None.  Equality is tested with a
    relative tolerance of 1e-9 so near-resonant parameter choices are
    flagged as resonant rather than silently admitted.
    """
    if kbound < 1:
        raise ValueError("kbound must be >= 1")
    target = 3.0 * beta
    for k1 in range(1, kbound + 1):
        for k2 in range(-kbound, kbound + 1):
            if k2 == 0:
                continue
            m = k1 * k1 + k2 * k2 + k1 * k2
            lhs = 5.0 * alpha * m
            tol = 1e-9 * max(1.0, abs(lhs), abs(target))
            if abs(lhs - target) <= tol:
                return (k1, k2)
    return None


@dataclass(frozen=True)
class PhysicalParams:
    """Equation parameters: fifth-order coefficient alpha, third-order beta,
    damping gamma.  The derived ``nonresonant`` flag records whether
    3*beta/(5*alpha) avoids every value of k1^2 + k2^2 + k1*k2 with nonzero
    integers up to ``nonresonance_bound``; ``witness`` holds the offending
    pair when it does not."""

    alpha: float
    beta: float
    gamma: float
    nonresonance_bound: int = 64
    nonresonant: bool = field(init=False)
    witness: tuple[int, int] | None = field(init=False)

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.alpha, self.beta, self.gamma)):
            raise ValueError("parameters must be finite")
        if self.alpha == 0.0:
            raise ValueError("alpha = 0 gives degenerate fifth-order dispersion")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        w = _nonresonance_witness(self.alpha, self.beta, self.nonresonance_bound)
        object.__setattr__(self, "witness", w)
        object.__setattr__(self, "nonresonant", w is None)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients c_k for k = 1..kmax of a real mean-zero field."""

    kmax: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128).copy()
        if c.shape != (self.kmax,):
            raise ValueError(f"expected {self.kmax} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def k(self) -> np.ndarray:
        """Mode numbers 1..kmax."""
        return np.arange(1, self.kmax + 1)

    def full_spectrum(self) -> np.ndarray:
        """Two-sided coefficient array for k = -kmax..kmax (length 2*kmax+1)."""
        full = np.zeros(2 * self.kmax + 1, dtype=np.complex128)
        full[self.kmax + 1 :] = self.coeffs
        full[: self.kmax] = np.conj(self.coeffs[::-1])
        return full


def make_field(coeffs) -> SpectralField:
    """Build a field from the k = 1..kmax coefficient list."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128))
    return SpectralField(kmax=len(c), coeffs=c)


def zero_field(kmax: int) -> SpectralField:
    return SpectralField(kmax=kmax, coeffs=np.zeros(kmax, dtype=np.complex128))


def random_field(kmax: int, decay: float, scale: float, seed: int) -> SpectralField:
    """Seeded random field with |c_k| = scale * k^(-decay) and uniform phases.

    Only the uniform generator is used, so the draw is stable across
    library versions for a fixed seed.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    rng = np.random.default_rng(seed)
    phases = np.exp(2j * np.pi * rng.random(kmax))
    k = np.arange(1, kmax + 1, dtype=np.float64)
    return SpectralField(kmax=kmax, coeffs=scale * k**(-decay) * phases)


def sobolev_norm(u: SpectralField, s: float) -> float:
    """||u||_{H^s} = sqrt(2 * sum |k|^(2s) |c_k|^2); s = 0 is the L^2 norm."""
    k = np.arange(1, u.kmax + 1, dtype=np.float64)
    return float(np.sqrt(2.0 * np.sum(k ** (2.0 * s) * np.abs(u.coeffs) ** 2)))


def rescaled(u: SpectralField, norm: float) -> SpectralField:
    """Same spectral shape, L^2 norm set to ``norm``.  Zero fields have no
    direction to scale and are rejected."""
    current = sobolev_norm(u, 0.0)
    if current == 0.0:
        raise ValueError("cannot rescale the zero field")
    return SpectralField(kmax=u.kmax, coeffs=u.coeffs * (norm / current))


def l2_inner(u: SpectralField, v: SpectralField) -> float:
    """(1/2*pi) * integral(u*v dx) = 2 * Re sum_k c_k(u) * conj(c_k(v))."""
    n = min(u.kmax, v.kmax)
    return float(2.0 * np.sum(u.coeffs[:n] * np.conj(v.coeffs[:n])).real)


def min_grid_size(kmax: int) -> int:
    """Smallest grid honoring the alias-free product precondition."""
    return 4 * kmax + 2


def default_grid_size(kmax: int) -> int:
    """min_grid_size rounded up to a power of two (FFT-friendly)."""
    n = min_grid_size(kmax)
    return 1 << (n - 1).bit_length()


def grid_points(nx: int) -> np.ndarray:
    """Uniform grid x_j = 2*pi*j/nx, j = 0..nx-1."""
    return 2.0 * np.pi * np.arange(nx) / nx


def to_physical(u: SpectralField, nx: int) -> np.ndarray:
    """Sample u on the uniform nx-point grid.  Requires nx >= 4*kmax + 2."""
    if nx < min_grid_size(u.kmax):
        raise ValueError(f"nx = {nx} < 4*kmax + 2 = {min_grid_size(u.kmax)}")
    spec = np.zeros(nx // 2 + 1, dtype=np.complex128)
    spec[1 : u.kmax + 1] = u.coeffs * nx
    return np.fft.irfft(spec, n=nx)


def to_spectral(samples: np.ndarray, kmax: int | None = None) -> SpectralField:
    """Recover coefficients from uniform real samples.

    The grid must satisfy nx >= 4*kmax + 2 (kmax defaults to the largest
    value the grid supports, (nx - 2) // 4).  A mean beyond the import
    tolerance is an error: this class of fields is mean-zero.
    """
    v = np.asarray(samples)
    if np.iscomplexobj(v):
        raise ValueError("physical samples must be real")
    nx = len(v)
    if kmax is None:
        kmax = (nx - 2) // 4
    if kmax < 1:
        raise ValueError("grid too small for any mode")
    if nx < min_grid_size(kmax):
        raise ValueError(f"nx = {nx} < 4*kmax + 2 = {min_grid_size(kmax)}")
    spec = np.fft.rfft(v) / nx
    scale = max(1.0, float(np.max(np.abs(spec)))) if len(spec) else 1.0
    if abs(spec[0]) > HERMITIAN_TOL * scale:
        raise ValueError(f"samples have nonzero mean {spec[0].real:.3e}")
    return SpectralField(kmax=kmax, coeffs=spec[1 : kmax + 1].copy())


def from_full_spectrum(full: np.ndarray, tol: float = HERMITIAN_TOL) -> SpectralField:
    """Import a two-sided spectrum (k = -K..K), enforcing Hermitian symmetry
    and zero mean to ``tol`` per mode."""
    full = np.asarray(full, dtype=np.complex128)
    if full.ndim != 1 or len(full) % 2 == 0:
        raise ValueError("expected an odd-length two-sided spectrum")
    K = len(full) // 2
    if K < 1:
        raise ValueError("spectrum has no nonzero modes")
    scale = max(1.0, float(np.max(np.abs(full))))
    if abs(full[K]) > tol * scale:
        raise ValueError("mean mode exceeds import tolerance")
    mismatch = np.abs(full[K - 1 :: -1] - np.conj(full[K + 1 :])).max()
    if mismatch > tol * scale:
        raise ValueError(f"Hermitian symmetry violated by {mismatch:.3e}")
    return SpectralField(kmax=K, coeffs=full[K + 1 :].copy())


def _convolution_fast(u: SpectralField, nx: int | None) -> np.ndarray:
    """(u^2)_k for k = 1..kmax via an alias-free physical-space product."""
    if nx is None:
        nx = default_grid_size(u.kmax)
    w = to_physical(u, nx) ** 2
    return np.fft.rfft(w)[1 : u.kmax + 1] / nx


def _convolution_direct(u: SpectralField) -> np.ndarray:
    """(u^2)_k for k = 1..kmax as a literal truncated convolution sum."""
    K = u.kmax
    full = u.full_spectrum()  # index i holds mode i - K
    out = np.zeros(K, dtype=np.complex128)
    for k in range(1, K + 1):
        acc = 0.0 + 0.0j
        for k1 in range(-K, K + 1):
            k2 = k - k1
            if k1 == 0 or k2 == 0 or abs(k2) > K:
                continue
            acc += full[k1 + K] * full[k2 + K]
        out[k - 1] = acc
    return out


def nonlinear_term(u: SpectralField, mode: str = "fast", nx: int | None = None) -> SpectralField:
    """N(u)_k = -(i*k/2) * sum_{k1+k2=k} c_{k1} c_{k2}, the advection term
    spectrum of -(1/2) d/dx (u^2).

    mode="fast" squares on an alias-free grid; mode="direct" evaluates the
    truncated convolution literally and is kept as a first-class oracle.
    Both truncate input and output modes at u.kmax.
    """
    if mode == "fast":
        conv = _convolution_fast(u, nx)
    elif mode == "direct":
        conv = _convolution_direct(u)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    k = np.arange(1, u.kmax + 1, dtype=np.float64)
    return SpectralField(kmax=u.kmax, coeffs=-0.5j * k * conv)
