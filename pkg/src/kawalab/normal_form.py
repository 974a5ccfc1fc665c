"""Quadratic and cubic correction operators and the solution-representation
residual check.

Writing phase(k) = alpha*k^5 - beta*k^3, the phase of a (k1, k2) pair
interaction factors as

    phase(k1+k2) - phase(k1) - phase(k2)
        = k1*k2*(k1+k2) * (5*alpha*(k1^2+k2^2+k1*k2) - 3*beta),

so dividing an interaction by its phase is legal exactly when
5*alpha*(k1^2+k2^2+k1*k2) != 3*beta for all nonzero integer pairs: the
nonresonance condition.  Under it one can trade the quadratic term for
boundary corrections (operator B), resonant cubic corrections (rho, sigma)
and a nonresonant cubic remainder (R), giving a closed representation of
the solution that duhamel_residual verifies term by term on a computed
trajectory.

All four operators are literal convolution sums over the truncated mode
set: these are verification operators, so clarity wins over transform
tricks.  Construction of the per-truncation weight tables is cached; a
vanishing denominator raises ResonanceError naming the interaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .fields import PhysicalParams, SpectralField, _nonresonance_witness, random_field, sobolev_norm
from .evolution import Trajectory, composite_simpson, phase

__all__ = [
    "ResonanceError",
    "NonresonanceResult",
    "check_nonresonance",
    "InteractionField",
    "to_interaction",
    "from_interaction",
    "B_op",
    "rho_op",
    "sigma_op",
    "R_op",
    "DuhamelResidualReport",
    "duhamel_residual",
    "MultilinearReport",
    "multilinear_constants",
]


class ResonanceError(ValueError):
    """A phase denominator vanished for the stored parameters."""


_cached_witness = lru_cache(maxsize=256)(_nonresonance_witness)


def _require_nonresonant(p: PhysicalParams, kbound: int) -> None:
    """Refuse resonant parameters outright (no regularization): the
    representation these operators implement is not available there."""
    w = _cached_witness(p.alpha, p.beta, kbound)
    if w is not None:
        raise ResonanceError(
            f"resonant parameters: 5*alpha*(k1^2+k2^2+k1*k2) = 3*beta at (k1, k2) = {w}")


class NonresonanceResult(NamedTuple):
    nonresonant: bool
    witness: tuple[int, int] | None


def check_nonresonance(p: PhysicalParams, kbound: int) -> NonresonanceResult:
    """Scan nonzero |k1|, |k2| <= kbound for 5*alpha*(k1^2+k2^2+k1*k2) = 3*beta.

    The quadratic form only takes values >= 1 there, so any non-positive
    3*beta/(5*alpha) passes vacuously.  Near-equalities (relative 1e-9) are
    reported as resonant: downstream operators refuse rather than divide by
    a tiny denominator."""
    w = _nonresonance_witness(p.alpha, p.beta, kbound)
    return NonresonanceResult(nonresonant=w is None, witness=w)


@dataclass(frozen=True)
class InteractionField:
    """Spectrum in the frame that absorbs damping and free dispersion:
    w_k = exp((gamma + i*phase(k)) * t) * u_k."""

    t: float
    kmax: int
    coeffs: np.ndarray


def to_interaction(u: SpectralField, t: float, p: PhysicalParams) -> InteractionField:
    k = np.arange(1, u.kmax + 1)
    mult = np.exp((p.gamma + 1j * phase(k, p)) * t)
    return InteractionField(t=t, kmax=u.kmax, coeffs=u.coeffs * mult)


def from_interaction(w: InteractionField, p: PhysicalParams) -> SpectralField:
    k = np.arange(1, w.kmax + 1)
    mult = np.exp(-(p.gamma + 1j * phase(k, p)) * w.t)
    return SpectralField(kmax=w.kmax, coeffs=w.coeffs * mult)


@lru_cache(maxsize=32)
def _pair_tables(kmax: int, alpha: float, beta: float):
    """Index and weight tables for the quadratic sum at one truncation.

    Returns (idx2, w2): for output k (row k-1) and first index k1 (column
    a, mode k1 = a - kmax counting the zero slot), idx2 picks k2 = k - k1
    out of a zero-padded two-sided spectrum and w2 = 1/(k1*k2*bracket) with
    zeros at invalid entries."""
    K = kmax
    ks = np.arange(1, K + 1)[:, None]            # output modes
    k1 = np.arange(-K, K + 1)[None, :]
    k2 = ks - k1
    valid = (k1 != 0) & (k2 != 0) & (np.abs(k2) <= K)
    bracket = 5.0 * alpha * (k1**2 + k2**2 + k1 * k2) - 3.0 * beta
    if valid.any():
        sel = np.abs(bracket[valid])
        tiny = sel <= 1e-9 * max(1.0, float(sel.max()))
        if tiny.any():
            pairs = np.argwhere(valid)
            off = pairs[tiny][0]
            kk, aa = int(off[0]) + 1, int(off[1]) - K
            raise ResonanceError(f"vanishing pair denominator at (k1, k2) = ({aa}, {kk - aa})")
    denom = np.where(valid, k1 * k2 * bracket, 1.0)
    w2 = np.where(valid, 1.0 / denom, 0.0)
    # gather index into [0 | modes -K..K]; slot 0 stays zero
    idx2 = np.where(valid, k2 + K + 1, 0).astype(np.int32)
    return idx2, w2


@lru_cache(maxsize=32)
def _triple_tables(kmax: int, alpha: float, beta: float):
    """Index and weight tables for the cubic remainder sum.

    Axis layout (k, a, b) with k1 = a - kmax, k2 = b - kmax, k3 = k - k1 - k2.
    w3 = 1/(k1 * bracket(k1, k2+k3)) where all of k1, k2, k3 are nonzero,
    |k3| <= kmax and no pairwise sum vanishes; idx3 gathers k3."""
    K = kmax
    ks = np.arange(1, K + 1)[:, None, None]
    k1 = np.arange(-K, K + 1)[None, :, None]
    k2 = np.arange(-K, K + 1)[None, None, :]
    k3 = ks - k1 - k2
    m = k2 + k3  # equals k - k1, broadcast over b
    valid = (
        (k1 != 0) & (k2 != 0) & (k3 != 0) & (np.abs(k3) <= K)
        & (k1 + k2 != 0) & (m != 0) & (k3 + k1 != 0)
    )
    bracket = 5.0 * alpha * (k1**2 + m**2 + k1 * m) - 3.0 * beta
    if valid.any():
        sel = np.abs(bracket[np.broadcast_to(valid, bracket.shape) if bracket.shape != valid.shape else valid])
        tiny = sel <= 1e-9 * max(1.0, float(sel.max()))
        if tiny.any():
            trips = np.argwhere(valid)
            off = trips[tiny][0]
            kk = int(off[0]) + 1
            aa, bb = int(off[1]) - K, int(off[2]) - K
            raise ResonanceError(
                f"vanishing triple denominator at (k1, k2, k3) = ({aa}, {bb}, {kk - aa - bb})")
    denom = np.where(valid, k1 * bracket, 1.0)
    w3 = np.where(valid, 1.0 / denom, 0.0)
    idx3 = np.where(valid, k3 + K + 1, 0).astype(np.int32)
    return idx3, w3


def _padded(full: np.ndarray) -> np.ndarray:
    """[0 | c_{-K} .. c_K]: slot 0 absorbs every invalid gather."""
    return np.concatenate(([0.0 + 0.0j], full))


def B_op(phi: SpectralField, psi: SpectralField, p: PhysicalParams) -> SpectralField:
    """B(phi, psi)_k = -(1/2) sum_{k1+k2=k, k1*k2 != 0}
    phi_{k1} psi_{k2} / (k1 * k2 * (5*alpha*(k1^2+k2^2+k1*k2) - 3*beta)),
    truncated to |k1|, |k2| <= kmax.  Symmetric in its arguments."""
    if phi.kmax != psi.kmax:
        raise ValueError("operands must share kmax")
    _require_nonresonant(p, phi.kmax)
    idx2, w2 = _pair_tables(phi.kmax, p.alpha, p.beta)
    phi_full = phi.full_spectrum()
    psi_pad = _padded(psi.full_spectrum())
    terms = w2 * phi_full[None, :] * psi_pad[idx2]
    return SpectralField(kmax=phi.kmax, coeffs=-0.5 * terms.sum(axis=1))


def rho_op(u: SpectralField, p: PhysicalParams) -> SpectralField:
    """rho(u)_k = i |u_k|^2 u_k / (2 * (15*alpha*k^2 - 3*beta) * k)."""
    _require_nonresonant(p, u.kmax)
    k = np.arange(1, u.kmax + 1, dtype=np.float64)
    bracket = 15.0 * p.alpha * k**2 - 3.0 * p.beta
    c = u.coeffs
    return SpectralField(kmax=u.kmax, coeffs=1j * np.abs(c) ** 2 * c / (2.0 * bracket * k))


def sigma_op(u: SpectralField, p: PhysicalParams) -> SpectralField:
    """sigma(u)_k = -i u_k * sum_{j != 0, |j| != |k|, |j| <= kmax}
    |u_j|^2 / (j * (5*alpha*(k^2 - k*j + j^2) - 3*beta))."""
    _require_nonresonant(p, u.kmax)
    K = u.kmax
    k = np.arange(1, K + 1)[:, None]
    j = np.arange(-K, K + 1)[None, :]
    valid = (j != 0) & (np.abs(j) != k)
    bracket = 5.0 * p.alpha * (k**2 - k * j + j**2) - 3.0 * p.beta
    sel = np.abs(bracket[valid])
    if (sel <= 1e-9 * max(1.0, float(sel.max()))).any():
        raise ResonanceError("vanishing cross-interaction denominator in sigma")
    w = np.where(valid, 1.0 / np.where(valid, j * bracket, 1.0), 0.0)
    sq = np.abs(u.full_spectrum()) ** 2
    return SpectralField(kmax=K, coeffs=-1j * u.coeffs * (w @ sq))


def R_op(u: SpectralField, p: PhysicalParams) -> SpectralField:
    """Nonresonant cubic remainder

    R(u)_k = -(i/2) sum u_{k1} u_{k2} u_{k3}
             / (k1 * (5*alpha*(k1^2 + (k2+k3)^2 + k1*(k2+k3)) - 3*beta))

    over nonzero k1+k2+k3 = k with |ki| <= kmax and
    (k1+k2)(k2+k3)(k3+k1) != 0."""
    _require_nonresonant(p, 2 * u.kmax)
    idx3, w3 = _triple_tables(u.kmax, p.alpha, p.beta)
    full = u.full_spectrum()
    pad = _padded(full)
    # sum_{a,b} w3[k,a,b] * u_a * u_b * u_{k3(k,a,b)}
    V = w3 * pad[idx3]
    out = np.einsum("a,kab,b->k", full, V, full, optimize=True)
    return SpectralField(kmax=u.kmax, coeffs=-0.5j * out)


def _h2(coeffs: np.ndarray) -> float:
    k = np.arange(1, len(coeffs) + 1, dtype=np.float64)
    return float(np.sqrt(2.0 * np.sum(k**4 * np.abs(coeffs) ** 2)))


@dataclass(frozen=True)
class DuhamelResidualReport:
    """Per-term accounting of the solution representation at one time."""

    t: float
    kmax: int
    total_relative: float
    per_mode_residual: np.ndarray
    term_magnitudes: dict[str, float]
    lhs_norm: float
    panels: int

    def summary_row(self) -> dict[str, float]:
        row = {"t": self.t, "total_relative": self.total_relative, "lhs_norm": self.lhs_norm,
               "panels": float(self.panels)}
        row.update({f"h2_{k}": v for k, v in self.term_magnitudes.items()})
        return row


def duhamel_residual(traj: Trajectory, g: SpectralField, f: SpectralField | None, t: float,
                     linear_only: bool = False) -> DuhamelResidualReport:
    """Evaluate the six-group representation of u_k(t) on a stored
    trajectory and report the defect.

    Groups: damped free data; B(u,u) now; -propagated B(g,g); the memory
    integral of gamma*B(u,u) - 2*B(u, f); the integral of
    f + rho(u) + sigma(u); and the integral of R(u).  The forcing slot of
    the memory integral takes f itself: the substitution that produces the
    term also cancels the oscillating kernel against the slot phases, so
    any propagator factor there breaks the identity (a plateau near 1e-3
    under refinement instead of convergence).  Time integrals use
    composite Simpson on the stored samples (trapezoid end-panel when the
    panel count is odd).  t snaps to the nearest stored sample.

    linear_only=True keeps only the free-data and forcing groups, the
    oracle case for a trajectory computed with the quadratic term off.
    """
    p = traj.params
    K = traj.kmax
    if g.kmax != K or (f is not None and f.kmax != K):
        raise ValueError("g, f and trajectory must share kmax")
    if not (traj.times[0] - 1e-12 <= t <= traj.times[-1] + 1e-12):
        raise ValueError(f"t = {t} outside the trajectory range")
    j = int(np.argmin(np.abs(traj.times - t)))
    if j < 1:
        raise ValueError("need at least one panel before t")
    t_used = float(traj.times[j])
    h = traj.sample_spacing
    r = traj.times[: j + 1]
    u_nodes = traj.coeffs[: j + 1]

    k = np.arange(1, K + 1)
    rate = p.gamma + 1j * phase(k, p)
    prop_t = np.exp(-rate * t_used)                      # e^{-(gamma + iL)t}
    mult = np.exp(-rate[None, :] * (t_used - r)[:, None])  # rows: nodes

    fvec = np.zeros(K, dtype=np.complex128) if f is None else f.coeffs.astype(np.complex128)
    u_t = u_nodes[-1]

    zero = np.zeros(K, dtype=np.complex128)
    terms: dict[str, np.ndarray] = {}
    terms["free_data"] = prop_t * g.coeffs
    if linear_only:
        terms["quadratic_now"] = zero
        terms["quadratic_initial"] = zero
        terms["memory_quadratic"] = zero
        terms["forcing_resonant"] = composite_simpson(mult * fvec[None, :], h)
        terms["cubic_remainder"] = zero
    else:
        nodes = [SpectralField(kmax=K, coeffs=u_nodes[i].copy()) for i in range(j + 1)]
        B_now = B_op(nodes[-1], nodes[-1], p)
        B_init = B_op(g, g, p)
        terms["quadratic_now"] = B_now.coeffs
        terms["quadratic_initial"] = -prop_t * B_init.coeffs

        mem = np.empty((j + 1, K), dtype=np.complex128)
        reso = np.empty((j + 1, K), dtype=np.complex128)
        cubic = np.empty((j + 1, K), dtype=np.complex128)
        for i in range(j + 1):
            ui = nodes[i]
            Buu = B_op(ui, ui, p).coeffs
            Bf = B_op(ui, f, p).coeffs if f is not None else zero
            mem[i] = p.gamma * Buu - 2.0 * Bf
            reso[i] = fvec + rho_op(ui, p).coeffs + sigma_op(ui, p).coeffs
            cubic[i] = R_op(ui, p).coeffs
        terms["memory_quadratic"] = composite_simpson(mult * mem, h)
        terms["forcing_resonant"] = composite_simpson(mult * reso, h)
        terms["cubic_remainder"] = composite_simpson(mult * cubic, h)

    rhs = sum(terms.values())
    residual = u_t - rhs
    lhs_norm = float(np.sqrt(2.0 * np.sum(np.abs(u_t) ** 2)))
    total = float(np.sqrt(2.0 * np.sum(np.abs(residual) ** 2)))
    return DuhamelResidualReport(
        t=t_used,
        kmax=K,
        total_relative=total / max(lhs_norm, 1e-30),
        per_mode_residual=np.abs(residual),
        term_magnitudes={name: _h2(v) for name, v in terms.items()},
        lhs_norm=lhs_norm,
        panels=j,
    )


@dataclass(frozen=True)
class MultilinearReport:
    """Empirical operator-norm survey over seeded random inputs."""

    kmax: int
    s: float
    trials: int
    seed: int
    decay: float
    stats: dict[str, dict[str, float]]
    ratios: dict[str, np.ndarray]


def multilinear_constants(p: PhysicalParams, kmax: int, s: float, trials: int, seed: int,
                          decay: float = 0.8) -> MultilinearReport:
    """Ratios ||B(phi,psi)||_{H^s} / (||phi|| ||psi||) and
    ||rho(u)||_{H^s} / ||u||^3, ||sigma(u)||_{H^s} / ||u||^3 over seeded
    random fields.  The smoothing range caps s at 3 for B and rho and at 2
    for sigma; the capped exponents are recorded in the stats."""
    s_b = min(s, 3.0)
    s_rho = min(s, 3.0)
    s_sigma = min(s, 2.0)
    out = {"B": [], "rho": [], "sigma": []}
    for i in range(trials):
        phi = random_field(kmax, decay, 1.0, seed + 3 * i)
        psi = random_field(kmax, decay, 1.0, seed + 3 * i + 1)
        u = random_field(kmax, decay, 1.0, seed + 3 * i + 2)
        nu = sobolev_norm(u, 0)
        out["B"].append(sobolev_norm(B_op(phi, psi, p), s_b)
                        / (sobolev_norm(phi, 0) * sobolev_norm(psi, 0)))
        out["rho"].append(sobolev_norm(rho_op(u, p), s_rho) / nu**3)
        out["sigma"].append(sobolev_norm(sigma_op(u, p), s_sigma) / nu**3)
    ratios = {name: np.asarray(vals) for name, vals in out.items()}
    stats = {}
    for (name, arr), s_used in zip(ratios.items(), (s_b, s_rho, s_sigma)):
        q = np.quantile(arr, [0.5, 0.9])
        stats[name] = {"s": s_used, "max": float(arr.max()), "mean": float(arr.mean()),
                       "median": float(q[0]), "q90": float(q[1])}
    return MultilinearReport(kmax=kmax, s=s, trials=trials, seed=seed, decay=decay,
                             stats=stats, ratios=ratios)
