"""Exact integer arithmetic around the quintic dispersion relation.

Everything here works on the wavenumber lattice, not on fields: telescoping
identities for third and fifth powers, the phase factors that control which
mode triples interact resonantly, exhaustive enumeration of triple shells
grouped by their conserved pair (sum, phase key), and gap statistics for the
shifted-phase sequence that appears in quartic space-time estimates.

Float dispersion coefficients are converted to exact rationals before any
grouping or equality test (every finite float is a dyadic rational), so the
combinatorial results carry no rounding ambiguity.  Counting is done in int64
when a precomputed bound shows no overflow is possible and falls back to
arbitrary-precision integers otherwise; silent wraparound is never an option.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from .fields import PhysicalParams

__all__ = [
    "quintic_identity_check",
    "theta",
    "kappa",
    "classify_resonant_triple",
    "TripleClass",
    "four_phase_factorization_check",
    "ResonanceTable",
    "enumerate_Apq",
    "dyadic_sweep",
    "SweepRow",
    "gamma_gap_stats",
    "GammaGapReport",
]

# int64 risk threshold for the scaled phase key; stay well under 2**63 - 1
# because three fifth powers are summed before scaling.
_INT64_SAFE = 2**62


def quintic_identity_check(k1: int, k2: int) -> bool:
    """Verify, in exact integer arithmetic, the two telescoping identities

        (k1+k2)^5 - k1^5 - k2^5 == 5*k1*k2*(k1+k2)*(k1^2 + k2^2 + k1*k2)
        (k1+k2)^3 - k1^3 - k2^3 == 3*k1*k2*(k1+k2)

    These underpin every denominator in the normal-form operators, so the
    check is a self-test: it should return True for every integer pair."""
    k1, k2 = int(k1), int(k2)
    s = k1 + k2
    quintic = s**5 - k1**5 - k2**5 == 5 * k1 * k2 * s * (k1 * k1 + k2 * k2 + k1 * k2)
    cubic = s**3 - k1**3 - k2**3 == 3 * k1 * k2 * s
    return quintic and cubic


def theta(k1: int, k2: int, k3: int, p: PhysicalParams) -> float:
    """Symmetric quadratic phase factor of a mode triple:

        5*alpha*(k1^2 + k2^2 + k3^2 + k1*k2 + k2*k3 + k3*k1) - 3*beta

    The oscillation frequency of a cubic interaction is this factor times
    the product of pairwise sums, so its non-vanishing is what reduces
    resonance analysis to the pairwise sums alone."""
    q = k1 * k1 + k2 * k2 + k3 * k3 + k1 * k2 + k2 * k3 + k3 * k1
    return 5.0 * p.alpha * q - 3.0 * p.beta


def kappa(k1: int, k2: int, k3: int, p: PhysicalParams) -> float:
    """Conserved phase key of a mode triple:

        -alpha*(k1^5 + k2^5 + k3^5) + beta*(k1^3 + k2^3 + k3^3)

    Triples sharing wavenumber sum and this key are exactly the ones a
    quartic interaction cannot separate by oscillation."""
    s5 = k1**5 + k2**5 + k3**5
    s3 = k1**3 + k2**3 + k3**3
    return -p.alpha * float(s5) + p.beta * float(s3)


class TripleClass(NamedTuple):
    """Outcome of resonance classification for one mode triple."""

    label: str
    vanishing: tuple[bool, bool, bool]  # (k1+k2, k2+k3, k3+k1) == 0


def classify_resonant_triple(k1: int, k2: int, k3: int) -> TripleClass:
    """Sort a triple of nonzero modes by which pairwise sums vanish.

    Labels: "degenerate" when k2 + k3 = 0 (such triples drop out of the
    cubic interaction sum before any phase analysis); "S1" when both
    k1 + k2 and k3 + k1 vanish, which forces (-k, k, k); "S2" when only
    k1 + k2 vanishes, forcing (j, -j, k) with |j| != |k|; "S3" when only
    k3 + k1 vanishes, forcing (j, k, -j); "nonresonant" otherwise.  The
    three S-classes partition the vanishing-phase set once degenerate
    triples are excluded."""
    if k1 == 0 or k2 == 0 or k3 == 0:
        raise ValueError("triple classification requires nonzero modes")
    s12 = k1 + k2 == 0
    s23 = k2 + k3 == 0
    s31 = k3 + k1 == 0
    vanishing = (s12, s23, s31)
    if s23:
        return TripleClass("degenerate", vanishing)
    if s12 and s31:
        return TripleClass("S1", vanishing)
    if s12:
        return TripleClass("S2", vanishing)
    if s31:
        return TripleClass("S3", vanishing)
    return TripleClass("nonresonant", vanishing)


def _exact_coeffs(p: PhysicalParams) -> tuple[Fraction, Fraction]:
    if not (math.isfinite(p.alpha) and math.isfinite(p.beta)):
        raise ValueError("exact arithmetic requires finite dispersion coefficients")
    return Fraction(p.alpha), Fraction(p.beta)


def four_phase_factorization_check(ks, ms, p: PhysicalParams) -> bool:
    """Exact-arithmetic check of the four-mode phase factorization

        sum_i (m_i + alpha*k_i^5 - beta*k_i^3)
          == -(k1+k2)*(k2+k3)*(k3+k1)
             * {5*alpha*(k1^2+k2^2+k3^2+k1*k2+k2*k3+k3*k1) - 3*beta}

    valid whenever the four wavenumbers and the four modulation offsets
    each sum to zero.  Another always-true self-test; both sides are
    evaluated as exact rationals."""
    k1, k2, k3, k4 = (int(k) for k in ks)
    m1, m2, m3, m4 = (int(m) for m in ms)
    if k1 + k2 + k3 + k4 != 0:
        raise ValueError("wavenumbers must sum to zero")
    if m1 + m2 + m3 + m4 != 0:
        raise ValueError("modulation offsets must sum to zero")
    a, b = _exact_coeffs(p)
    s5 = k1**5 + k2**5 + k3**5 + k4**5
    s3 = k1**3 + k2**3 + k3**3 + k4**3
    lhs = (m1 + m2 + m3 + m4) + a * s5 - b * s3
    q = k1 * k1 + k2 * k2 + k3 * k3 + k1 * k2 + k2 * k3 + k3 * k1
    rhs = -((k1 + k2) * (k2 + k3) * (k3 + k1)) * (5 * a * q - 3 * b)
    return lhs == rhs


def _scaled_kappa_ints(p: PhysicalParams) -> tuple[int, int, int]:
    """Return (scale, A, B) with scale*kappa = -A*s5 + B*s3 exactly.

    scale is the least common multiple of the rational coefficients'
    denominators, so the phase key becomes an exact integer."""
    a, b = _exact_coeffs(p)
    scale = math.lcm(a.denominator, b.denominator)
    return scale, int(a * scale), int(b * scale)


@dataclass(frozen=True)
class ResonanceTable:
    """Triples from one magnitude shell grouped by (sum, scaled phase key).

    Groups are stored contiguously: triples[group_starts[g]:group_starts[g+1]]
    are the members of group g, whose key is group_keys[g] = (p, q) with
    q = kappa_scale * kappa (an exact integer).  The mapping interface is
    entries(p, q); items() iterates the whole table.

    A group's shifted key q + scale*(alpha*p^5 - beta*p^3) vanishes exactly
    when its members annihilate in pairs, a resonant configuration whose
    membership grows linearly with the shell width.  The divisor-count
    heuristic concerns the remaining groups, so max_count ranges over those;
    max_count_all ranges over everything."""

    shell: tuple[int, int]
    kappa_scale: int
    alpha_scaled: int         # kappa_scale * alpha, exact integer
    beta_scaled: int          # kappa_scale * beta, exact integer
    triples: np.ndarray       # (N, 3) int64, grouped by key
    group_starts: np.ndarray  # (G + 1,) int64 offsets
    group_keys: np.ndarray    # (G, 2) rows (p, q), int64 or object

    def group_sizes(self) -> np.ndarray:
        return np.diff(self.group_starts)

    def shifted_keys(self) -> list[int]:
        """Exact q + scale*(alpha*p^5 - beta*p^3) per group, in group order."""
        out = []
        for g in range(len(self.group_keys)):
            psum, q = int(self.group_keys[g, 0]), int(self.group_keys[g, 1])
            out.append(q + self.alpha_scaled * psum**5 - self.beta_scaled * psum**3)
        return out

    def _largest(self, include_resonant: bool) -> tuple[int, int]:
        sizes = self.group_sizes()
        best, arg = 0, -1
        shifted = self.shifted_keys()
        for g in range(len(sizes)):
            if not include_resonant and shifted[g] == 0:
                continue
            if int(sizes[g]) > best:
                best, arg = int(sizes[g]), g
        return best, arg

    @property
    def max_count(self) -> int:
        return self._largest(include_resonant=False)[0]

    @property
    def max_count_all(self) -> int:
        return self._largest(include_resonant=True)[0]

    @property
    def argmax_key(self) -> tuple[int, int]:
        best, g = self._largest(include_resonant=False)
        if g < 0:
            raise ValueError("no divisor-counted groups in the table")
        return int(self.group_keys[g, 0]), int(self.group_keys[g, 1])

    def counts(self) -> list[tuple[int, int, int]]:
        """All (p, q, count) rows in (p, q) lexicographic order."""
        sizes = np.diff(self.group_starts)
        return [
            (int(pk), int(qk), int(n))
            for (pk, qk), n in zip(self.group_keys, sizes)
        ]

    def entries(self, psum: int, q: int) -> list[tuple[int, int, int]]:
        """Triples with wavenumber sum psum and scaled phase key q."""
        for g in range(len(self.group_keys)):
            if int(self.group_keys[g, 0]) == psum and int(self.group_keys[g, 1]) == q:
                lo, hi = int(self.group_starts[g]), int(self.group_starts[g + 1])
                return [tuple(int(v) for v in row) for row in self.triples[lo:hi]]
        return []

    def items(self) -> Iterator[tuple[tuple[int, int], list[tuple[int, int, int]]]]:
        for g in range(len(self.group_keys)):
            key = (int(self.group_keys[g, 0]), int(self.group_keys[g, 1]))
            lo, hi = int(self.group_starts[g]), int(self.group_starts[g + 1])
            yield key, [tuple(int(v) for v in row) for row in self.triples[lo:hi]]

    def verify(self, p: PhysicalParams) -> bool:
        """Re-check every stored triple against its group key, exactly."""
        scale, ai, bi = _scaled_kappa_ints(p)
        if scale != self.kappa_scale:
            return False
        kmin, kmax = self.shell
        for (psum, q), members in self.items():
            for k1, k2, k3 in members:
                if not all(kmin <= abs(k) <= kmax for k in (k1, k2, k3)):
                    return False
                if k1 + k2 + k3 != psum:
                    return False
                s5 = k1**5 + k2**5 + k3**5
                s3 = k1**3 + k2**3 + k3**3
                if -ai * s5 + bi * s3 != q:
                    return False
        return True


def _shell_values(kmin: int, kmax: int) -> np.ndarray:
    neg = np.arange(-kmax, -kmin + 1, dtype=np.int64)
    pos = np.arange(kmin, kmax + 1, dtype=np.int64)
    return np.concatenate([neg, pos])


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("KAWALAB_THREADS")
    return max(1, int(env)) if env else 1


def _chunk_int64(k1: int, vals: np.ndarray, ai: int, bi: int):
    """Sums, scaled keys, and triples for one leading mode, vectorized."""
    v2 = vals[:, None]
    v3 = vals[None, :]
    psum = k1 + v2 + v3
    s5 = k1**5 + v2**5 + v3**5
    s3 = k1**3 + v2**3 + v3**3
    q = -ai * s5 + bi * s3
    n = vals.size
    trip = np.empty((n * n, 3), dtype=np.int64)
    trip[:, 0] = k1
    trip[:, 1] = np.repeat(vals, n)
    trip[:, 2] = np.tile(vals, n)
    return psum.ravel(), q.ravel(), trip


def _enumerate_exact(kmin: int, kmax: int, scale: int, ai: int, bi: int):
    """Arbitrary-precision fallback: dict of (p, q) -> list of triples."""
    groups: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    mags = list(range(kmin, kmax + 1))
    vals = [-m for m in reversed(mags)] + mags
    for k1 in vals:
        for k2 in vals:
            for k3 in vals:
                key = (
                    k1 + k2 + k3,
                    -ai * (k1**5 + k2**5 + k3**5) + bi * (k1**3 + k2**3 + k3**3),
                )
                groups.setdefault(key, []).append((k1, k2, k3))
    return groups


def _empty_table(kmin: int, kmax: int, scale: int, ai: int, bi: int) -> ResonanceTable:
    return ResonanceTable(
        shell=(kmin, kmax),
        kappa_scale=scale,
        alpha_scaled=ai,
        beta_scaled=bi,
        triples=np.empty((0, 3), dtype=np.int64),
        group_starts=np.zeros(1, dtype=np.int64),
        group_keys=np.empty((0, 2), dtype=np.int64),
    )


def enumerate_Apq(
    kmin: int,
    kmax: int,
    p: PhysicalParams,
    workers: int | None = None,
) -> ResonanceTable:
    """Group every triple with kmin <= |k_i| <= kmax by (sum, phase key).

    The phase key is kappa scaled to an exact integer (see kappa_scale on
    the result).  Enumeration runs in int64 when a bound on the scaled key
    proves overflow impossible, otherwise in arbitrary-precision integers.
    workers > 1 splits the leading mode across threads; the merge is a
    concatenation, so the result does not depend on scheduling."""
    if kmin < 1:
        raise ValueError("shell must consist of nonzero modes (kmin >= 1)")
    scale, ai, bi = _scaled_kappa_ints(p)
    if kmin > kmax:
        return _empty_table(kmin, kmax, scale, ai, bi)

    bound = (3 + 3**5) * abs(ai) * kmax**5 + (3 + 3**3) * abs(bi) * kmax**3
    if bound >= _INT64_SAFE:
        groups = _enumerate_exact(kmin, kmax, scale, ai, bi)
        keys = sorted(groups)
        counts = [len(groups[k]) for k in keys]
        starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        trips = np.array(
            [t for k in keys for t in groups[k]], dtype=np.int64
        ).reshape(-1, 3)
        fits = all(abs(q) < 2**63 for _, q in keys)
        karr = np.array(keys, dtype=np.int64 if fits else object).reshape(-1, 2)
        return ResonanceTable(
            shell=(kmin, kmax), kappa_scale=scale,
            alpha_scaled=ai, beta_scaled=bi,
            triples=trips, group_starts=starts, group_keys=karr,
        )

    vals = _shell_values(kmin, kmax)
    nw = _worker_count(workers)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(lambda k1: _chunk_int64(int(k1), vals, ai, bi), vals))
    else:
        parts = [_chunk_int64(int(k1), vals, ai, bi) for k1 in vals]
    psum = np.concatenate([c[0] for c in parts])
    q = np.concatenate([c[1] for c in parts])
    trips = np.concatenate([c[2] for c in parts])

    order = np.lexsort((q, psum))
    psum, q, trips = psum[order], q[order], trips[order]
    keys = np.column_stack([psum, q])
    boundary = np.flatnonzero(np.any(keys[1:] != keys[:-1], axis=1)) + 1
    starts = np.concatenate([[0], boundary, [len(q)]]).astype(np.int64)
    return ResonanceTable(
        shell=(kmin, kmax), kappa_scale=scale,
        alpha_scaled=ai, beta_scaled=bi,
        triples=trips, group_starts=starts, group_keys=keys[starts[:-1]],
    )


class SweepRow(NamedTuple):
    K: int
    max_count: int
    argmax_p: int
    argmax_q: int


def dyadic_sweep(
    p: PhysicalParams,
    k_values: list[int],
    workers: int | None = None,
) -> list[SweepRow]:
    """Largest group size per dyadic shell |k_i| in [K, 2K).

    The slow growth of max_count with K is the quantitative content of the
    divisor-bound heuristic; rows feed the sweep CSV."""
    rows = []
    for K in k_values:
        table = enumerate_Apq(K, 2 * K - 1, p, workers=workers)
        ap, aq = table.argmax_key
        rows.append(SweepRow(K=K, max_count=table.max_count, argmax_p=ap, argmax_q=aq))
    return rows


class GammaGapReport(NamedTuple):
    delta: int
    nmax: int
    min_gap: float
    argmin_n: int
    ratio_to_delta4: float


def gamma_gap_stats(delta: int, nmax: int, p: PhysicalParams) -> GammaGapReport:
    """Minimum consecutive gap of the shifted-phase sequence

        G(n) = {-5*alpha*(n^2 + delta^2 + n*delta) + 3*beta} * n * delta * (n + delta)

    over 0 <= n < nmax, reported with its ratio to delta^4.  The sequence
    gives the oscillation frequencies seen by a mode pair separated by
    delta; a gap lower bound of the order delta^4 is what makes the
    quartic space-time estimate summable."""
    if delta < 1:
        raise ValueError("delta must be a positive integer")
    if nmax < 2:
        raise ValueError("nmax must be at least 2")
    a, b = _exact_coeffs(p)

    def value(n: int) -> Fraction:
        lam = -5 * a * (n * n + delta * delta + n * delta) + 3 * b
        return lam * (n * delta * (n + delta))

    prev = value(0)
    min_gap = Fraction(-1)
    argmin = 0
    for n in range(1, nmax + 1):
        cur = value(n)
        gap = abs(cur - prev)
        if min_gap < 0 or gap < min_gap:
            min_gap, argmin = gap, n - 1
        prev = cur
    return GammaGapReport(
        delta=delta,
        nmax=nmax,
        min_gap=float(min_gap),
        argmin_n=argmin,
        ratio_to_delta4=float(min_gap) / float(delta**4),
    )
