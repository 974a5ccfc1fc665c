import numpy as np
import pytest

from kawalab import PhysicalParams, SpectralField, rescaled


@pytest.fixture(scope="session")
def p101() -> PhysicalParams:
    """Pure quintic dispersion with unit damping: the workhorse parameters."""
    return PhysicalParams(alpha=1.0, beta=0.0, gamma=1.0)


@pytest.fixture(scope="session")
def p100() -> PhysicalParams:
    """Undamped pure quintic dispersion (conservative runs)."""
    return PhysicalParams(alpha=1.0, beta=0.0, gamma=0.0)


def exp_profile(kmax: int, sigma: float, norm: float, seed: int) -> SpectralField:
    """Exponentially decaying spectrum exp(-sigma*k) with seeded random
    phases, rescaled to the requested L2 norm.  Smooth enough that every
    active mode is well resolved by the default stepper settings."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, kmax + 1)
    coeffs = np.exp(-sigma * k) * np.exp(2j * np.pi * rng.random(kmax))
    return rescaled(SpectralField(kmax=kmax, coeffs=coeffs), norm)
