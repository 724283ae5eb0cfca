"""Sampling laws for waiting times and collision inputs.

All laws are small frozen dataclasses with a ``sample(rng, ...)`` method
driven by a caller-owned ``numpy.random.Generator``, which keeps every
simulation reproducible per seed. The scalar velocity laws additionally
expose a deterministic ``expect`` used by the stationarity checks:
Gauss-Hermite nodes for the Gaussian, Gauss-Legendre for the uniform, and
exact enumeration for the two-point law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# waiting-time laws (inter-collision intervals)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """Exponential waiting times with rate > 0 (the Markov case)."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng: np.random.Generator, size=None):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class GammaLaw:
    """Gamma waiting times, shape/rate parametrization."""

    shape: float
    rate: float

    def __post_init__(self):
        if not self.shape > 0 or not self.rate > 0:
            raise ValueError("shape and rate must be positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


@dataclass(frozen=True)
class UniformPositive:
    """Uniform waiting times on [low, high], 0 <= low < high."""

    low: float
    high: float

    def __post_init__(self):
        if self.low < 0 or not self.high > self.low:
            raise ValueError("need 0 <= low < high")

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(self.low, self.high, size=size)


# ---------------------------------------------------------------------------
# scalar external-velocity laws (zero mean, finite variance)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianVelocity:
    """Centered normal velocity with variance sigma2."""

    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def fourth_moment(self) -> float:
        return 3.0 * self.sigma2**2

    def sample(self, rng: np.random.Generator, size=None):
        return rng.normal(0.0, math.sqrt(self.sigma2), size=size)

    def expect(self, f, nodes: int = 64) -> float:
        # E f(v) with v ~ N(0, sigma2): substitute v = sqrt(2 sigma2) x
        x, w = np.polynomial.hermite.hermgauss(nodes)
        v = math.sqrt(2.0 * self.sigma2) * x
        return float(np.dot(w, f(v)) / math.sqrt(math.pi))


@dataclass(frozen=True)
class UniformSymmetricVelocity:
    """Uniform velocity on [-half_width, half_width] (sigma2 = a^2/3)."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def sigma2(self) -> float:
        return self.half_width**2 / 3.0

    @property
    def fourth_moment(self) -> float:
        return self.half_width**4 / 5.0

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(-self.half_width, self.half_width, size=size)

    def expect(self, f, nodes: int = 64) -> float:
        x, w = np.polynomial.legendre.leggauss(nodes)
        v = self.half_width * x
        return float(np.dot(w, f(v)) * 0.5)


@dataclass(frozen=True)
class TwoPointVelocity:
    """Velocity +-magnitude with probability 1/2 each (sigma2 = a^2).

    Has no density; it exists to exercise the non-Gaussian converse of the
    Gibbs-invariance statement while keeping second moments exact.
    """

    magnitude: float

    def __post_init__(self):
        if not self.magnitude > 0:
            raise ValueError("magnitude must be positive")

    @property
    def sigma2(self) -> float:
        return self.magnitude**2

    @property
    def fourth_moment(self) -> float:
        return self.magnitude**4

    def sample(self, rng: np.random.Generator, size=None):
        signs = rng.integers(0, 2, size=size) * 2 - 1
        return signs * self.magnitude

    def expect(self, f, nodes: int = 0) -> float:
        # exact enumeration; the node count is accepted for API symmetry
        a = self.magnitude
        return 0.5 * (float(f(a)) + float(f(-a)))


# ---------------------------------------------------------------------------
# vector / angle laws for the d > 1 collision models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotropicGaussianVector:
    """i.i.d. centered normal components, per-component variance sigma2."""

    dim: int
    sigma2: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    def sample(self, rng: np.random.Generator, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.normal(0.0, math.sqrt(self.sigma2), size=shape)


@dataclass(frozen=True)
class UniformAngle:
    """Impact angle uniform on [0, 2*pi)."""

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(0.0, 2.0 * math.pi, size=size)

    @property
    def moment_matrix(self) -> np.ndarray:
        # E[R(phi) R(phi)^T] = I/2 exactly for the uniform angle
        return 0.5 * np.eye(2)
