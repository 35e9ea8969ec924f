"""Correlated planar Brownian motion Z = (L, R) on a uniform grid.

The increments of Z over a step of length ``dt`` are bivariate Gaussian with
covariance ``dt * a * [[1, -cos(theta)], [-cos(theta), 1]]`` where
``theta = 4*pi/kappa_prime``.  Gaussians come from numpy's ``Generator``
(PCG64 bit stream, ziggurat normals), which is bit-reproducible for a fixed
seed and numpy version.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterDomainError

PATH_MAGIC = b"PNL1"
_HEADER = struct.Struct("<4sdQQ")


@dataclass(frozen=True)
class KpzParams:
    """Parameter bundle shared by the sampler, detectors and formulas.

    Only ``kappa_prime`` and the variance rate ``a`` are free; the other
    quantities are derived.
    """

    kappa_prime: float
    a: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.kappa_prime) and self.kappa_prime > 4.0):
            raise ParameterDomainError(f"kappa_prime must be > 4, got {self.kappa_prime!r}")
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ParameterDomainError(f"variance rate a must be > 0, got {self.a!r}")

    @property
    def kappa(self) -> float:
        return 16.0 / self.kappa_prime

    @property
    def gamma(self) -> float:
        return 4.0 / math.sqrt(self.kappa_prime)

    @property
    def theta(self) -> float:
        return 4.0 * math.pi / self.kappa_prime

    @property
    def correlation(self) -> float:
        """Correlation of the L and R increments, ``-cos(theta)``."""
        return -math.cos(self.theta)

    def covariance(self, dt: float = 1.0) -> np.ndarray:
        c = math.cos(self.theta)
        return dt * self.a * np.array([[1.0, -c], [-c, 1.0]])


@dataclass(frozen=True)
class SeedSpec:
    """A (master seed, replicate) pair naming one independent random stream.

    ``substream`` splits a replicate further when it needs several
    independent draws (for instance two subordinators).
    """

    master_seed: int
    replicate_index: int = 0
    substream: tuple[int, ...] = ()

    def __post_init__(self):
        if self.replicate_index < 0:
            raise ParameterDomainError("replicate_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(self.replicate_index, *self.substream),
        )
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, index)

    def sub(self, *key: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.replicate_index, self.substream + tuple(key))


@dataclass(frozen=True, eq=False)
class PathGrid:
    """A sampled two-coordinate path with implicit times ``(i - origin_index) * dt``."""

    dt: float
    l_values: np.ndarray
    r_values: np.ndarray
    origin_index: int = 0
    params: KpzParams | None = field(default=None, compare=False)

    def __post_init__(self):
        l = np.ascontiguousarray(self.l_values, dtype=np.float64)
        r = np.ascontiguousarray(self.r_values, dtype=np.float64)
        if l.ndim != 1 or l.shape != r.shape or l.size < 1:
            raise ValueError("l_values and r_values must be 1-d arrays of equal length >= 1")
        if not self.dt > 0:
            raise ParameterDomainError("dt must be positive")
        if not 0 <= self.origin_index < l.size:
            raise IndexError("origin_index outside the grid")
        l.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "l_values", l)
        object.__setattr__(self, "r_values", r)

    def __len__(self) -> int:
        return self.l_values.size

    @property
    def n_steps(self) -> int:
        return self.l_values.size - 1

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def coord(self, name: str) -> np.ndarray:
        if name in ("L", "l"):
            return self.l_values
        if name in ("R", "r"):
            return self.r_values
        raise ValueError(f"unknown coordinate {name!r}; expected 'L' or 'R'")

    def reversed(self) -> "PathGrid":
        """Index-reversed path; the origin maps to its mirror index."""
        n = len(self)
        return PathGrid(self.dt, self.l_values[::-1], self.r_values[::-1],
                        n - 1 - self.origin_index, self.params)

    def swapped(self) -> "PathGrid":
        """Path with the roles of L and R exchanged."""
        return PathGrid(self.dt, self.r_values, self.l_values, self.origin_index, self.params)

    def scaled(self, c: float) -> "PathGrid":
        """Brownian rescaling: values times ``c`` and ``dt`` times ``c**2``."""
        return PathGrid(self.dt * c * c, self.l_values * c, self.r_values * c,
                        self.origin_index, self.params)


def _cholesky_factor(params: KpzParams) -> np.ndarray:
    # lower-triangular root of [[1, -c], [-c, 1]]; sin(theta) > 0 on (0, pi)
    c = math.cos(params.theta)
    return np.array([[1.0, 0.0], [-c, math.sin(params.theta)]])


def sample_path(n_steps: int, dt: float, params: KpzParams, seed: SeedSpec,
                origin_index: int = 0) -> PathGrid:
    """Sample ``n_steps`` increments of Z and return the cumulative path.

    With ``origin_index > 0`` the path is two-sided: it is shifted so that the
    values at ``origin_index`` are both zero.
    """
    if n_steps < 1:
        raise ParameterDomainError("n_steps must be at least 1")
    if not dt > 0:
        raise ParameterDomainError("dt must be positive")
    if not 0 <= origin_index <= n_steps:
        raise IndexError("origin_index outside the grid")
    rng = seed.generator()
    z = rng.standard_normal((2, n_steps))
    chol = _cholesky_factor(params) * math.sqrt(params.a * dt)
    l = np.empty(n_steps + 1)
    r = np.empty(n_steps + 1)
    l[0] = 0.0
    r[0] = 0.0
    np.cumsum(chol[0, 0] * z[0], out=l[1:])
    np.cumsum(chol[1, 0] * z[0] + chol[1, 1] * z[1], out=r[1:])
    if origin_index:
        l -= l[origin_index]
        r -= r[origin_index]
    return PathGrid(dt, l, r, origin_index, params)


def whiten(params: KpzParams) -> np.ndarray:
    """Linear map A with ``A @ Sigma @ A.T = I`` for the unit-time covariance Sigma.

    A is upper triangular, so ``A @ (1, 0)`` lies on the positive x-axis, and
    the closed first quadrant is mapped onto a wedge of opening ``theta``.
    """
    c = math.cos(params.theta)
    s = math.sin(params.theta)
    return np.array([[1.0 / s, c / s], [0.0, 1.0]]) / math.sqrt(params.a)


def write_path(path: PathGrid, target: str | Path) -> None:
    """Write the binary dump: 'PNL1', dt, n, origin_index, then L and R values."""
    n = path.n_steps
    with open(target, "wb") as fh:
        fh.write(_HEADER.pack(PATH_MAGIC, float(path.dt), n, path.origin_index))
        fh.write(path.l_values.astype("<f8").tobytes())
        fh.write(path.r_values.astype("<f8").tobytes())


def read_path(source: str | Path) -> PathGrid:
    with open(source, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated path dump header")
        magic, dt, n, origin = _HEADER.unpack(head)
        if magic != PATH_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        body = np.frombuffer(fh.read(), dtype="<f8")
    if body.size != 2 * (n + 1):
        raise ValueError(f"expected {2 * (n + 1)} values, found {body.size}")
    return PathGrid(dt, body[: n + 1].astype(np.float64), body[n + 1:].astype(np.float64), int(origin))
