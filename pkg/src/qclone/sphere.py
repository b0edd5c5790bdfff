"""Pure input states on the complex unit sphere and their moments.

The spherical chart (levels 0-based, angles theta_1..theta_{N-1}):

    xi_0     = e^{i phi_0} sin(theta_{N-1}) ... sin(theta_1)
    xi_j     = e^{i phi_j} sin(theta_{N-1}) ... sin(theta_{j+1}) cos(theta_j),  1 <= j <= N-1

with phi in [0, 2 pi) and theta in [0, pi/2).  The chart misses a set of
measure zero (theta = pi/2), which does not matter for integration.

The unitarily invariant measure in these coordinates has density

    (N-1)! / (2 pi^N) * prod_k sin^{2k-1}(theta_k) cos(theta_k).

Sampling uses normalized complex Gaussians instead, which realizes the same
measure.  Moment estimates reduce in fixed-size chunks, in order, so results
depend only on (seed, workers, chunk_size).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import make_rng, spawn_rngs

NORM_TOL = 1e-12
DEFAULT_CHUNK = 8192


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 1:
            raise ValueError("a pure state needs at least one amplitude")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> PureState:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def basis(cls, n_levels: int, level: int) -> PureState:
        amps = np.zeros(n_levels, dtype=complex)
        amps[level] = 1.0
        return cls(amps)

    @property
    def n_levels(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class SphericalCoordinates:
    phases: tuple[float, ...]
    angles: tuple[float, ...]

    def __post_init__(self):
        phases = tuple(float(p) for p in self.phases)
        angles = tuple(float(t) for t in self.angles)
        if len(phases) < 1:
            raise ValueError("need at least one phase")
        if len(angles) != len(phases) - 1:
            raise ValueError(f"{len(phases)} phases need {len(phases) - 1} polar angles, got {len(angles)}")
        for p in phases:
            if not 0.0 <= p < 2 * math.pi:
                raise ValueError(f"phase {p} outside [0, 2pi)")
        for t in angles:
            if not 0.0 <= t < math.pi / 2:
                raise ValueError(f"polar angle {t} outside [0, pi/2)")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "angles", angles)

    @property
    def n_levels(self) -> int:
        return len(self.phases)


@dataclass(frozen=True)
class MomentEstimate:
    mean: complex
    standard_error: float
    samples: int


def _chart_moduli(angles: np.ndarray) -> np.ndarray:
    """|xi_j| from polar angles; ``angles`` has shape (..., N-1)."""
    angles = np.asarray(angles, dtype=float)
    n = angles.shape[-1] + 1
    moduli = np.ones(angles.shape[:-1] + (n,))
    sin = np.sin(angles)
    cos = np.cos(angles)
    for j in range(n):
        # product of sin(theta_k) for k > j (theta index k is 1-based -> column k-1)
        if j < n - 1:
            moduli[..., j] = np.prod(sin[..., j:], axis=-1)
        if j >= 1:
            moduli[..., j] *= cos[..., j - 1]
    return moduli


def state_from_coordinates(c: SphericalCoordinates) -> PureState:
    moduli = _chart_moduli(np.array(c.angles).reshape(1, -1))[0]
    return PureState(moduli * np.exp(1j * np.array(c.phases)))


def coordinate_density(c: SphericalCoordinates, n_levels: int | None = None) -> float:
    """Density of the invariant measure with respect to d(phi) d(theta)."""
    n = c.n_levels if n_levels is None else n_levels
    if n != c.n_levels:
        raise ValueError(f"coordinates describe N={c.n_levels}, not N={n}")
    value = math.factorial(n - 1) / (2 * math.pi**n)
    for k, theta in enumerate(c.angles, start=1):
        value *= math.sin(theta) ** (2 * k - 1) * math.cos(theta)
    return value


def sample_states(n_levels: int, count: int, rng) -> np.ndarray:
    """``count`` invariant-measure states as rows of a (count, N) array."""
    if n_levels < 1:
        raise ValueError(f"n_levels must be >= 1, got {n_levels}")
    rng = make_rng(rng)
    g = rng.standard_normal((count, 2 * n_levels))
    z = g[:, :n_levels] + 1j * g[:, n_levels:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_state(n_levels: int, rng) -> PureState:
    return PureState(sample_states(n_levels, 1, rng)[0])


def sample_chart_states(n_levels: int, count: int, rng) -> np.ndarray:
    """Same distribution as :func:`sample_states`, drawn through the chart.

    theta_k has marginal CDF sin^{2k}(theta), so theta_k = arcsin(u^{1/(2k)}).
    """
    rng = make_rng(rng)
    phases = rng.uniform(0.0, 2 * math.pi, size=(count, n_levels))
    k = np.arange(1, n_levels)
    u = rng.uniform(size=(count, n_levels - 1))
    angles = np.arcsin(u ** (1.0 / (2 * k)))
    return _chart_moduli(angles) * np.exp(1j * phases)


def _check_indices(n_levels: int, indices: Sequence[int]) -> tuple[int, int, int, int]:
    if len(indices) != 4:
        raise ValueError("a fourth moment needs four level indices")
    idx = tuple(int(i) for i in indices)
    for i in idx:
        if not 0 <= i < n_levels:
            raise ValueError(f"level {i} out of range for N={n_levels}")
    return idx


def fourth_moment_exact(n_levels: int, indices: Sequence[int]) -> Fraction:
    """Exact E[conj(xi_j') xi_i' conj(xi_i) xi_j] for ``indices = (j', i', i, j)``."""
    jp, ip, i, j = _check_indices(n_levels, indices)
    base = Fraction(1, n_levels * (n_levels + 1))
    if jp == ip == i == j:
        return 2 * base
    if (ip == i and jp == j) or (ip == jp and i == j):
        return base
    return Fraction(0)


def _moment_chunk_sums(n_levels, indices, count, rng, chunk_size):
    jp, ip, i, j = indices
    total = 0j
    total_sq = 0.0
    done = 0
    while done < count:
        size = min(chunk_size, count - done)
        xi = sample_states(n_levels, size, rng)
        x = np.conj(xi[:, jp]) * xi[:, ip] * np.conj(xi[:, i]) * xi[:, j]
        total += x.sum()
        total_sq += float(np.sum(np.abs(x) ** 2))
        done += size
    return total, total_sq


def estimate_fourth_moment(
    n_levels: int,
    indices: Sequence[int],
    samples: int,
    rng=None,
    *,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> MomentEstimate:
    """Monte Carlo estimate of a fourth moment with its standard error.

    With ``workers > 1`` the samples are split evenly over independent streams
    spawned from ``rng`` and summed in worker order.
    """
    idx = _check_indices(n_levels, indices)
    if samples < 2:
        raise ValueError("need at least two samples for a standard error")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1:
        parts = [_moment_chunk_sums(n_levels, idx, samples, make_rng(rng), chunk_size)]
    else:
        streams = spawn_rngs(rng, workers)
        counts = [samples // workers + (w < samples % workers) for w in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda w: _moment_chunk_sums(n_levels, idx, counts[w], streams[w], chunk_size),
                    range(workers),
                )
            )
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / samples
    var = max(total_sq - samples * abs(mean) ** 2, 0.0) / (samples - 1)
    return MomentEstimate(complex(mean), math.sqrt(var / samples), samples)
