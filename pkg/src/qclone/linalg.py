"""Small dense complex linear algebra and the seeding contract.

Matrices are plain ``numpy`` arrays.  ``hermitian_eigen`` is a cyclic Jacobi
solver; it is deterministic (fixed sweep order, no threaded reductions) and
meant for the small dense matrices that show up here.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-13
MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, sweeps: int, off_norm: float):
        super().__init__(message)
        self.sweeps = sweeps
        self.off_norm = off_norm


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul expects two 2-d arrays")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError("adjoint expects a 2-d array")
    return a.conj().T


def hermitian_eigen(a: np.ndarray, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS):
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array_like
        Hermitian input (checked to ``10 * tol`` relative to its norm).
    tol : float
        Convergence threshold on the off-diagonal Frobenius norm, relative to
        the Frobenius norm of ``a``.

    Returns
    -------
    values : (n,) float array, sorted descending
    vectors : (n, n) complex array, column ``k`` pairs with ``values[k]``
    """
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    norm = np.linalg.norm(a)
    scale = max(norm, 1.0)
    if np.max(np.abs(a - a.conj().T), initial=0.0) > 10 * tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    if n <= 1 or norm == 0.0:
        return np.real(np.diag(a)).copy(), v

    target = tol * norm
    # Entries below this are skipped; n^2 of them still sum under target.
    skip = target / n
    sweeps = 0
    off = _off_norm(a)
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge after {sweeps} sweeps (off-norm {off:.3e})", sweeps, off
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= skip:
                    continue
                _rotate(a, v, p, q, apq, r)
        sweeps += 1
        off = _off_norm(a)

    values = np.real(np.diag(a)).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


def _off_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int, apq: complex, r: float) -> None:
    # Phase on column q makes a[p, q] real, then a real rotation zeroes it.
    phase = apq / r
    app = a[p, p].real
    aqq = a[q, q].real
    theta = (aqq - app) / (2.0 * r)
    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    pc = np.conj(phase)
    g = np.array([[c, s], [-s * pc, c * pc]])
    idx = [p, q]
    a[:, idx] = a[:, idx] @ g
    a[idx, :] = g.conj().T @ a[idx, :]
    v[:, idx] = v[:, idx] @ g
    a[p, q] = a[q, p] = 0.0
    a[p, p] = app - t * r
    a[q, q] = aqq + t * r


def make_rng(seed) -> np.random.Generator:
    """Generator from an int seed, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(seed, count: int) -> list[np.random.Generator]:
    """Independent per-worker streams; reproducible given (seed, count)."""
    if isinstance(seed, np.random.Generator):
        return list(seed.spawn(count))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(count)]


def haar_isometry(rows: int, cols: int, rng) -> np.ndarray:
    """Haar-distributed isometry (orthonormal columns) of shape (rows, cols)."""
    if cols > rows:
        raise ValueError(f"cannot embed {cols} columns into {rows} rows isometrically")
    rng = make_rng(rng)
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
