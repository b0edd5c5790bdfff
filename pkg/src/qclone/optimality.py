"""Numerical reconstruction of the optimality argument for 1->M cloning.

A machine is described by vectors R_{j,n} in the ancilla space, one for each
input level j and copy occupation n.  Stacking them as rows gives a matrix W
with rows indexed by (j, n) in j-major order, and the fidelity averaged over
all pure inputs is the quadratic form

    F = trace(W^dagger A W),
    A[(j',n'), (j,n)] = sum_{i,i'} E[conj(xi_j') xi_i' conj(xi_i) xi_j] <n'|(|i'><i| (x) I)|n>.

Unitarity forces sum_n <R_{j',n}|R_{j,n}> = delta_{j'j}; relaxing that to its
trace, ||W||_F^2 = N, bounds F by N * lambda_max(A).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import hermitian_eigen, haar_isometry, make_rng
from .machine import (
    DimensionCapError,
    MachineSpec,
    build_isometry,
    default_dim_cap,
    fmax_analytic,
)
from .sphere import fourth_moment_exact, sample_states
from .symbasis import enumerate_occupations, symmetric_dimension, transition_operators


@dataclass(frozen=True)
class MomentMatrix:
    n_levels: int
    n_copies: int
    index: tuple  # (level, OccupationVector) per row, j-major
    entries: np.ndarray
    standard_error: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class BlockMatrix:
    base: tuple[int, ...]  # n_2, ..., n_N
    entries: np.ndarray


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    lambda_max: float
    fidelity_from_lambda: float
    fidelity_exact: Fraction | None = None


def _check_nm(n_levels: int, m_copies: int) -> None:
    if n_levels < 1:
        raise ValueError(f"n_levels must be >= 1, got {n_levels}")
    if m_copies < 1:
        raise ValueError(f"m_copies must be >= 1, got {m_copies}")


def moment_matrix_size(n_levels: int, m_copies: int) -> int:
    return n_levels * symmetric_dimension(n_levels, m_copies)


def _index(n_levels: int, m_copies: int) -> tuple:
    basis = enumerate_occupations(n_levels, m_copies)
    return tuple((j, n) for j in range(n_levels) for n in basis)


def moment_tensor_exact(n_levels: int) -> np.ndarray:
    """mom[j', i', i, j] = E[conj(xi_j') xi_i' conj(xi_i) xi_j] as floats."""
    n = n_levels
    mom = np.zeros((n, n, n, n))
    for jp in range(n):
        for ip in range(n):
            for i in range(n):
                for j in range(n):
                    mom[jp, ip, i, j] = float(fourth_moment_exact(n, (jp, ip, i, j)))
    return mom


def _assemble(mom: np.ndarray, ops: np.ndarray) -> np.ndarray:
    # A[(j',a),(j,b)] = sum_{i',i} mom[j',i',i,j] ops[i',i][a,b]
    n, dim = ops.shape[0], ops.shape[2]
    a = np.einsum("pqrs,qrab->pasb", mom, ops)
    return a.reshape(n * dim, n * dim)


def build_A(
    n_levels: int,
    m_copies: int,
    mode: str = "analytic",
    *,
    samples: int = 100_000,
    rng=None,
    dim_cap: int | None = None,
    chunk_size: int = 2048,
) -> MomentMatrix:
    """Moment matrix of the fidelity functional.

    ``mode="analytic"`` uses the exact fourth moments; ``mode="montecarlo"``
    averages the per-sample matrix conj(xi_j') xi_j <n'|(|xi><xi| (x) I)|n>
    over ``samples`` invariant-measure draws and records entrywise standard
    errors.
    """
    _check_nm(n_levels, m_copies)
    cap = default_dim_cap() if dim_cap is None else dim_cap
    size = moment_matrix_size(n_levels, m_copies)
    if size > cap:
        raise DimensionCapError(f"moment matrix side {size} exceeds cap {cap}")
    ops = transition_operators(n_levels, m_copies)
    index = _index(n_levels, m_copies)
    if mode == "analytic":
        return MomentMatrix(n_levels, m_copies, index, _assemble(moment_tensor_exact(n_levels), ops))
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    if samples < 2:
        raise ValueError("montecarlo mode needs at least two samples")
    rng = make_rng(rng)
    # keep the per-sample stack near 64 MiB
    chunk_size = max(1, min(chunk_size, (1 << 22) // (size * size)))
    total = np.zeros((size, size), dtype=complex)
    total_sq = np.zeros((size, size))
    done = 0
    while done < samples:
        count = min(chunk_size, samples - done)
        xi = sample_states(n_levels, count, rng)
        # projector |xi><xi| (x) I on the copy space, per sample
        proj = np.einsum("sk,sl,klab->sab", xi, xi.conj(), ops)
        per = np.einsum("sp,sq,sab->spaqb", xi.conj(), xi, proj).reshape(count, size, size)
        total += per.sum(axis=0)
        total_sq += np.sum(np.abs(per) ** 2, axis=0)
        done += count
    mean = total / samples
    var = np.maximum(total_sq - samples * np.abs(mean) ** 2, 0.0) / (samples - 1)
    return MomentMatrix(n_levels, m_copies, index, mean, np.sqrt(var / samples))


def closed_form_A(n_levels: int, m_copies: int) -> np.ndarray:
    """Entrywise closed form: [(M + n_j) delta + sqrt(n_j (n_j' + 1))] / (M N (N+1)).

    The off-diagonal term links (j, n) to (j', n - e_j + e_j') for j != j'.
    """
    _check_nm(n_levels, m_copies)
    basis = enumerate_occupations(n_levels, m_copies)
    dim = len(basis)
    scale = m_copies * n_levels * (n_levels + 1)
    a = np.zeros((n_levels * dim, n_levels * dim))
    for b, n in enumerate(basis):
        for j in range(n_levels):
            a[j * dim + b, j * dim + b] = (m_copies + n[j]) / scale
            if n[j] == 0:
                continue
            for jp in range(n_levels):
                if jp == j:
                    continue
                target = n.shifted(j, -1).shifted(jp, +1)
                a[jp * dim + basis.index(target), j * dim + b] = np.sqrt(n[j] * (n[jp] + 1)) / scale
    return a


def block_arrangement(n_levels: int, m_copies: int) -> tuple[list[list[int]], list[int]]:
    """Row permutation that exposes the block-diagonal structure of A.

    Each block collects (j, a + e_j) for j = 0..N-1 with ``a`` an (M-1)-copy
    occupation; rows with n_j = 0 are decoupled 1x1 blocks.  Returns
    (blocks, singletons) as lists of row indices.
    """
    _check_nm(n_levels, m_copies)
    basis = enumerate_occupations(n_levels, m_copies)
    dim = len(basis)
    blocks = []
    for a in enumerate_occupations(n_levels, m_copies - 1):
        blocks.append([j * dim + basis.index(a.shifted(j, 1)) for j in range(n_levels)])
    singletons = [j * dim + b for j in range(n_levels) for b, n in enumerate(basis) if n[j] == 0]
    return blocks, singletons


def block_of_A(n_levels: int, m_copies: int, base) -> BlockMatrix:
    """N x N block for base occupations (n_2, ..., n_N), with n_1 = M - sum(base).

    Entries follow the displayed layout: diagonal (M + n_1, M + n_2 + 1, ...,
    M + n_N + 1), off-diagonal sqrt(u_r u_s) with u = (n_1, n_2 + 1, ..., n_N + 1),
    all divided by M N (N+1).
    """
    _check_nm(n_levels, m_copies)
    base = tuple(int(b) for b in base)
    if len(base) != n_levels - 1:
        raise ValueError(f"expected {n_levels - 1} base parameters, got {len(base)}")
    if any(b < 0 for b in base) or sum(base) > m_copies:
        raise ValueError(f"invalid base {base} for M={m_copies}")
    u = np.array([m_copies - sum(base)] + [b + 1 for b in base], dtype=float)
    b = np.sqrt(np.outer(u, u))
    np.fill_diagonal(b, m_copies + u)
    return BlockMatrix(base, b / (m_copies * n_levels * (n_levels + 1)))


def block_determinant_closed_form(n_levels: int, m_copies: int, lam_prime: float) -> float:
    """(M - l')^{N-1} (l' - 2M - N + 1) / (M N (N+1))."""
    m, n = m_copies, n_levels
    return (m - lam_prime) ** (n - 1) * (lam_prime - 2 * m - n + 1) / (m * n * (n + 1))


def block_spectrum_closed_form(n_levels: int, m_copies: int) -> SpectrumReport:
    """Block eigenvalues: M (N-1 times) and 2M+N-1, over M N (N+1)."""
    _check_nm(n_levels, m_copies)
    m, n = m_copies, n_levels
    scale = m * n * (n + 1)
    lam_max = Fraction(2 * m + n - 1, scale)
    values = np.array([float(lam_max)] + [m / scale] * (n - 1))
    return SpectrumReport(values, float(lam_max), float(n * lam_max), n * lam_max)


def max_eigen_fidelity(n_levels: int, m_copies: int, dim_cap: int | None = None, tol: float = 1e-13) -> SpectrumReport:
    """N * lambda_max of the analytic moment matrix, by Jacobi eigendecomposition."""
    a = build_A(n_levels, m_copies, dim_cap=dim_cap).entries
    values, _ = hermitian_eigen(a, tol=tol)
    lam = float(values[0])
    return SpectrumReport(values, lam, n_levels * lam)


def machine_rows(iso_matrix: np.ndarray, n_levels: int, m_copies: int) -> np.ndarray:
    """Rearrange an isometry (rows: copy x ancilla, cols: level) into W."""
    dim = symmetric_dimension(n_levels, m_copies)
    d_anc = iso_matrix.shape[0] // dim
    if dim * d_anc != iso_matrix.shape[0] or iso_matrix.shape[1] != n_levels:
        raise ValueError(f"isometry shape {iso_matrix.shape} incompatible with N={n_levels}, M={m_copies}")
    t = iso_matrix.reshape(dim, d_anc, n_levels)
    return t.transpose(2, 0, 1).reshape(n_levels * dim, d_anc)


def average_fidelity(w: np.ndarray, a: np.ndarray) -> float:
    """trace(W^dagger A W)."""
    return float(np.real(np.trace(w.conj().T @ a @ w)))


def unitarity_defect(w: np.ndarray, n_levels: int) -> float:
    """max |sum_n <R_{j',n}|R_{j,n}> - delta_{j'j}|."""
    dim = w.shape[0] // n_levels
    blocks = w.reshape(n_levels, dim, -1)
    gram = np.einsum("pnc,qnc->pq", blocks.conj(), blocks)
    return float(np.max(np.abs(gram - np.eye(n_levels))))


@dataclass(frozen=True)
class LagrangeReport:
    lambda_max: float
    n_lambda: float
    eigen_machine_fidelity: float
    eigen_machine_unitarity_defect: float
    explicit_machine_fidelity: float
    explicit_machine_unitarity_defect: float
    fmax: Fraction

    def deviations(self) -> dict:
        f = float(self.fmax)
        return {
            "eigen_machine_vs_n_lambda": abs(self.eigen_machine_fidelity - self.n_lambda),
            "explicit_machine_vs_n_lambda": abs(self.explicit_machine_fidelity - self.n_lambda),
            "n_lambda_vs_fmax": abs(self.n_lambda - f),
        }


def lagrange_identity_check(n_levels: int, m_copies: int, dim_cap: int | None = None, tol: float = 1e-13) -> LagrangeReport:
    """Check F = N lambda_max on the top eigenspace and on the explicit machine.

    The eigen-built machine spreads ||W||_F^2 = N evenly over an orthonormal
    basis of the top eigenspace; it satisfies the trace-relaxed constraint by
    construction, and its defect against the full constraint is reported.
    """
    a = build_A(n_levels, m_copies, dim_cap=dim_cap).entries
    values, vectors = hermitian_eigen(a, tol=tol)
    lam = float(values[0])
    gap_tol = 1e-8 * max(abs(lam), 1.0)
    top = vectors[:, np.abs(values - lam) <= gap_tol]
    w_eig = np.sqrt(n_levels / top.shape[1]) * top
    iso = build_isometry(MachineSpec(n_levels, m_copies), dim_cap)
    w_opt = machine_rows(iso.matrix, n_levels, m_copies)
    return LagrangeReport(
        lambda_max=lam,
        n_lambda=n_levels * lam,
        eigen_machine_fidelity=average_fidelity(w_eig, a),
        eigen_machine_unitarity_defect=unitarity_defect(w_eig, n_levels),
        explicit_machine_fidelity=average_fidelity(w_opt, a),
        explicit_machine_unitarity_defect=unitarity_defect(w_opt, n_levels),
        fmax=fmax_analytic(n_levels, m_copies),
    )


def random_machine_fidelity(
    n_levels: int,
    m_copies: int,
    rng,
    *,
    a: np.ndarray | None = None,
    dim_cap: int | None = None,
) -> float:
    """Average fidelity of a Haar-random isometry into copy (x) ancilla space.

    The ancilla space has the same dimension as the optimal machine's.
    """
    if a is None:
        a = build_A(n_levels, m_copies, dim_cap=dim_cap).entries
    dim = symmetric_dimension(n_levels, m_copies)
    d_anc = symmetric_dimension(n_levels, m_copies - 1)
    u = haar_isometry(dim * d_anc, n_levels, rng)
    return average_fidelity(machine_rows(u, n_levels, m_copies), a)


def optimal_machine_fidelity(n_levels: int, m_copies: int, dim_cap: int | None = None) -> float:
    """Quadratic-form fidelity of the explicit optimal machine."""
    a = build_A(n_levels, m_copies, dim_cap=dim_cap).entries
    iso = build_isometry(MachineSpec(n_levels, m_copies), dim_cap)
    return average_fidelity(machine_rows(iso.matrix, n_levels, m_copies), a)


def random_machine_bound(n_levels: int, m_copies: int, draws: int, rng, dim_cap: int | None = None) -> np.ndarray:
    """Average fidelities of ``draws`` random machines (for bound checks)."""
    a = build_A(n_levels, m_copies, dim_cap=dim_cap).entries
    rng = make_rng(rng)
    return np.array([random_machine_fidelity(n_levels, m_copies, rng, a=a) for _ in range(draws)])
