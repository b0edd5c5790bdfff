"""Optimal universal cloning machines for N-level systems.

The N'->M machine sends the input |N' j> (N' copies of level j) to

    sum_a  beta(m) |a + N' e_j>  (x)  |a>

where ``a`` runs over occupations of the M-N' ancilla systems, the copy
register holds ``a + N' e_j`` and ``m = M - n_j = (M - N') - a_j`` is the
number of copies in the wrong level.  Labelling the ancilla by its full
occupation (rather than by the copy occupation with slot j dropped) is what
keeps columns for different j orthogonal and makes the 1->M machine
covariant, hence universal on superposed inputs.

Closed-form fidelities are exact ``Fraction`` values; anything that touches a
state vector is floating point.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .sphere import PureState
from .symbasis import OccupationVector, SymmetricBasis, enumerate_occupations, transition_operators

DIM_CAP_ENV = "QCLONE_DIM_CAP"
DEFAULT_DIM_CAP = 4096


class DimensionCapError(ValueError):
    pass


def default_dim_cap() -> int:
    raw = os.environ.get(DIM_CAP_ENV)
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{DIM_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError(f"{DIM_CAP_ENV} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class MachineSpec:
    n_levels: int
    n_copies: int
    n_inputs: int = 1

    def __post_init__(self):
        if self.n_levels < 1:
            raise ValueError(f"n_levels must be >= 1, got {self.n_levels}")
        if self.n_inputs < 1:
            raise ValueError(f"n_inputs must be >= 1, got {self.n_inputs}")
        if self.n_copies < self.n_inputs:
            raise ValueError(f"need n_copies >= n_inputs, got M={self.n_copies} < N'={self.n_inputs}")

    @property
    def n_blanks(self) -> int:
        return self.n_copies - self.n_inputs


@dataclass(frozen=True)
class CloningIsometry:
    """Rows are indexed ``copy_index * len(ancilla_basis) + ancilla_index``."""

    spec: MachineSpec
    copy_basis: SymmetricBasis
    ancilla_basis: SymmetricBasis
    matrix: np.ndarray

    def column(self, level: int) -> np.ndarray:
        return self.matrix[:, level]

    def as_tensor(self) -> np.ndarray:
        """View with shape (dim_copy, dim_ancilla, N)."""
        return self.matrix.reshape(len(self.copy_basis), len(self.ancilla_basis), self.spec.n_levels)


@dataclass(frozen=True)
class CloneOutput:
    spec: MachineSpec
    branches: dict  # (copy index, ancilla index) -> complex amplitude

    def to_matrix(self) -> np.ndarray:
        """Amplitudes as a dense (dim_copy, dim_ancilla) array."""
        n, m, np_ = self.spec.n_levels, self.spec.n_copies, self.spec.n_inputs
        out = np.zeros((len(enumerate_occupations(n, m)), len(enumerate_occupations(n, m - np_))), dtype=complex)
        for (c, a), amp in self.branches.items():
            out[c, a] = amp
        return out

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.branches.values()))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace is {np.trace(rho)}")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, psi: PureState) -> float:
        v = psi.amplitudes
        return float(np.real(np.vdot(v, self.entries @ v)))


# -- coefficients -----------------------------------------------------------


def beta_squared(spec: MachineSpec, m: int) -> Fraction:
    """Exact squared branch weight for ``m`` wrong copies."""
    n, np_, mm = spec.n_levels, spec.n_inputs, spec.n_copies
    if not 0 <= m <= mm - np_:
        raise ValueError(f"error count m={m} outside [0, {mm - np_}]")
    f = math.factorial
    return Fraction(f(mm - m), f(mm - np_ - m)) * Fraction(f(np_ + n - 1) * f(mm - np_), f(np_) * f(mm + n - 1))


def beta_coefficient(spec: MachineSpec, m: int) -> float:
    return math.sqrt(beta_squared(spec, m))


def alpha_coefficient(spec: MachineSpec, level: int, ancilla_occ: OccupationVector) -> float:
    """Branch amplitude of the 1->M machine cloning ``level``.

    The number of correct copies M - m_i is the ancilla count in ``level``
    plus the input itself.
    """
    if spec.n_inputs != 1:
        raise ValueError("alpha coefficients belong to the 1->M machine")
    if ancilla_occ.n_levels != spec.n_levels:
        raise ValueError("ancilla occupation has the wrong number of levels")
    if ancilla_occ.total != spec.n_copies - 1:
        raise ValueError(f"ancilla occupation must sum to M-1={spec.n_copies - 1}, got {ancilla_occ.total}")
    correct = ancilla_occ[level] + 1
    n, mm = spec.n_levels, spec.n_copies
    return math.sqrt(correct) * math.sqrt(
        Fraction(math.factorial(n) * math.factorial(mm - 1), math.factorial(mm + n - 1))
    )


# -- machines ---------------------------------------------------------------


@lru_cache(maxsize=128)
def _build(spec: MachineSpec) -> CloningIsometry:
    n = spec.n_levels
    copy_basis = enumerate_occupations(n, spec.n_copies)
    anc_basis = enumerate_occupations(n, spec.n_blanks)
    d_anc = len(anc_basis)
    weights = [beta_coefficient(spec, m) for m in range(spec.n_blanks + 1)]
    matrix = np.zeros((len(copy_basis) * d_anc, n), dtype=complex)
    for a_idx, a in enumerate(anc_basis):
        for j in range(n):
            copy = a.shifted(j, spec.n_inputs)
            m = spec.n_blanks - a[j]
            matrix[copy_basis.index(copy) * d_anc + a_idx, j] = weights[m]
    matrix.flags.writeable = False
    return CloningIsometry(spec, copy_basis, anc_basis, matrix)


def isometry_rows(spec: MachineSpec) -> int:
    return len(enumerate_occupations(spec.n_levels, spec.n_copies)) * len(
        enumerate_occupations(spec.n_levels, spec.n_blanks)
    )


def build_isometry(spec: MachineSpec, dim_cap: int | None = None) -> CloningIsometry:
    """Explicit matrix of the optimal N'->M machine (one column per level).

    Raises DimensionCapError when dim(copy) * dim(ancilla) exceeds
    ``dim_cap`` (default from the QCLONE_DIM_CAP environment variable, else
    4096).
    """
    cap = default_dim_cap() if dim_cap is None else dim_cap
    rows = isometry_rows(spec)
    if rows > cap:
        raise DimensionCapError(f"isometry needs {rows} rows, cap is {cap}")
    return _build(spec)


def apply_isometry(iso: CloningIsometry, coefficients) -> CloneOutput:
    coeffs = np.asarray(coefficients, dtype=complex).reshape(-1)
    if coeffs.size != iso.spec.n_levels:
        raise ValueError(f"expected {iso.spec.n_levels} input coefficients, got {coeffs.size}")
    vec = iso.matrix @ coeffs
    d_anc = len(iso.ancilla_basis)
    branches = {divmod(int(r), d_anc): complex(vec[r]) for r in np.flatnonzero(vec)}
    return CloneOutput(iso.spec, branches)


def clone_state(
    psi: PureState | np.ndarray,
    m_copies: int,
    *,
    renormalize: bool = False,
    dim_cap: int | None = None,
) -> CloneOutput:
    """Run the 1->M machine on an arbitrary pure input."""
    if not isinstance(psi, PureState):
        psi = PureState.normalized(psi) if renormalize else PureState(psi)
    iso = build_isometry(MachineSpec(psi.n_levels, m_copies), dim_cap)
    return apply_isometry(iso, psi.amplitudes)


def clone_basis(spec: MachineSpec, level: int, dim_cap: int | None = None) -> CloneOutput:
    """Output for the basis input |N' level>."""
    iso = build_isometry(spec, dim_cap)
    coeffs = np.zeros(spec.n_levels, dtype=complex)
    coeffs[level] = 1.0
    return apply_isometry(iso, coeffs)


def reduced_density(amplitudes: np.ndarray, n_levels: int, n_copies: int) -> np.ndarray:
    """One-copy reduced state of a (dim_copy, dim_ancilla) amplitude array.

    rho[k, l] = <Psi| (|l><k| (x) I) |Psi>, using orthonormality of ancilla
    basis states to pair only branches with equal ancilla index.
    """
    ops = transition_operators(n_levels, n_copies)
    gram = amplitudes @ amplitudes.conj().T  # sum over ancilla: X X^dagger
    # rho[k, l] = sum_{a,b} conj(X[a,c]) T[l,k][a,b] X[b,c] = tr(T[l,k] X X^dagger)
    return np.einsum("lkab,ba->kl", ops, gram)


def single_copy_density(out: CloneOutput) -> DensityMatrix:
    rho = reduced_density(out.to_matrix(), out.spec.n_levels, out.spec.n_copies)
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def fidelity_of_clone(
    psi: PureState | np.ndarray,
    m_copies: int,
    *,
    renormalize: bool = False,
    dim_cap: int | None = None,
) -> float:
    """<psi| rho_1 |psi> for one output copy of the 1->M machine."""
    if not isinstance(psi, PureState):
        psi = PureState.normalized(psi) if renormalize else PureState(psi)
    out = clone_state(psi, m_copies, dim_cap=dim_cap)
    return single_copy_density(out).expectation(psi)


def fidelities_of_clones(states: np.ndarray, m_copies: int, dim_cap: int | None = None) -> np.ndarray:
    """Batch version of :func:`fidelity_of_clone` over the rows of ``states``."""
    states = np.asarray(states, dtype=complex)
    n = states.shape[1]
    iso = build_isometry(MachineSpec(n, m_copies), dim_cap)
    tensor = iso.as_tensor()
    ops = transition_operators(n, m_copies)
    out = np.empty(states.shape[0])
    for s, psi in enumerate(states):
        x = tensor @ psi
        # <psi|rho|psi> = <Psi| (|psi><psi| (x) I) |Psi>
        proj = np.einsum("k,l,klab->ab", psi, psi.conj(), ops)
        out[s] = np.real(np.vdot(x, proj @ x))
    return out


def basis_fidelity(spec: MachineSpec) -> Fraction:
    """Exact single-copy fidelity for basis inputs: sum over a of (n_j/M) beta^2."""
    n, mm = spec.n_levels, spec.n_copies
    total = Fraction(0)
    for a in enumerate_occupations(n, spec.n_blanks):
        m = spec.n_blanks - a[0]
        total += Fraction(mm - m, mm) * beta_squared(spec, m)
    return total


def coefficient_norm(spec: MachineSpec) -> Fraction:
    """Exact sum of beta^2 over ancilla occupations (equals 1)."""
    return sum(
        (beta_squared(spec, spec.n_blanks - a[0]) for a in enumerate_occupations(spec.n_levels, spec.n_blanks)),
        Fraction(0),
    )


# -- closed forms -----------------------------------------------------------


def fmax_analytic(n_levels: int, m_copies: int) -> Fraction:
    """Optimal 1->M fidelity (2M+N-1)/(M(N+1))."""
    if n_levels < 1 or m_copies < 1:
        raise ValueError("need N >= 1 and M >= 1")
    return Fraction(2 * m_copies + n_levels - 1, m_copies * (n_levels + 1))


def fnm_analytic(n_levels: int, n_inputs: int, m_copies: int) -> Fraction:
    """N'->M fidelity (M + N'(M+N-1)) / (M(N+N'))."""
    MachineSpec(n_levels, m_copies, n_inputs)
    return Fraction(m_copies + n_inputs * (m_copies + n_levels - 1), m_copies * (n_levels + n_inputs))


def tilde_fmax(n_levels: int, n_inputs: int, m_copies: int) -> Fraction:
    """1->M optimum for a single N^N'-level system holding the N' inputs."""
    MachineSpec(n_levels, m_copies, n_inputs)
    return fmax_analytic(n_levels**n_inputs, m_copies)
