import math
from fractions import Fraction

import numpy as np
import pytest

from qclone.linalg import haar_isometry
from qclone.machine import (
    DimensionCapError,
    MachineSpec,
    alpha_coefficient,
    basis_fidelity,
    beta_coefficient,
    beta_squared,
    build_isometry,
    clone_basis,
    clone_state,
    coefficient_norm,
    fidelities_of_clones,
    fidelity_of_clone,
    fmax_analytic,
    fnm_analytic,
    reduced_density,
    single_copy_density,
    tilde_fmax,
)
from qclone.sphere import PureState, sample_states
from qclone.symbasis import enumerate_occupations, occ

from ._oracles import copy_reduced_density

GRID = [(n, np_, m) for n in range(1, 5) for m in range(1, 6) for np_ in range(1, min(2, m) + 1)]


def oracle_density(out):
    n, m = out.spec.n_levels, out.spec.n_copies
    counts = [v.counts for v in enumerate_occupations(n, m)]
    return copy_reduced_density(out.to_matrix(), counts, n, m)


def test_spec_validation():
    with pytest.raises(ValueError):
        MachineSpec(2, 2, 3)
    with pytest.raises(ValueError):
        MachineSpec(0, 2)
    with pytest.raises(ValueError):
        MachineSpec(2, 0, 0)


def test_alpha_examples():
    spec = MachineSpec(2, 2)
    assert alpha_coefficient(spec, 0, occ(1, 0)) == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
    assert alpha_coefficient(spec, 0, occ(0, 1)) == pytest.approx(math.sqrt(1 / 3), abs=1e-15)
    for n in range(1, 5):
        assert alpha_coefficient(MachineSpec(n, 1), 0, occ(*[0] * n)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        alpha_coefficient(spec, 0, occ(1, 1))


def test_beta_examples():
    spec = MachineSpec(2, 3, 2)
    assert beta_coefficient(spec, 0) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert beta_coefficient(spec, 1) == pytest.approx(0.5, abs=1e-15)
    assert beta_squared(spec, 0) + beta_squared(spec, 1) == 1
    assert beta_coefficient(MachineSpec(3, 2, 2), 0) == 1.0
    with pytest.raises(ValueError):
        beta_coefficient(spec, 2)


@pytest.mark.parametrize("n, nprime, m", GRID)
def test_alpha_agrees_with_beta(n, nprime, m):
    if nprime != 1:
        return
    spec = MachineSpec(n, m)
    for a in enumerate_occupations(n, m - 1):
        for j in range(n):
            assert alpha_coefficient(spec, j, a) == pytest.approx(beta_coefficient(spec, (m - 1) - a[j]), abs=1e-15)


def test_isometry_n2_m2_structure():
    iso = build_isometry(MachineSpec(2, 2))
    cb, ab = iso.copy_basis, iso.ancilla_basis
    col = iso.as_tensor()[:, :, 0]
    expected = np.zeros_like(col)
    expected[cb.index((2, 0)), ab.index((1, 0))] = math.sqrt(2 / 3)
    expected[cb.index((1, 1)), ab.index((0, 1))] = math.sqrt(1 / 3)
    assert np.abs(col - expected).max() < 1e-15


def test_isometry_n_inputs_equal_copies_is_embedding():
    iso = build_isometry(MachineSpec(3, 2, 2))
    assert len(iso.ancilla_basis) == 1
    for j in range(3):
        col = iso.column(j)
        assert np.count_nonzero(col) == 1
        target = [0, 0, 0]
        target[j] = 2
        assert col[iso.copy_basis.index(target)] == 1.0


@pytest.mark.parametrize("n, nprime, m", GRID)
def test_isometry_contract(n, nprime, m):
    u = build_isometry(MachineSpec(n, m, nprime)).matrix
    assert np.abs(u.conj().T @ u - np.eye(n)).max() < 1e-12


@pytest.mark.parametrize("n, nprime, m", GRID)
def test_coefficient_normalization(n, nprime, m):
    assert coefficient_norm(MachineSpec(n, m, nprime)) == 1


def test_isometry_cap():
    with pytest.raises(DimensionCapError):
        build_isometry(MachineSpec(4, 5), dim_cap=100)


def test_isometry_cap_from_environment(monkeypatch):
    monkeypatch.setenv("QCLONE_DIM_CAP", "10")
    with pytest.raises(DimensionCapError):
        build_isometry(MachineSpec(3, 3))


def test_clone_basis_input_matches_column():
    iso = build_isometry(MachineSpec(3, 3))
    out = clone_state(PureState.basis(3, 1), 3)
    assert np.abs(out.to_matrix().reshape(-1) - iso.column(1)).max() == 0


def test_clone_superposition_norm_and_fidelity():
    psi = PureState.normalized([1, 1])
    out = clone_state(psi, 2)
    assert abs(out.norm_squared() - 1) < 1e-12
    assert fidelity_of_clone(psi, 2) == pytest.approx(5 / 6, abs=1e-12)


def test_clone_single_level():
    out = clone_state(PureState(np.array([1.0])), 4)
    assert list(out.branches.values()) == [1.0]


def test_clone_rejects_unnormalized():
    with pytest.raises(ValueError):
        clone_state(np.array([1.0, 1.0]), 2)
    out = clone_state(np.array([1.0, 1.0]), 2, renormalize=True)
    assert abs(out.norm_squared() - 1) < 1e-12


def test_density_basis_input():
    rho = single_copy_density(clone_state(PureState.basis(2, 0), 2))
    assert np.abs(rho.entries - np.diag([5 / 6, 1 / 6])).max() < 1e-12


def test_density_single_copy_is_input():
    psi = PureState(sample_states(3, 1, 17)[0])
    rho = single_copy_density(clone_state(psi, 1))
    assert np.abs(rho.entries - np.outer(psi.amplitudes, psi.amplitudes.conj())).max() < 1e-15


@pytest.mark.parametrize("n, m", [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)])
def test_density_matches_tensor_oracle(n, m):
    for psi in sample_states(n, 5, 1000 + 10 * n + m):
        out = clone_state(PureState(psi), m)
        rho = single_copy_density(out)
        assert np.abs(rho.entries - oracle_density(out)).max() < 1e-12


def test_density_matches_tensor_oracle_two_inputs():
    out = clone_basis(MachineSpec(2, 3, 2), 0)
    rho = single_copy_density(out)
    assert np.abs(rho.entries - oracle_density(out)).max() < 1e-12
    assert rho.entries[0, 0].real == pytest.approx(11 / 12, abs=1e-12)


@pytest.mark.parametrize("n, m, expected", [(2, 2, 5 / 6), (3, 2, 3 / 4), (3, 1, 1.0), (2, 1, 1.0)])
def test_fidelity_is_universal(n, m, expected):
    states = sample_states(n, 20, 7 * n + m)
    for psi in states[:5]:
        assert fidelity_of_clone(psi, m) == pytest.approx(expected, abs=1e-10)
    assert np.abs(fidelities_of_clones(states, m) - expected).max() < 1e-10


def test_batch_matches_single():
    states = sample_states(3, 4, 2)
    batch = fidelities_of_clones(states, 3)
    single = [fidelity_of_clone(s, 3) for s in states]
    assert np.abs(batch - single).max() < 1e-13


@pytest.mark.parametrize(
    "n, nprime, m, expected",
    [(2, 1, 2, Fraction(5, 6)), (2, 2, 3, Fraction(11, 12)), (3, 3, 3, Fraction(1)), (4, 2, 2, Fraction(1))],
)
def test_basis_fidelity(n, nprime, m, expected):
    assert basis_fidelity(MachineSpec(n, m, nprime)) == expected


def test_fmax_values():
    assert fmax_analytic(2, 2) == Fraction(5, 6)
    assert fmax_analytic(2, 3) == Fraction(7, 9)
    for n in range(1, 7):
        assert fmax_analytic(n, 1) == 1
    for m in range(1, 8):
        assert fmax_analytic(2, m) == Fraction(2 * m + 1, 3 * m)


def test_fnm_values():
    assert fnm_analytic(2, 1, 2) == Fraction(5, 6)
    assert fnm_analytic(2, 2, 3) == Fraction(11, 12)
    for n in range(1, 5):
        for m in range(1, 5):
            assert fnm_analytic(n, m, m) == 1
            assert fnm_analytic(n, 1, m) == fmax_analytic(n, m)


def test_tilde_values():
    assert tilde_fmax(2, 2, 3) == Fraction(3, 5)
    assert tilde_fmax(2, 3, 4) == Fraction(5, 12)
    for n in range(1, 5):
        assert tilde_fmax(n, 1, 4) == fmax_analytic(n, 4)


@pytest.mark.parametrize("n", range(1, 5))
def test_consistency_of_fidelities(n):
    for m in range(1, 6):
        exact = basis_fidelity(MachineSpec(n, m))
        assert exact == fmax_analytic(n, m)
        psi = sample_states(n, 1, 50 + m)[0]
        assert abs(fidelity_of_clone(psi, m) - float(exact)) < 1e-10


def test_learning_inequality():
    for n in range(1, 5):
        for nprime in range(1, 4):
            for m in range(nprime, 7):
                assert tilde_fmax(n, nprime, m) <= fnm_analytic(n, nprime, m)


def test_fmax_decreases_towards_one_over_m():
    for m in range(2, 8):
        values = [fmax_analytic(n, m) for n in range(1, 40)]
        assert all(a > b for a, b in zip(values, values[1:]))
        for n in range(2, 40):
            assert abs(float(fmax_analytic(n, m)) - 1 / m) < 2 / n


@pytest.mark.parametrize("n, nprime, m", [(2, 2, 3), (3, 2, 3), (2, 3, 4)])
def test_random_many_input_machines_stay_below(n, nprime, m):
    # Haar-random isometries from the N'-copy symmetric space; the level-averaged
    # basis-input fidelity is compared with the closed form.
    spec = MachineSpec(n, m, nprime)
    d_in = len(enumerate_occupations(n, nprime))
    d_copy = len(enumerate_occupations(n, m))
    d_anc = len(enumerate_occupations(n, m - nprime))
    inputs = enumerate_occupations(n, nprime)
    cols = [inputs.index(tuple(nprime if i == j else 0 for i in range(n))) for j in range(n)]
    rng = np.random.default_rng(90 + n + m)
    bound = float(fnm_analytic(n, nprime, m))
    for _ in range(200):
        u = haar_isometry(d_copy * d_anc, d_in, rng)
        fids = [
            reduced_density(u[:, c].reshape(d_copy, d_anc), n, m)[j, j].real for j, c in enumerate(cols)
        ]
        assert np.mean(fids) <= bound + 1e-9
    assert basis_fidelity(spec) == fnm_analytic(n, nprime, m)
