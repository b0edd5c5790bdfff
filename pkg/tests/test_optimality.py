import math
from fractions import Fraction

import numpy as np
import pytest

from qclone.linalg import haar_isometry
from qclone.machine import DimensionCapError, MachineSpec, basis_fidelity, build_isometry, reduced_density
from qclone.optimality import (
    block_arrangement,
    block_determinant_closed_form,
    block_of_A,
    block_spectrum_closed_form,
    build_A,
    closed_form_A,
    lagrange_identity_check,
    machine_rows,
    max_eigen_fidelity,
    optimal_machine_fidelity,
    random_machine_bound,
    random_machine_fidelity,
    average_fidelity,
    unitarity_defect,
)
from qclone.sphere import sample_states
from qclone.symbasis import occ

GRID = [(n, m) for n in range(1, 5) for m in range(1, 6)]


def row(a, level, counts):
    return a.index.index((level, occ(*counts)))


def test_A_entries_n2_m2():
    a = build_A(2, 2)
    assert a.size == 6
    r = row(a, 0, (2, 0))
    assert a.entries[r, r] == pytest.approx(1 / 3, abs=1e-15)
    c = row(a, 1, (1, 1))
    assert a.entries[r, c] == pytest.approx(math.sqrt(2) / 12, abs=1e-15)
    assert a.entries[c, r] == pytest.approx(math.sqrt(2) / 12, abs=1e-15)


@pytest.mark.parametrize("n, m", GRID)
def test_A_matches_closed_form(n, m):
    a = build_A(n, m).entries
    assert np.abs(a - a.T).max() < 1e-12
    assert a.min() >= 0
    assert np.abs(a - closed_form_A(n, m)).max() < 1e-12


def test_A_from_brute_force_average():
    # A is the quadratic form of the average fidelity: for any machine W,
    # trace(W^dag A W) equals the mean over inputs of <psi|rho_1|psi>.
    n, m = 2, 2
    a = build_A(n, m).entries
    u = haar_isometry(3 * 2, n, np.random.default_rng(4))
    w = machine_rows(u, n, m)
    states = sample_states(n, 20_000, 5)
    vals = []
    for psi in states:
        x = (u @ psi).reshape(3, 2)
        rho = reduced_density(x, n, m)
        vals.append(np.real(psi.conj() @ rho @ psi))
    vals = np.array(vals)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - average_fidelity(w, a)) < 5 * se


def test_A_cap():
    with pytest.raises(DimensionCapError):
        build_A(4, 5, dim_cap=100)
    with pytest.raises(ValueError):
        build_A(2, 2, mode="symbolic")


def test_A_monte_carlo_n2_m2():
    est = build_A(2, 2, "montecarlo", samples=100_000, rng=31)
    exact = build_A(2, 2).entries
    dev = np.abs(est.entries - exact)
    assert np.all(dev <= 5 * est.standard_error + 1e-12)


@pytest.mark.parametrize("n, m", GRID)
def test_block_diagonal_structure(n, m):
    a = build_A(n, m).entries
    blocks, singletons = block_arrangement(n, m)
    order = [r for b in blocks for r in b] + singletons
    assert sorted(order) == list(range(a.shape[0]))
    mask = np.zeros_like(a, dtype=bool)
    for b in blocks:
        mask[np.ix_(b, b)] = True
    for r in singletons:
        mask[r, r] = True
    assert np.abs(a[~mask]).max(initial=0.0) <= 1e-14


def test_block_examples():
    b = block_of_A(2, 2, [0]).entries * 12
    assert np.abs(b - [[4, math.sqrt(2)], [math.sqrt(2), 3]]).max() < 1e-14
    # off-diagonal sqrt((n_2 + 1) n_1) = sqrt(2) with n_1 = 1, n_2 = 1
    b = block_of_A(2, 2, [1]).entries * 12
    assert np.abs(b - [[3, math.sqrt(2)], [math.sqrt(2), 4]]).max() < 1e-14
    # scale M N (N+1) = 24
    b = block_of_A(3, 2, [0, 0]).entries * 24
    assert np.allclose(np.diag(b), [4, 3, 3])
    with pytest.raises(ValueError):
        block_of_A(2, 2, [3])
    with pytest.raises(ValueError):
        block_of_A(3, 2, [1])


@pytest.mark.parametrize("n, m", GRID)
def test_displayed_blocks_are_blocks_of_A(n, m):
    a = build_A(n, m).entries
    blocks, _ = block_arrangement(n, m)
    index = build_A(n, m).index
    for rows in blocks:
        # displayed base: n_1 = copies in level 0 of the level-0 row
        lead = index[rows[0]][1]
        base = [lead[i] for i in range(1, n)]
        assert np.abs(a[np.ix_(rows, rows)] - block_of_A(n, m, base).entries).max() < 1e-14


@pytest.mark.parametrize("n, m", GRID)
def test_block_spectrum(n, m):
    closed = block_spectrum_closed_form(n, m)
    scale = m * n * (n + 1)
    assert np.allclose(closed.eigenvalues * scale, [2 * m + n - 1] + [m] * (n - 1))
    blocks, _ = block_arrangement(n, m)
    a = build_A(n, m).entries
    for rows in blocks:
        vals = np.linalg.eigvalsh(a[np.ix_(rows, rows)])[::-1]
        assert np.abs(vals - closed.eigenvalues).max() < 1e-10


@pytest.mark.parametrize("n, m", [(2, 2), (3, 4), (4, 5), (5, 1)])
def test_determinant_factorization(n, m):
    for lam_prime in (m, 2 * m + n - 1):
        assert abs(block_determinant_closed_form(n, m, lam_prime)) < 1e-10
    # unscaled block B' = M N (N+1) B: det(B' - x) = (M - x)^(N-1) (2M + N - 1 - x),
    # i.e. the displayed expression times -M N (N+1)
    scale = m * n * (n + 1)
    b = block_of_A(n, m, [0] * (n - 1)).entries * scale
    for x in (0.37, 1.5, 2 * m + n + 0.25):
        det = np.linalg.det(b - x * np.eye(n))
        assert det == pytest.approx(-scale * block_determinant_closed_form(n, m, x), rel=1e-9)


def test_closed_form_spectrum_examples():
    r = block_spectrum_closed_form(2, 2)
    assert r.lambda_max == pytest.approx(5 / 12)
    assert r.fidelity_exact == Fraction(5, 6)
    r = block_spectrum_closed_form(3, 1)
    assert np.allclose(r.eigenvalues * 12, [4, 1, 1])
    assert r.fidelity_from_lambda == pytest.approx(1.0)
    r = block_spectrum_closed_form(2, 5)
    assert r.lambda_max * 30 == pytest.approx(11)
    assert r.fidelity_exact == Fraction(11, 15)


@pytest.mark.parametrize("n, m, expected", [(2, 2, 5 / 6), (3, 2, 3 / 4), (4, 3, 3 / 5)])
def test_max_eigen_fidelity(n, m, expected):
    r = max_eigen_fidelity(n, m)
    assert r.fidelity_from_lambda == pytest.approx(expected, abs=1e-10)
    if (n, m) == (2, 2):
        assert r.lambda_max == pytest.approx(5 / 12, abs=1e-10)


@pytest.mark.parametrize("n, m", GRID)
def test_spectrum_against_lapack(n, m):
    a = build_A(n, m).entries
    ours = max_eigen_fidelity(n, m).eigenvalues
    assert np.abs(ours - np.linalg.eigvalsh(a)[::-1]).max() < 1e-12


@pytest.mark.parametrize("n, m, expected", [(2, 2, Fraction(5, 6)), (2, 3, Fraction(7, 9)), (3, 3, Fraction(2, 3))])
def test_lagrange_identity(n, m, expected):
    r = lagrange_identity_check(n, m)
    assert r.fmax == expected
    assert abs(r.eigen_machine_fidelity - r.n_lambda) < 1e-10
    assert abs(r.explicit_machine_fidelity - r.n_lambda) < 1e-10
    assert abs(r.n_lambda - float(expected)) < 1e-10
    assert r.explicit_machine_unitarity_defect < 1e-12


def test_optimal_machine_through_quadratic_form():
    for n in range(1, 4):
        for m in range(1, 4):
            value = optimal_machine_fidelity(n, m)
            assert abs(value - float(basis_fidelity(MachineSpec(n, m)))) < 1e-12


def test_machine_rows_layout():
    iso = build_isometry(MachineSpec(2, 2))
    w = machine_rows(iso.matrix, 2, 2)
    assert w.shape == (6, 2)
    assert unitarity_defect(w, 2) < 1e-15
    with pytest.raises(ValueError):
        machine_rows(iso.matrix[:5], 2, 2)


def test_random_machines_stay_below_bound():
    vals = random_machine_bound(2, 2, 200, 77)
    assert vals.max() <= 5 / 6 + 1e-9
    assert vals.min() >= 0
    vals = random_machine_bound(3, 2, 500, 78)
    assert vals.max() <= 3 / 4 + 1e-9


def test_random_machine_single_draw_in_range():
    v = random_machine_fidelity(2, 3, np.random.default_rng(0))
    assert 0 <= v <= 1
