"""Verification sweeps over a grid of (N, N', M)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import machine as mc
from . import optimality as opt
from .linalg import hermitian_eigen
from .sphere import sample_states


@dataclass
class Check:
    check: str
    n: int
    nprime: int
    m: int
    deviation: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _check(name, n, nprime, m, deviation, tol) -> Check:
    deviation = float(deviation)
    return Check(name, n, nprime, m, deviation, tol, bool(deviation <= tol))


def isometry_defect(spec: mc.MachineSpec, dim_cap: int | None = None) -> float:
    u = mc.build_isometry(spec, dim_cap).matrix
    return float(np.max(np.abs(u.conj().T @ u - np.eye(spec.n_levels))))


def spectrum_deviation(n: int, m: int, dim_cap: int | None = None) -> tuple[float, float]:
    """Largest distance of any A eigenvalue, computed block by block, from the
    closed-form block spectrum; and |N lambda_max - F_max| on the full matrix."""
    a = opt.build_A(n, m, dim_cap=dim_cap).entries
    closed = opt.block_spectrum_closed_form(n, m).eigenvalues
    blocks, singletons = opt.block_arrangement(n, m)
    worst = 0.0
    for rows in blocks:
        vals, _ = hermitian_eigen(a[np.ix_(rows, rows)])
        worst = max(worst, float(np.max(np.abs(vals - closed))))
    for r in singletons:
        worst = max(worst, abs(a[r, r] - closed[-1]))
    full = opt.max_eigen_fidelity(n, m, dim_cap=dim_cap)
    return worst, abs(full.fidelity_from_lambda - float(mc.fmax_analytic(n, m)))


def grid_point_checks(
    n: int,
    m: int,
    nprime_max: int,
    tol: float,
    seed: int,
    inputs: int,
    draws: int,
    dim_cap: int | None = None,
) -> list[Check]:
    checks = []
    for nprime in range(1, min(nprime_max, m) + 1):
        spec = mc.MachineSpec(n, m, nprime)
        checks.append(_check("isometry", n, nprime, m, isometry_defect(spec, dim_cap), tol))
        norm = sum(
            mc.beta_coefficient(spec, spec.n_blanks - a[0]) ** 2
            for a in mc.enumerate_occupations(n, spec.n_blanks)
        )
        checks.append(_check("coefficient_norm", n, nprime, m, abs(norm - 1.0), tol))
        target = mc.fnm_analytic(n, nprime, m)
        checks.append(_check("fnm_exact_sum", n, nprime, m, abs(float(mc.basis_fidelity(spec) - target)), tol))
        rho = mc.single_copy_density(mc.clone_basis(spec, 0, dim_cap))
        checks.append(_check("fnm_machine", n, nprime, m, abs(rho.entries[0, 0].real - float(target)), tol))
        gap = mc.tilde_fmax(n, nprime, m) - target
        checks.append(_check("learning_inequality", n, nprime, m, max(float(gap), 0.0), 0.0))
        if n >= 2 and m > nprime >= 2:
            checks.append(_check("learning_strict", n, nprime, m, 0.0 if gap < 0 else 1.0, 0.0))

    rng = np.random.default_rng([seed, n, m])
    fmax = float(mc.fmax_analytic(n, m))
    fids = mc.fidelities_of_clones(sample_states(n, inputs, rng), m, dim_cap)
    checks.append(_check("universality_spread", n, 1, m, np.ptp(fids), tol))
    checks.append(_check("universality_value", n, 1, m, np.max(np.abs(fids - fmax)), tol))

    block_dev, lam_dev = spectrum_deviation(n, m, dim_cap)
    checks.append(_check("spectrum_blocks", n, 1, m, block_dev, tol))
    checks.append(_check("n_lambda_max", n, 1, m, lam_dev, tol))

    report = opt.lagrange_identity_check(n, m, dim_cap)
    checks.append(_check("lagrange_identity", n, 1, m, max(report.deviations().values()), tol))

    best = float(np.max(opt.random_machine_bound(n, m, draws, rng, dim_cap))) if draws else 0.0
    checks.append(_check("random_machine_bound", n, 1, m, max(best - fmax, 0.0), tol))
    return checks


def run_grid(
    n_max: int,
    m_max: int,
    nprime_max: int = 3,
    tol: float = 1e-10,
    seed: int = 0,
    inputs: int = 200,
    draws: int = 200,
    workers: int = 1,
    dim_cap: int | None = None,
) -> list[Check]:
    """All checks for 1 <= N <= n_max, 1 <= M <= m_max, in grid order."""
    points = [(n, m) for n in range(1, n_max + 1) for m in range(1, m_max + 1)]

    def run(point):
        n, m = point
        return grid_point_checks(n, m, nprime_max, tol, seed, inputs, draws, dim_cap)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(p) for p in points]
    return [c for chunk in results for c in chunk]
