"""
端到端验收：数值位移与领头阶公式的比值随 h → 0（氢原子随 R → ∞）趋于 1
"""

import math

import numpy as np
import pytest

from src.pipeline import ShiftPipeline, empirical_order, geometric_grid
from src.potentials import (
    RADIAL,
    ConfinementDomain,
    cosh_potential,
    expression_potential,
    harmonic_potential,
    normalize_to_unit_curvature,
    quartic_potential,
)
from src.shooting import ModeSpec
from src.spectra import confined_eigenvalue, fd_oracle, harmonic_eigenvalue, unconfined_eigenvalue

pytestmark = pytest.mark.slow

# 误差单调下降只在 h / R² 足够小之后成立，网格都取在这一段里
LINE_H_GRID = geometric_grid(0.1, 0.05, 3)
RADIAL_H_GRID = geometric_grid(0.08, 0.04, 3)


@pytest.fixture(scope="module")
def pipeline():
    return ShiftPipeline(show_progress=False)


def _check_convergence(reports):
    assert all(r.ok for r in reports), [r.status for r in reports]
    errors = [abs(r.ratio - 1.0) for r in reports]
    assert all(later < earlier for earlier, later in zip(errors, errors[1:])), errors
    order = empirical_order([r.h for r in reports], [r.ratio for r in reports])
    assert 0.7 <= order <= 1.5, order


@pytest.mark.parametrize("m", [0, 1, 2])
def test_harmonic_line_shift(pipeline, m):
    reports = pipeline.run_sweep(harmonic_potential(), ConfinementDomain.interval(-1.0, 1.0),
                                 ModeSpec(m, LINE_H_GRID[0]), LINE_H_GRID)
    _check_convergence(reports)


@pytest.mark.parametrize("m", [0, 1])
def test_quartic_line_shift(pipeline, m):
    reports = pipeline.run_sweep(expression_potential("x^2+x^4"), ConfinementDomain.interval(-1.0, 1.0),
                                 ModeSpec(m, LINE_H_GRID[0]), LINE_H_GRID)
    _check_convergence(reports)


@pytest.mark.parametrize("m, nu", [(0, 0.5), (1, 0.5), (0, 1.5), (1, 1.5)])
def test_radial_harmonic_shift(pipeline, m, nu):
    reports = pipeline.run_sweep(harmonic_potential(kind=RADIAL), ConfinementDomain.box(1.0),
                                 ModeSpec(m, RADIAL_H_GRID[0], nu=nu), RADIAL_H_GRID)
    _check_convergence(reports)


@pytest.mark.parametrize("n, ell, radii", [
    (1, 0, [8.0, 10.0, 12.0, 14.0]),
    (2, 0, [8.0, 10.0, 12.0, 14.0]),
    (2, 1, [20.0, 25.0, 30.0, 35.0]),
])
def test_hydrogen_shift(pipeline, n, ell, radii):
    reports = pipeline.run_hydrogen(n, ell, 2.0, 1.0, radii)
    assert all(r.ok for r in reports), [r.status for r in reports]
    errors = [abs(r.ratio - 1.0) for r in reports]
    assert errors[-1] < errors[0], errors
    if n == 1:
        assert errors[-1] <= 0.3
    if ell == 1:
        assert errors[-1] <= 0.2


def _local_order(hs, values):
    return math.log(values[-2] / values[-1]) / math.log(hs[-2] / hs[-1])


@pytest.mark.parametrize("p, nu", [
    (quartic_potential(1.0), None),
    (expression_potential("x^2+x^4", kind=RADIAL), 0.5),
])
def test_harmonic_approximation_is_second_order(p, nu):
    hs = [0.2, 0.1, 0.05]
    gaps = []
    for h in hs:
        mode = ModeSpec(0, h, nu=nu)
        gaps.append(abs(unconfined_eigenvalue(p, mode).value - harmonic_eigenvalue(p.curvature_omega, mode)))
    assert _local_order(hs, gaps) >= 1.8
    slope, _ = np.polyfit(np.log(hs), np.log(gaps), 1)
    assert slope >= 1.5


ORACLE_CORPUS = [
    (harmonic_potential(), ConfinementDomain.interval(-1.0, 1.0), None),
    (quartic_potential(1.0), ConfinementDomain.interval(-1.0, 1.5), None),
    (cosh_potential(), ConfinementDomain.interval(-1.5, 1.0), None),
    (harmonic_potential(kind=RADIAL), ConfinementDomain.box(2.0), 0.5),
]


@pytest.mark.parametrize("p, domain, nu", ORACLE_CORPUS)
def test_shooting_matches_oracle(p, domain, nu):
    base = ModeSpec(0, 0.1, nu=nu)
    levels = fd_oracle(p, domain, base, count=3)
    for level in levels:
        shot = confined_eigenvalue(p, domain, ModeSpec(level.index_m, 0.1, nu=nu))
        assert shot.value == pytest.approx(level.value, rel=1e-7)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_radial_quartic_matches_oracle(m):
    w = expression_potential("x^2+x^4", kind=RADIAL)
    domain = ConfinementDomain.box(2.0)
    level = fd_oracle(w, domain, ModeSpec(0, 0.1, nu=1.5), count=3)[m]
    shot = confined_eigenvalue(w, domain, ModeSpec(m, 0.1, nu=1.5))
    assert shot.value == pytest.approx(level.value, rel=1e-7)


@pytest.mark.parametrize("m", [0, 1])
def test_oscillator_length_scaling(m):
    R, h = 1.5, 0.3
    wide = confined_eigenvalue(harmonic_potential(), ConfinementDomain.interval(-R, R), ModeSpec(m, h))
    unit = confined_eigenvalue(harmonic_potential(), ConfinementDomain.interval(-1.0, 1.0), ModeSpec(m, h / R ** 2))
    assert wide.value == pytest.approx(R * R * unit.value, rel=1e-9)


def test_curvature_normalization_preserves_eigenvalues():
    p = expression_potential("4*x^2+x^4")
    domain = ConfinementDomain.interval(-1.0, 0.8)
    h = 0.1
    normalized, scaled_domain, scaled_h = normalize_to_unit_curvature(p, domain, h)
    for m in (0, 1):
        original = confined_eigenvalue(p, domain, ModeSpec(m, h))
        rescaled = confined_eigenvalue(normalized, scaled_domain, ModeSpec(m, scaled_h))
        assert original.value == pytest.approx(rescaled.value, rel=1e-9)


def test_domain_monotonicity():
    p = quartic_potential(1.0)
    mode = ModeSpec(1, 0.15)
    values = [confined_eigenvalue(p, ConfinementDomain.interval(-r, r), mode).value for r in (0.9, 1.0, 1.2, 1.5)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))
