import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import polar

from exchange_lab.linalg import (NotHermitianError, RankDeficientError, TimeGrid, eigenphases, evolve_state,
                                 evolve_steps, match_phases, matexp_unitary, phase_distance, timeordered_evolve,
                                 unitarize, unitary_defect, wrap_phase)

from conftest import random_hermitian, random_unitary


def taylor_expm(a: np.ndarray, terms: int = 80) -> np.ndarray:
    """Plain Taylor series with scaling and squaring (independent of eigh)."""
    norm = np.linalg.norm(a, 1)
    k = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    a = a / 2 ** k
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for j in range(1, terms):
        term = term @ a / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


@given(st.floats(-7, 7, allow_nan=False))
def test_wrap_phase_range(x):
    w = wrap_phase(x)
    assert -math.pi < w <= math.pi
    assert abs(math.sin(w) - math.sin(x)) < 1e-12 and abs(math.cos(w) - math.cos(x)) < 1e-12


def test_wrap_phase_boundaries():
    assert wrap_phase(math.pi) == math.pi
    assert wrap_phase(-math.pi) == math.pi
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)
    assert phase_distance(math.pi - 1e-3, -math.pi + 1e-3) == pytest.approx(2e-3)


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_matexp_matches_taylor(rng, n):
    h = random_hermitian(rng, n, 1.5)
    for dt in (0.01, 0.7, 3.0):
        assert np.max(np.abs(matexp_unitary(h, dt) - taylor_expm(-1j * dt * h))) < 1e-10


@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_matexp_group_property(seed, a, b):
    h = random_hermitian(np.random.default_rng(seed), 4)
    lhs = matexp_unitary(h, a) @ matexp_unitary(h, b)
    assert np.max(np.abs(lhs - matexp_unitary(h, a + b))) < 1e-9
    assert unitary_defect(lhs) < 1e-9


def test_matexp_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        matexp_unitary(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_unitarize_is_polar_factor(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    u, _ = polar(m)
    assert np.max(np.abs(unitarize(m) - u)) < 1e-9


def test_unitarize_fixed_point_and_rank(rng):
    u = random_unitary(rng, 4)
    assert np.max(np.abs(unitarize(u) - u)) < 1e-12
    with pytest.raises(RankDeficientError):
        unitarize(np.zeros((3, 3)))


def test_time_grid():
    g = TimeGrid(0.0, 2.0, 8)
    assert g.dt == 0.25
    assert np.all(np.diff(g.points()) > 0)
    a, b = g.split()
    assert a.t_end == b.t_start and a.n_steps == b.n_steps == 4
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0)


def _driven(rng):
    h0, h1 = random_hermitian(rng, 3), random_hermitian(rng, 3)
    return lambda t: h0 + math.sin(2.3 * t) * h1


def test_timeordered_composes(rng):
    fam = _driven(rng)
    grid = TimeGrid(0.0, 2.0, 400)
    first, second = grid.split()
    whole = timeordered_evolve(fam, grid)
    assert np.max(np.abs(whole - timeordered_evolve(fam, second) @ timeordered_evolve(fam, first))) < 1e-9
    assert unitary_defect(whole) < 1e-9


def test_timeordered_second_order(rng):
    # Richardson: the error ratio between successive halvings approaches 4
    fam = _driven(rng)
    us = [timeordered_evolve(fam, TimeGrid(0.0, 1.5, n)) for n in (100, 200, 400, 800)]
    d = [np.linalg.norm(us[i + 1] - us[i]) for i in range(3)]
    assert 3.6 < d[0] / d[1] < 4.4 and 3.6 < d[1] / d[2] < 4.4


def test_constant_hamiltonian_is_exact(rng):
    h = random_hermitian(rng, 3)
    u = timeordered_evolve(lambda t: h, TimeGrid(0.0, 2.0, 7))
    assert np.max(np.abs(u - taylor_expm(-2j * h))) < 1e-10


def test_evolve_steps_diagonal_fast_path(rng):
    d = [np.diag(rng.normal(size=4)) for _ in range(5)]
    full = np.eye(4, dtype=complex)
    for h in d:
        full = matexp_unitary(h + 0j, 0.1) @ full
    assert np.max(np.abs(evolve_steps(d, 0.1) - full)) < 1e-12
    # switching from diagonal to dense keeps the order
    mixed = d[:2] + [random_hermitian(rng, 4)] + d[2:]
    ref = np.eye(4, dtype=complex)
    for h in mixed:
        ref = matexp_unitary(h, 0.1) @ ref
    assert np.max(np.abs(evolve_steps(mixed, 0.1) - ref)) < 1e-12


def test_evolve_state_matches_propagator(rng):
    fam = _driven(rng)
    grid = TimeGrid(0.0, 1.0, 50)
    psi0 = np.array([1, 0, 0], dtype=complex)
    traj = evolve_state(fam, psi0, grid)
    assert traj.shape == (51, 3)
    assert np.max(np.abs(traj[-1] - timeordered_evolve(fam, grid) @ psi0)) < 1e-12


def test_eigenphases_and_matching():
    u = np.diag(np.exp(1j * np.array([0.3, -2.0, math.pi])))
    assert np.allclose(eigenphases(u), [-2.0, 0.3, math.pi])
    assert match_phases([math.pi - 1e-4, 0.1], [0.1, -math.pi + 1e-4]) == pytest.approx(2e-4, abs=1e-12)
    with pytest.raises(ValueError):
        match_phases([0.0], [0.0, 1.0])
