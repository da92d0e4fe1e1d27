import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exchange_lab.families import (GapCollapseError, HamiltonianFamily, ParameterLoop, circle_loop, cone_loop,
                                   constant_family, ellipse_loop, make_family, rebase_loop, spin_half_cone_family)
from exchange_lab.holonomy import (ConnectionResidualWarning, IllConditionedLoopError, berry_connection_fd,
                                   cone_solid_angle_phase, cross_validate, frame_at, holonomy_connection,
                                   holonomy_overlap, projective_distance, regauge, reverse_consistency,
                                   spectrum_distance)
from exchange_lab.linalg import eigenphases, match_phases, unitary_defect

from conftest import random_unitary
from oracles import (CONE_ORACLE, RECTANGLE, RECTANGLE_PHASES, cone_richardson, rectangle_holonomy)

CONE = spin_half_cone_family()
BLOCK = make_family("rotated_block")


def rectangle_loop(n_per_edge=200):
    a, b = RECTANGLE
    return ParameterLoop.from_vertices([[0, 0], [a, 0], [a, b], [0, b]], n_per_edge)


# --- loops -------------------------------------------------------------------------

def test_loop_closure_and_periods():
    with pytest.raises(ValueError, match="not closed"):
        ParameterLoop([[0, 0], [1, 0], [1, 1]])
    loop = cone_loop(0.4, 100)
    assert loop.samples[-1, 1] == pytest.approx(2 * math.pi)
    assert np.allclose(loop.steps()[:, 1], 2 * math.pi / 100)
    assert loop.max_step() == pytest.approx(2 * math.pi / 100)
    assert loop.refined().n_segments == 200 and loop.refined().refinement == 1
    assert np.allclose(loop.reversed().steps(), -loop.steps()[::-1])


def test_loop_builders():
    lifted = circle_loop((0, 0), 1.0, 50).lifted(lambda t: math.sin(2 * math.pi * t))
    assert lifted.param_dim == 3 and lifted.periods == (0.0, 0.0, 0.0)
    poly = ParameterLoop.from_vertices([[0, 0], [1, 0], [0, 1]], 10)
    assert poly.n_segments == 30
    base = ellipse_loop((0, 0), 2.0, 1.0, 200, start=(2.5, 0.3))
    assert np.allclose(base.samples[0], [2.5, 0.3]) and np.allclose(base.samples[-1], [2.5, 0.3])
    assert base.max_step() < 0.1
    same = rebase_loop(circle_loop((0, 0), 1.0, 40), (1.0, 0.0))
    assert same.n_segments == 40


# --- families ------------------------------------------------------------------------

def crossing_family():
    return HamiltonianFamily(lambda lam: np.diag([lam[0], -lam[0]]).astype(complex), 1, name="crossing")


def test_gap_and_cluster_checks():
    fam = crossing_family()
    assert fam.energy([0.5]) == pytest.approx(-0.5)
    with pytest.raises(GapCollapseError, match="gap collapsed"):
        fam.frame([0.0])
    split = HamiltonianFamily(lambda lam: np.diag([0.0, 0.1, 1.0]).astype(complex), 1, degeneracy=2)
    with pytest.raises(GapCollapseError, match="split"):
        split.frame([0.0])
    with pytest.raises(ValueError):
        CONE.frame([0.1, 0.2, 0.3])
    with pytest.raises(KeyError, match="known"):
        make_family("nope")


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_frames_orthonormal_and_span_projector(l1, l2):
    f = BLOCK.frame([l1, l2])
    assert np.max(np.abs(f.conj().T @ f - np.eye(2))) < 1e-10
    w, v = np.linalg.eigh(BLOCK.hamiltonian([l1, l2]))
    proj = v[:, :2] @ v[:, :2].conj().T
    assert np.max(np.abs(f @ f.conj().T - proj)) < 1e-8
    prev = BLOCK.frame([l1 + 1e-3, l2])
    aligned = frame_at(BLOCK, [l1, l2], prev)
    assert np.max(np.abs(aligned @ aligned.conj().T - proj)) < 1e-8


# --- cone ------------------------------------------------------------------------

@pytest.mark.parametrize("theta", sorted(CONE_ORACLE))
def test_cone_matches_dense_evolution_oracle(theta):
    res = holonomy_overlap(CONE, cone_loop(theta, 2000))
    assert res.dimension == 1
    assert abs(math.remainder(res.spectrum[0] - CONE_ORACLE[theta], 2 * math.pi)) < 1e-4
    assert abs(math.remainder(res.spectrum[0] - cone_solid_angle_phase(theta), 2 * math.pi)) < 1e-4
    assert res.unitarity_defect < 1e-8


def test_oracle_values_reproduce():
    theta = math.pi / 3
    assert cone_richardson(theta) == pytest.approx(CONE_ORACLE[theta], abs=1e-12)


@pytest.mark.parametrize("theta", [0.3, 1.2, 2.5])
def test_cone_routes_agree(theta):
    cv = cross_validate(CONE, cone_loop(theta, 1000))
    assert cv.deviation < 1e-3
    assert abs(math.remainder(cv.connection.spectrum[0] - cone_solid_angle_phase(theta), 2 * math.pi)) < 1e-4


def test_cone_start_point_and_reverse():
    a = holonomy_overlap(CONE, cone_loop(1.0, 1000, phi0=0.0))
    b = holonomy_overlap(CONE, cone_loop(1.0, 1000, phi0=2.0))
    assert spectrum_distance(a, b) < 1e-9
    assert reverse_consistency(CONE, cone_loop(1.0, 1000)) < 1e-6


def test_ill_conditioned_loop():
    # four samples trigger one refinement, three stay too coarse
    assert holonomy_overlap(CONE, cone_loop(math.pi / 2, 4)).refinement == 1
    with pytest.raises(IllConditionedLoopError):
        holonomy_overlap(CONE, cone_loop(math.pi / 2, 3))


# --- degenerate clusters ------------------------------------------------------------------

def test_rectangle_closed_form():
    assert match_phases(eigenphases(rectangle_holonomy(*RECTANGLE)), RECTANGLE_PHASES) < 1e-12
    res = holonomy_overlap(BLOCK, rectangle_loop())
    assert res.dimension == 2
    assert match_phases(res.spectrum, RECTANGLE_PHASES) < 1e-6


def test_rectangle_converges_second_order():
    errs = [match_phases(holonomy_overlap(BLOCK, rectangle_loop(n)).spectrum, RECTANGLE_PHASES)
            for n in (50, 100, 200)]
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_routes_agree_and_improve_under_refinement():
    devs = [spectrum_distance(holonomy_overlap(BLOCK, rectangle_loop(n)), holonomy_connection(BLOCK, rectangle_loop(n)))
            for n in (25, 50, 100)]
    assert devs[0] < 1e-3
    assert devs[0] > devs[1] > devs[2]


def test_loop_refinement_stability():
    coarse = holonomy_overlap(BLOCK, rectangle_loop(200))
    fine = holonomy_overlap(BLOCK, rectangle_loop(200).refined())
    assert spectrum_distance(coarse, fine) < 1e-4


def test_reverse_is_inverse():
    assert reverse_consistency(BLOCK, rectangle_loop(100)) < 1e-6


def test_constant_family_is_trivial():
    res = holonomy_overlap(constant_family(), circle_loop((0, 0), 1.0, 50))
    assert np.max(np.abs(res.loop_unitary - np.eye(2))) < 1e-12


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_regauging_preserves_spectrum(seed):
    rng = np.random.default_rng(seed)
    loop = rectangle_loop(50)
    base = holonomy_overlap(BLOCK, loop)
    gauges = [random_unitary(rng, 2) for _ in loop.samples]
    res = regauge(BLOCK, loop, gauges)
    assert spectrum_distance(base, res) < 1e-6
    # U_L alone is gauge dependent
    assert np.max(np.abs(res.transport - base.transport)) > 1e-3


def test_regauge_validates_gauges():
    loop = rectangle_loop(10)
    with pytest.raises(ValueError, match="one gauge per"):
        regauge(BLOCK, loop, [np.eye(2)])
    with pytest.raises(ValueError, match="not unitary"):
        regauge(BLOCK, loop, [2 * np.eye(2)] * len(loop.samples))


def test_connection_is_hermitian_and_warns():
    sample = berry_connection_fd(BLOCK, [0.3, 0.2])
    for m in sample.matrices:
        assert np.max(np.abs(m - m.conj().T)) < 1e-12
    assert sample.antihermitian_residual < 1e-5
    assert sample.along([1.0, 0.0]).shape == (2, 2)
    # the closest-gauge section is parallel at its own anchor
    assert np.max(np.abs(berry_connection_fd(BLOCK, [0.0, 0.0]).matrices)) < 1e-7
    with pytest.warns(ConnectionResidualWarning):
        berry_connection_fd(BLOCK, [0.3, 0.2], tol=0.0)


def test_connection_route_does_not_warn_on_smooth_loop():
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConnectionResidualWarning)
        holonomy_connection(BLOCK, rectangle_loop(50))


@given(st.integers(0, 10_000), st.floats(-math.pi, math.pi))
def test_projective_distance(seed, phase):
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, 3)
    pd = projective_distance(u, np.exp(1j * phase) * u)
    assert pd.phase_defined and pd.residual < 1e-12
    assert abs(math.remainder(pd.phase - phase, 2 * math.pi)) < 1e-12
    other = random_unitary(rng, 3)
    assert projective_distance(u, other).residual > 1e-6
    with pytest.raises(ValueError):
        projective_distance(u, np.eye(2))


def test_projective_distance_traceless():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    pd = projective_distance(np.eye(2), x)
    assert not pd.phase_defined and pd.residual == pytest.approx(2.0)


def test_result_fields():
    res = holonomy_overlap(BLOCK, rectangle_loop(50))
    assert unitary_defect(res.loop_unitary) < 1e-10
    proj = res.projective_part
    assert abs(np.angle(np.linalg.det(proj))) < 1e-10
