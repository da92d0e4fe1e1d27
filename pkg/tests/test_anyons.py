import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exchange_lab.anyons import (AnyonSpecies, FieldMap, PlanarPath, PointOnPathError, deformation_robustness_probe,
                                 enclosed_external_flux, flux_refinement, mutual_braid_phase, total_anyon_phase,
                                 winding_number, winding_numbers)
from exchange_lab.experiments.io import read_field_grid, read_path, write_field_grid, write_path

SQUARE = PlanarPath([[-1, -1], [1, -1], [1, 1], [-1, 1]])


def crossing_winding(vertices, p):
    """Signed upward/downward crossing count of the ray to +x (independent oracle)."""
    v = np.asarray(vertices, dtype=float)
    w = 0
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        side = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])
        if a[1] <= p[1] < b[1] and side > 0:
            w += 1
        elif b[1] <= p[1] < a[1] and side < 0:
            w -= 1
    return w


def star(n_points=5, r_out=2.0, r_in=0.8, turns=1):
    k = np.arange(2 * n_points * turns)
    r = np.where(k % 2 == 0, r_out, r_in)
    t = turns * 2 * math.pi * k / len(k)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


@st.composite
def polygons(draw):
    n = draw(st.integers(3, 12))
    seed = draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    return rng.uniform(-2, 2, size=(n, 2))


@given(polygons(), st.integers(0, 10_000))
def test_winding_matches_crossing_oracle(verts, seed):
    pts = np.random.default_rng(seed).uniform(-2.5, 2.5, size=(20, 2))
    path = PlanarPath(verts)
    try:
        got = winding_numbers(path, pts)
    except PointOnPathError:
        return
    assert got.tolist() == [crossing_winding(verts, p) for p in pts]


@given(polygons(), st.integers(1, 11), st.integers(2, 4))
def test_winding_invariant_under_refinement_and_relabeling(verts, shift, factor):
    pts = np.array([[0.1, 0.2], [1.3, -0.7], [-0.4, 1.9]])
    path = PlanarPath(verts)
    try:
        base = winding_numbers(path, pts)
    except PointOnPathError:
        return
    assert np.array_equal(winding_numbers(path.refined(factor), pts), base)
    assert np.array_equal(winding_numbers(PlanarPath(np.roll(verts, shift % len(verts), axis=0)), pts), base)
    assert np.array_equal(winding_numbers(path.reversed(), pts), -base)


def test_multiple_turns_and_on_path():
    twice = PlanarPath(star(turns=2))
    assert winding_number(twice, [0, 0]) == 2
    assert winding_number(SQUARE, [3, 0]) == 0
    with pytest.raises(PointOnPathError):
        winding_number(SQUARE, [1.0, 0.3])
    with pytest.raises(ValueError):
        PlanarPath([[0, 0], [0, 0], [1, 1]])
    with pytest.raises(ValueError):
        PlanarPath([[0, 0], [1, 1]])


def test_species_and_braid_phase():
    sp = AnyonSpecies(0.5, 1.2)
    assert sp.pair_phase == pytest.approx(0.6)
    assert sp.statistics_angle == pytest.approx(0.3)
    assert mutual_braid_phase(sp, SQUARE, [[0, 0]]) == pytest.approx(0.6)
    assert mutual_braid_phase(sp, SQUARE, [[0, 0], [0.5, 0.5], [5, 5]]) == pytest.approx(1.2)
    assert mutual_braid_phase(sp, PlanarPath(star(turns=2)), [[0, 0]]) == pytest.approx(1.2)
    assert mutual_braid_phase(sp, SQUARE, []) == 0.0


@pytest.mark.parametrize("verts", [
    [[-1, -1], [1, -1], [1, 1], [-1, 1]],
    [[0, 0], [2.3, 0.2], [1.1, 1.7]],
    star().tolist(),
    [[-1.0, -0.3], [0.4, -1.2], [1.5, 0.1], [0.2, 0.4], [0.6, 1.3], [-0.9, 0.8]],
])
def test_uniform_flux_matches_shoelace(verts):
    path = PlanarPath(verts)
    b = 0.37
    got = enclosed_external_flux(path, FieldMap.uniform(b))
    assert got == pytest.approx(b * path.signed_area(), rel=1e-2)
    assert enclosed_external_flux(path.reversed(), FieldMap.uniform(b)) == pytest.approx(-got)


def test_flux_refinement_is_cauchy():
    path = PlanarPath(star())
    vals = flux_refinement(path, FieldMap.uniform(1.0), [50, 100, 200, 400])
    diffs = np.abs(np.diff(vals))
    assert np.all(diffs[1:] < diffs[:-1])
    assert vals[-1] == pytest.approx(path.signed_area(), rel=1e-2)


def test_region_field_and_double_loop():
    field = FieldMap.uniform(2.0, (-0.5, 0.5, -0.5, 0.5))
    assert enclosed_external_flux(SQUARE, field) == pytest.approx(2.0, rel=1e-12)
    assert enclosed_external_flux(PlanarPath([[2, 2], [3, 2], [3, 3]]), field) == 0.0
    twice = PlanarPath(star(r_in=1.5, turns=2))
    assert enclosed_external_flux(twice, field) == pytest.approx(4.0, rel=1e-12)
    assert FieldMap.uniform(1.0).total_flux() == math.inf
    with pytest.raises(ValueError):
        FieldMap.uniform(1.0, (1, 0, 0, 1))


def test_grid_field_flux():
    samples = np.zeros((10, 10))
    samples[4:6, 4:6] = 1.0  # 0.04 units of flux around the origin
    field = FieldMap.grid(samples, (-0.5, -0.5), 0.1)
    assert field.total_flux() == pytest.approx(0.04)
    assert enclosed_external_flux(SQUARE, field) == pytest.approx(0.04)
    assert enclosed_external_flux(PlanarPath([[2, 2], [3, 2], [3, 3]]), field) == 0.0
    # a cell centre on the boundary counts one half
    edge = PlanarPath([[-0.05, -1], [1, -1], [1, 1], [-0.05, 1]])
    assert enclosed_external_flux(edge, field) == pytest.approx(0.03)


def test_total_phase_split():
    sp = AnyonSpecies(1.0, 0.8)
    rep = total_anyon_phase(sp, SQUARE, [[0.0, 0.0]], FieldMap.uniform(0.05))
    assert rep.topological == pytest.approx(0.8)
    assert rep.geometric == pytest.approx(0.2, rel=1e-2)
    assert rep.total == pytest.approx(rep.topological + rep.geometric, abs=1e-15)
    assert rep.windings == (1,)
    off = total_anyon_phase(sp, SQUARE, [[0.0, 0.0]], FieldMap.uniform(1.0, (3, 4, 3, 4)))
    assert off.geometric == 0.0


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_homotopic_deformations_are_exact(seed):
    rng = np.random.default_rng(seed)
    sp = AnyonSpecies(0.7, 2.1)
    others = [[0.2, -0.1], [-0.3, 0.4]]
    base = PlanarPath(star())
    deformed = [PlanarPath(base.vertices * rng.uniform(0.8, 1.3, size=(len(base.vertices), 1))) for _ in range(5)]
    table = deformation_robustness_probe(sp, base, deformed, others)
    assert table.robust
    assert all(r.report.topological == table.base.topological for r in table.rows)
    assert table.base.topological == pytest.approx(2 * 0.7 * 2.1)


def test_probe_flags_topology_change_and_drift():
    sp = AnyonSpecies(1.0, 1.0)
    small = PlanarPath([[1.5, -1], [2.5, -1], [2.5, 1], [1.5, 1]])
    table = deformation_robustness_probe(sp, SQUARE, [small], [[0, 0]])
    assert table.rows[0].topology_change and not table.robust
    bigger = PlanarPath([[-1, -1], [1.5, -1], [1.5, 1], [-1, 1]])
    table = deformation_robustness_probe(sp, SQUARE, [bigger], [[0, 0]], FieldMap.uniform(0.1))
    assert table.rows[0].geometric_drift == pytest.approx(0.1, rel=1e-2)
    assert not table.robust and table.max_drift > 0


def test_io_round_trip(tmp_path):
    verts = star()
    write_path(tmp_path / "p.path", verts)
    assert np.array_equal(read_path(tmp_path / "p.path").vertices, verts)
    field = FieldMap.grid(np.arange(6.0).reshape(2, 3) / 7, (-1.5, 0.25), 0.3)
    write_field_grid(tmp_path / "g.grid", field)
    back = read_field_grid(tmp_path / "g.grid")
    assert np.array_equal(back.samples, field.samples) and back.origin == field.origin and back.h == field.h


def test_io_errors(tmp_path):
    p = tmp_path / "bad.path"
    p.write_text("0 0\n1 2 3\n")
    with pytest.raises(ValueError, match="bad.path:2"):
        read_path(p)
    g = tmp_path / "bad.grid"
    g.write_text("0 0 0.1 2 2\n1 2\n")
    with pytest.raises(ValueError, match="expected 2 sample rows"):
        read_field_grid(g)
