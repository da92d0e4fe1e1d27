"""Per-kind scenario runners.

Each runner takes a validated parameter block and the config directory (for
relative file paths) and returns (outputs, phase_keys): an ordered mapping of
named results and the subset of names that are phases in radians.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import anyons, braids, holonomy, ring, spin
from ..families import (ParameterLoop, cone_loop, circle_loop, ellipse_loop, make_family, rebase_loop)
from ..holomorphic import HolomorphicFamily, make_holomorphic_family, robustness_break_probe
from ..linalg import TimeGrid, eigenphases, evolve_state, matexp_unitary, timeordered_evolve, wrap_phase
from . import config as cfg
from .io import read_field_grid, read_path, read_vertices

Outputs = tuple[dict[str, Any], set[str]]

PROFILES: dict[str, Callable[[float], float]] = {
    "linear": lambda x: x,
    "smoothstep": lambda x: x * x * (3 - 2 * x),
    # non-monotonic: the angle runs backwards around the middle of the swap
    "overshoot": lambda x: x + 0.25 * math.sin(2 * math.pi * x),
}


def _resolve(base: Path, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else base / p


# --- ring swap -----------------------------------------------------------------------

def run_ring_swap(p: cfg.RingSwapParams, base: Path) -> Outputs:
    grid = TimeGrid(0.0, p.duration, p.n_steps)
    shape = PROFILES[p.profile]
    schedule = ring.SwapSchedule.from_functions(
        grid,
        lambda t: math.pi * shape(t / p.duration),
        lambda t: -p.extra_phase * t / p.duration,
    )
    state = ring.RingState.from_weights({int(k): v for k, v in p.state_weights.items()}, p.m_max, normalize=True)
    out = ring.two_particle_swap(p.spin, state, schedule)
    return {
        "total_phase": out.total_phase,
        "exchange_part": out.exchange_part,
        "spatial_dynamical_part": out.spatial_dynamical_part,
        "decomposition_defect": out.decomposition_defect,
        "fidelity": out.fidelity,
        "truncation_leakage": out.truncation_leakage,
    }, {"total_phase", "exchange_part", "spatial_dynamical_part"}


# --- spin swap -----------------------------------------------------------------------

def run_spin_swap(p: cfg.SpinSwapParams, base: Path) -> Outputs:
    system = spin.make_spin_system(p.spin)
    axis = np.asarray(p.axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if norm == 0:
        raise ValueError("axis must be nonzero")
    axis = axis / norm
    grid = TimeGrid(0.0, p.duration, p.n_steps)
    rate = math.pi / p.duration
    gen = system.along(axis)

    def h_a(t):
        return rate * gen + p.detuning * math.sin(math.pi * t / p.duration) * system.sz

    if p.scenario == "same-rotation":
        h_b = h_a
    else:
        def h_b(t):
            return -h_a(p.duration - t)

    # sigma: highest-weight state along a direction orthogonal to the axis
    perp = np.cross(axis, [0.0, 0.0, 1.0] if abs(axis[2]) < 0.9 else [1.0, 0.0, 0.0])
    perp /= np.linalg.norm(perp)
    theta = math.acos(max(-1.0, min(1.0, perp[2])))
    phi = math.atan2(perp[1], perp[0])
    sigma = system.coherent_state(theta, phi)
    v_a = timeordered_evolve(h_a, grid)
    tau = v_a @ sigma
    tau = tau / np.linalg.norm(tau)
    cond = spin.ConditionedHamiltonian(h_a, h_b)
    swap = spin.conditioned_swap_evolve(system, cond, sigma, tau, grid)
    phi_spin = spin.spin_phase_sum(swap.phi_a, swap.phi_b)

    # ray-space loop of sigma under H_A followed by H_B
    full = TimeGrid(0.0, 2 * p.duration, 2 * p.n_steps)

    def h_loop(t):
        return h_a(t) if t < p.duration else h_b(t - p.duration)

    traj = evolve_state(h_loop, sigma, full)
    dec = spin.aa_decompose(traj, h_loop, full)
    return {
        "phi_a": swap.phi_a,
        "phi_b": swap.phi_b,
        "spin_phase": phi_spin,
        "loop_phase": spin.loop_phase(swap.v_a, swap.v_b, sigma),
        "geometric_phase": dec.geometric,
        "dynamical_phase": wrap_phase(dec.dynamical),
        "total_observable_phase": spin.total_observable_phase(p.spin, 0.0, phi_spin),
    }, {"phi_a", "phi_b", "spin_phase", "loop_phase", "geometric_phase", "dynamical_phase", "total_observable_phase"}


# --- anyons --------------------------------------------------------------------------

def _planar(spec: cfg.PathSpec, base: Path) -> anyons.PlanarPath:
    if spec.file is not None:
        return read_path(_resolve(base, spec.file))
    return anyons.PlanarPath(np.asarray(spec.vertices, dtype=float))


def _field(spec: cfg.FieldSpec, base: Path) -> anyons.FieldMap | None:
    if spec.kind == "none":
        return None
    if spec.kind == "uniform":
        return anyons.FieldMap.uniform(spec.b, spec.region)
    return read_field_grid(_resolve(base, spec.grid_file))


def run_anyon_phase(p: cfg.AnyonPhaseParams, base: Path) -> Outputs:
    species = anyons.AnyonSpecies(p.charge, p.flux)
    path = _planar(p.path, base)
    field = _field(p.field, base)
    others = np.asarray(p.others, dtype=float).reshape(-1, 2)
    rep = anyons.total_anyon_phase(species, path, others, field, p.resolution)
    out: dict[str, Any] = {
        "topological_phase": rep.topological,
        "geometric_phase": rep.geometric,
        "total_phase": rep.total,
        "windings": list(rep.windings),
        "enclosed_flux": rep.enclosed_flux,
    }
    if p.deformations:
        table = anyons.deformation_robustness_probe(
            species, path, [_planar(d, base) for d in p.deformations], others, field, p.threshold, p.resolution
        )
        out["deformation_drifts"] = [r.geometric_drift for r in table.rows]
        out["topology_changes"] = sum(r.topology_change for r in table.rows)
        out["max_drift"] = table.max_drift
        out["robust"] = table.robust
    return out, {"topological_phase", "geometric_phase", "total_phase"}


# --- holonomy ------------------------------------------------------------------------

def build_loop(spec, base: Path) -> ParameterLoop:
    if spec.kind == "cone":
        return cone_loop(spec.theta, spec.n)
    if spec.kind == "circle":
        loop = circle_loop(spec.center, spec.radius, spec.n, spec.start_angle, spec.turns)
    elif spec.kind == "ellipse":
        loop = ellipse_loop(spec.center, spec.a, spec.b, spec.n, spec.tilt)
    else:
        verts = spec.vertices if spec.kind == "polygon" else read_vertices(_resolve(base, spec.path))
        loop = ParameterLoop.from_vertices(np.asarray(verts, dtype=float), spec.n_per_edge)
    return loop if spec.start is None else rebase_loop(loop, spec.start)


def build_holomorphic(p: cfg.HolomorphicParams, epsilon: float | None = None) -> HolomorphicFamily:
    return make_holomorphic_family(
        punctures=[complex(x, y) for x, y in p.punctures], l_b=p.l_b, n=p.n, degeneracy=p.degeneracy,
        epsilon=p.epsilon if epsilon is None else epsilon, mode=p.mode, sheet_scale=p.sheet_scale,
        working_radius=p.working_radius,
    )


def _matrix_outputs(prefix: str, res: holonomy.HolonomyResult) -> dict[str, Any]:
    return {
        f"{prefix}eigenphases": [float(x) for x in res.spectrum],
        f"{prefix}overall_phase": res.overall_phase,
        f"{prefix}unitarity_defect": res.unitarity_defect,
    }


def run_berry_holonomy(p: cfg.BerryHolonomyParams, base: Path) -> Outputs:
    if p.family == "holomorphic":
        family = build_holomorphic(p.holomorphic or cfg.HolomorphicParams())
    else:
        family = make_family(p.family)
    loop = build_loop(p.loop, base)
    if getattr(family, "param_dim", loop.param_dim) == loop.param_dim + 1:
        loop = loop.lifted()
    out: dict[str, Any] = {"degeneracy": int(family.frame(loop.samples[0]).shape[1])}
    phases = set()
    if p.method in ("overlap", "both"):
        res = holonomy.holonomy_overlap(family, loop)
        out.update(_matrix_outputs("", res))
        phases.update({"eigenphases", "overall_phase"})
    if p.method in ("connection", "both"):
        res_c = holonomy.holonomy_connection(family, loop, p.fd_step)
        prefix = "connection_" if p.method == "both" else ""
        out.update(_matrix_outputs(prefix, res_c))
        phases.update({f"{prefix}eigenphases", f"{prefix}overall_phase"})
        if p.method == "both":
            out["method_deviation"] = holonomy.spectrum_distance(res, res_c)
    if p.family == "holomorphic":
        out["windings"] = list(family.windings(loop))
    return out, phases


def _pair_loops(family: HolomorphicFamily, pair: cfg.LoopPair, base: Path, amplitude: float):
    first, second = build_loop(pair.first, base), build_loop(pair.second, base)
    if family.mode == "extra-parameter":
        first = first.lifted()
        second = second.lifted((lambda t: amplitude * math.sin(2 * math.pi * t)) if amplitude else None)
    return first, second


def run_robustness_sweep(p: cfg.RobustnessSweepParams, base: Path) -> Outputs:
    family = build_holomorphic(p.family)
    pairs = [_pair_loops(family, pair, base, p.extra_amplitude) for pair in p.loop_pairs]
    table = robustness_break_probe(family, pairs, [family.epsilon])
    return {
        "epsilon": family.epsilon,
        "max_residual": table.max_residuals[0],
        "pair_residuals": list(table.pair_residuals[0]),
    }, set()


def finalize_robustness_sweep(records: list) -> None:
    """Attach the sweep-wide trend flag (residual non-decreasing in sweep order)."""
    res = [r.outputs["max_residual"] for r in records]
    trend = all(b >= a for a, b in zip(res, res[1:]))
    for r in records:
        r.outputs["trend_non_decreasing"] = trend


# --- braids --------------------------------------------------------------------------

def _representation(p: cfg.BraidCheckParams) -> braids.BraidRepresentation:
    if p.representation == "ising":
        return braids.ising_representation()
    if p.representation == "fibonacci":
        return braids.fibonacci_representation()
    if p.representation == "abelian":
        return braids.abelian_representation(p.n_strands, p.theta)
    return braids.sheet_monodromy_representation(p.degeneracy, p.n_strands)


def fixed_conjugator(dim: int, angle: float) -> np.ndarray:
    """exp(-i angle G) for a fixed Hermitian G with nonzero entries throughout."""
    g = np.ones((dim, dim), dtype=complex) + np.diag(np.arange(dim, dtype=float))
    g += 1j * (np.triu(np.ones((dim, dim)), 1) - np.tril(np.ones((dim, dim)), -1))
    return matexp_unitary(g, angle)


def run_braid_check(p: cfg.BraidCheckParams, base: Path) -> Outputs:
    rep = _representation(p)
    report = braids.verify_representation(rep, p.tol)
    conj = braids.conjugate_representation(rep, fixed_conjugator(rep.dimension, p.conjugation_angle))
    creport = braids.verify_representation(conj, p.tol)
    out: dict[str, Any] = {
        "dimension": rep.dimension,
        "braid_residual": report.braid_residual,
        "commute_residual": report.commute_residual,
        "relations_pass": report.passed,
        "conjugated_braid_residual": creport.braid_residual,
        "conjugated_commute_residual": creport.commute_residual,
        "conjugated_relations_pass": creport.passed,
    }
    phases = set()
    for k, text in enumerate(p.words):
        w = braids.parse_word(text, rep.n_strands)
        out[f"word{k}_eigenphases"] = [float(x) for x in eigenphases(braids.evaluate_word(rep, w))]
        phases.add(f"word{k}_eigenphases")
    if p.holonomy is not None:
        fam = build_holomorphic(p.holonomy.family)
        loop = build_loop(p.holonomy.loop, base)
        if fam.param_dim == 3:
            loop = loop.lifted()
        hol = holonomy.holonomy_overlap(fam, loop)
        w = braids.parse_word(p.holonomy.word, rep.n_strands)
        dist = braids.compare_braid_to_holonomy(rep, w, hol)
        out["holonomy_phase"] = dist.phase
        out["holonomy_residual"] = dist.residual
        out["holonomy_phase_defined"] = dist.phase_defined
        phases.add("holonomy_phase")
    return out, phases


RUNNERS: dict[str, Callable[[Any, Path], Outputs]] = {
    "ring-swap": run_ring_swap,
    "spin-swap": run_spin_swap,
    "anyon-phase": run_anyon_phase,
    "berry-holonomy": run_berry_holonomy,
    "robustness-sweep": run_robustness_sweep,
    "braid-check": run_braid_check,
}

FINALIZERS = {"robustness-sweep": finalize_robustness_sweep}
