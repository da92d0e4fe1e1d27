"""Non-abelian Berry connections and loop holonomies.

Two routes to the holonomy of a degenerate cluster around a parameter loop:

* ``holonomy_overlap``: discrete Wilson line, the ordered product of
  unitarized overlaps F_{k+1}^dagger F_k between frames at consecutive samples.
* ``holonomy_connection``: path-ordered product of exp(i A . dlambda) with
  the connection A sampled by central differences.

Both return U_L (transport in the frame basis at the final sample) and the end
alignment B = F_0^dagger F_n. Their product W = B U_L acts on coefficients in
the initial frame basis; its spectrum does not depend on the frame gauge.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .families import ParameterLoop
from .linalg import eigenphases, match_phases, unitarize, unitary_defect, wrap_phase

OVERLAP_SIGMA_FLOOR = 0.9
CHART_SIGMA_FLOOR = 0.7
DEFAULT_FD_STEP = 1e-4
CONNECTION_RESIDUAL_TOL = 1e-5
GAUGE_UNITARY_TOL = 1e-10
TRACE_FLOOR = 1e-12


class IllConditionedLoopError(ValueError):
    pass


class GaugeChartError(ValueError):
    pass


class HolonomyDisagreementError(ValueError):
    pass


class ConnectionResidualWarning(UserWarning):
    pass


def frame_at(family, lam, previous: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal basis of the selected cluster at ``lam``.

    With ``previous`` the basis is rotated within the subspace to the one
    closest to ``previous`` (polar factor of F^dagger previous).
    """
    f = family.frame(lam)
    if previous is None:
        return f
    return f @ unitarize(f.conj().T @ previous)


def _section(f: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Gauge section F unitarize(F^dagger R); independent of the gauge of F."""
    m = f.conj().T @ ref
    if np.linalg.svd(m, compute_uv=False)[-1] < 1e-3:
        raise GaugeChartError("subspace is nearly orthogonal to the chart reference")
    return f @ unitarize(m)


@dataclass(frozen=True)
class BerryConnectionSample:
    """Connection matrices A_i, shape (k, D, D), and the removed anti-Hermitian part."""

    params: np.ndarray
    matrices: np.ndarray
    antihermitian_residual: float

    def along(self, direction) -> np.ndarray:
        return np.tensordot(np.asarray(direction, dtype=float), self.matrices, axes=1)


def _connection(family, lam: np.ndarray, step: float, ref: np.ndarray) -> tuple[np.ndarray, float]:
    lam = np.asarray(lam, dtype=float)
    s0 = _section(family.frame(lam), ref)
    k = lam.size
    d = s0.shape[1]
    out = np.empty((k, d, d), dtype=complex)
    residual = 0.0
    for i in range(k):
        e = np.zeros(k)
        e[i] = step
        sp = _section(family.frame(lam + e), ref)
        sm = _section(family.frame(lam - e), ref)
        a = 1j * (s0.conj().T @ (sp - sm)) / (2 * step)
        residual = max(residual, float(np.max(np.abs(a - a.conj().T))) / 2)
        out[i] = 0.5 * (a + a.conj().T)
    return out, residual


def berry_connection_fd(family, lam, step: float = DEFAULT_FD_STEP,
                        reference: np.ndarray | None = None,
                        tol: float = CONNECTION_RESIDUAL_TOL) -> BerryConnectionSample:
    """(A_i)_ab = i <phi_a|d_i phi_b> by central differences.

    Frames are put in the smooth gauge closest to ``reference`` (the family's
    reference frame by default) before differencing.
    """
    ref = family.reference_frame() if reference is None else np.asarray(reference, dtype=complex)
    mats, residual = _connection(family, lam, step, ref)
    if residual > tol:
        warnings.warn(f"connection at {tuple(np.ravel(lam))} has anti-Hermitian residual {residual:.3e}",
                      ConnectionResidualWarning, stacklevel=2)
    return BerryConnectionSample(np.asarray(lam, dtype=float), mats, residual)


@dataclass(frozen=True)
class HolonomyResult:
    transport: np.ndarray
    end_alignment: np.ndarray
    method: str = "overlap"
    refinement: int = 0
    n_samples: int = 0
    max_connection_residual: float = 0.0

    @property
    def loop_unitary(self) -> np.ndarray:
        """B U_L acting on coefficients in the initial frame basis."""
        return self.end_alignment @ self.transport

    @property
    def spectrum(self) -> np.ndarray:
        return eigenphases(self.loop_unitary)

    @property
    def dimension(self) -> int:
        return self.transport.shape[0]

    @property
    def overall_phase(self) -> float:
        """arg det(B U_L) / D (defined modulo 2 pi / D)."""
        return wrap_phase(np.angle(np.linalg.det(self.loop_unitary)) / self.dimension)

    @property
    def projective_part(self) -> np.ndarray:
        return self.loop_unitary * np.exp(-1j * self.overall_phase)

    @property
    def unitarity_defect(self) -> float:
        return unitary_defect(self.transport)


def _check_gauges(gauges, n: int, d: int) -> list[np.ndarray]:
    gauges = [np.asarray(g, dtype=complex) for g in gauges]
    if len(gauges) != n:
        raise ValueError(f"need one gauge per loop sample ({n}), got {len(gauges)}")
    for k, g in enumerate(gauges):
        if g.shape != (d, d):
            raise ValueError(f"gauge {k} has shape {g.shape}, expected {(d, d)}")
        defect = unitary_defect(g)
        if defect > GAUGE_UNITARY_TOL:
            raise ValueError(f"gauge {k} is not unitary: defect {defect:.3e}")
    return gauges


def _overlap_pass(family, loop: ParameterLoop, gauges) -> HolonomyResult:
    first = prev = None
    u = None
    for k, f in enumerate(family.frames_along(loop.samples)):
        if gauges is not None:
            f = f @ gauges[k]
        if prev is None:
            first = f
            u = np.eye(f.shape[1], dtype=complex)
        else:
            m = f.conj().T @ prev
            sigma = np.linalg.svd(m, compute_uv=False)[-1]
            if sigma < OVERLAP_SIGMA_FLOOR:
                raise IllConditionedLoopError(
                    f"overlap between samples {k - 1} and {k} has smallest singular value {sigma:.3f}"
                )
            u = unitarize(m) @ u
        prev = f
    b = unitarize(first.conj().T @ prev)
    return HolonomyResult(u, b, "overlap", loop.refinement, len(loop.samples))


def holonomy_overlap(family, loop: ParameterLoop, gauges: Sequence[np.ndarray] | None = None) -> HolonomyResult:
    """Discrete Wilson line around ``loop``.

    An ill-conditioned step triggers one refinement of the loop; a second
    failure is rejected. Explicit ``gauges`` (one unitary per sample) are
    applied to the frames and disable refinement.
    """
    if gauges is not None:
        d = family.frame(loop.samples[0]).shape[1]
        return _overlap_pass(family, loop, _check_gauges(gauges, len(loop.samples), d))
    try:
        return _overlap_pass(family, loop, None)
    except IllConditionedLoopError:
        pass
    try:
        return _overlap_pass(family, loop.refined(), None)
    except IllConditionedLoopError as exc:
        raise IllConditionedLoopError(f"still ill-conditioned after refinement: {exc}") from None


def regauge(family, loop: ParameterLoop, gauges: Sequence[np.ndarray]) -> HolonomyResult:
    """Overlap holonomy with frame k replaced by F_k G_k."""
    return holonomy_overlap(family, loop, gauges)


def holonomy_connection(family, loop: ParameterLoop, fd_step: float = DEFAULT_FD_STEP,
                        tol: float = CONNECTION_RESIDUAL_TOL) -> HolonomyResult:
    """Ordered product of exp(i A(mid) . dlambda) over the loop segments.

    The gauge is the section closest to a chart reference frame; the chart is
    re-anchored at the current sample whenever the subspace drifts too far
    from it. Re-anchoring at a sample leaves the section there unchanged, so
    no transition factor is needed.
    """
    samples = loop.samples
    f0 = family.frame(samples[0])
    d = f0.shape[1]
    ref = f0
    u = np.eye(d, dtype=complex)
    worst = 0.0
    for a, step in zip(samples[:-1], loop.steps()):
        f_here = family.frame(a)
        if np.linalg.svd(f_here.conj().T @ ref, compute_uv=False)[-1] < CHART_SIGMA_FLOOR:
            ref = _section(f_here, ref)
        mats, residual = _connection(family, a + 0.5 * step, fd_step, ref)
        worst = max(worst, residual)
        gen = np.tensordot(step, mats, axes=1)
        w, v = np.linalg.eigh(0.5 * (gen + gen.conj().T))
        u = ((v * np.exp(1j * w)) @ v.conj().T) @ u
    if worst > tol:
        warnings.warn(f"connection anti-Hermitian residual reached {worst:.3e} along the loop",
                      ConnectionResidualWarning, stacklevel=2)
    # the final frame from frames_along may sit on another branch than f0
    last = None
    for last in family.frames_along(samples):
        pass
    s_end = _section(last, ref)
    # express the transport in the final frame basis so B U_L matches the overlap route
    transport = unitarize(last.conj().T @ s_end) @ u
    end = unitarize(f0.conj().T @ last)
    return HolonomyResult(transport, end, "connection", loop.refinement, len(samples), worst)


class ProjectiveDistance(NamedTuple):
    phase: float
    residual: float
    phase_defined: bool


def projective_distance(u1: np.ndarray, u2: np.ndarray) -> ProjectiveDistance:
    """phase = arg tr(U1^dagger U2), residual = ||U2 - e^{i phase} U1||_F."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    if u1.shape != u2.shape:
        raise ValueError(f"dimension mismatch: {u1.shape} vs {u2.shape}")
    tr = np.trace(u1.conj().T @ u2)
    defined = abs(tr) > TRACE_FLOOR * u1.shape[0]
    phase = wrap_phase(np.angle(tr)) if defined else 0.0
    residual = float(np.linalg.norm(u2 - np.exp(1j * phase) * u1))
    return ProjectiveDistance(phase, residual, bool(defined))


def spectrum_distance(r1: HolonomyResult, r2: HolonomyResult) -> float:
    """Largest eigenphase mismatch under optimal matching."""
    return match_phases(r1.spectrum, r2.spectrum)


@dataclass(frozen=True)
class CrossValidation:
    overlap: HolonomyResult
    connection: HolonomyResult
    deviation: float
    history: tuple[float, ...]


def cross_validate(family, loop: ParameterLoop, tol: float = 1e-3, max_refinements: int = 2,
                   fd_step: float = DEFAULT_FD_STEP) -> CrossValidation:
    """Compare both holonomy routes, refining the loop until they agree within ``tol``."""
    history = []
    for _ in range(max_refinements + 1):
        ov = holonomy_overlap(family, loop)
        cn = holonomy_connection(family, loop, fd_step)
        dev = spectrum_distance(ov, cn)
        history.append(dev)
        if dev <= tol:
            return CrossValidation(ov, cn, dev, tuple(history))
        loop = loop.refined()
    raise HolonomyDisagreementError(
        "overlap and connection holonomies disagree: eigenphase deviations "
        + ", ".join(f"{h:.3e}" for h in history)
        + f" over {len(history)} refinement levels (overlap spectrum {np.round(ov.spectrum, 8).tolist()},"
        f" connection spectrum {np.round(cn.spectrum, 8).tolist()})"
    )


def reverse_consistency(family, loop: ParameterLoop) -> float:
    """max |W_reverse W_forward - I|."""
    fwd = holonomy_overlap(family, loop).loop_unitary
    rev = holonomy_overlap(family, loop.reversed()).loop_unitary
    return float(np.max(np.abs(rev @ fwd - np.eye(fwd.shape[0]))))


def cone_solid_angle_phase(theta: float) -> float:
    """-pi (1 - cos theta), wrapped; lower level of -n.sigma around a cone."""
    return wrap_phase(-math.pi * (1 - math.cos(theta)))
