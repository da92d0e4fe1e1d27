"""Dense complex linear algebra and time-stepped unitary evolution.

Conventions used throughout the package: hbar = 1, phases in radians, and
phases compared on the circle via the principal value in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
RANK_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


class RankDeficientError(ValueError):
    pass


def hermitian_defect(m: np.ndarray) -> float:
    """Largest entrywise |M - M^dagger|."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def unitary_defect(u: np.ndarray) -> float:
    """Largest entrywise |U^dagger U - I|."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))


def wrap_phase(x: float) -> float:
    """Principal value of an angle in (-pi, pi]."""
    w = math.remainder(float(x), 2 * math.pi)
    if w <= -math.pi:
        w += 2 * math.pi
    return w


def phase_distance(a: float, b: float) -> float:
    """Circular distance between two phases."""
    return abs(wrap_phase(a - b))


def _require_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {h.shape}")
    defect = hermitian_defect(h)
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if defect > HERMITIAN_TOL * scale:
        raise NotHermitianError(f"matrix is not Hermitian: max |H - H^dagger| = {defect:.3e}")
    return 0.5 * (h + h.conj().T)


def matexp_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """Return exp(-i H dt) for Hermitian H.

    Computed from the eigendecomposition, so the result is unitary to
    rounding error.
    """
    h = _require_hermitian(h)
    if h.shape[0] == 0:
        return h
    off = h - np.diag(np.diag(h))
    if not np.any(off):
        return np.diag(np.exp(-1j * dt * np.real(np.diag(h))))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


def unitarize(m: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition M = W P.

    W maximizes Re tr(W^dagger M) over unitaries; for a unitary input it is
    the input itself.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    u, s, vh = np.linalg.svd(m)
    if s.size and s[-1] <= RANK_TOL:
        raise RankDeficientError(f"matrix is rank deficient: smallest singular value {s[-1]:.3e}")
    return u @ vh


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_steps`` intervals on [t_start, t_end]."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        if not self.t_end > self.t_start:
            raise ValueError(f"grid must be increasing, got [{self.t_start}, {self.t_end}]")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def points(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    def midpoints(self) -> np.ndarray:
        return self.t_start + self.dt * (np.arange(self.n_steps) + 0.5)

    def split(self) -> tuple["TimeGrid", "TimeGrid"]:
        """Halve an even grid into two grids sharing the same points."""
        if self.n_steps % 2:
            raise ValueError("only grids with an even number of steps can be split")
        half = self.n_steps // 2
        t_mid = self.t_start + half * self.dt
        return TimeGrid(self.t_start, t_mid, half), TimeGrid(t_mid, self.t_end, half)


def evolve_steps(hamiltonians: Iterable[np.ndarray], dt: float) -> np.ndarray:
    """Ordered product of exp(-i H_k dt), later steps to the left."""
    u = None
    diagonal = None  # running product while every step so far is diagonal
    for k, h in enumerate(hamiltonians):
        h = np.asarray(h)
        shape = h.shape
        if u is None and diagonal is None:
            dim = shape
        elif shape != dim:
            raise ValueError(f"Hamiltonian dimension changed at step {k}: {dim} -> {shape}")
        if u is None and h.ndim == 2 and shape[0] == shape[1] and not np.any(h - np.diag(np.diag(h))):
            d = np.diag(h)
            if np.max(np.abs(d.imag), initial=0.0) > HERMITIAN_TOL * max(1.0, np.max(np.abs(d), initial=0.0)):
                raise NotHermitianError(f"diagonal Hamiltonian has complex entries at step {k}")
            phases = np.exp(-1j * dt * d.real)
            diagonal = phases if diagonal is None else phases * diagonal
            continue
        step = matexp_unitary(h, dt)
        if u is None:
            u = step if diagonal is None else step * diagonal[None, :]
        else:
            u = step @ u
    if u is None:
        if diagonal is None:
            raise ValueError("no steps to evolve")
        return np.diag(diagonal)
    return u


def timeordered_evolve(family: Callable[[float], np.ndarray], grid: TimeGrid) -> np.ndarray:
    """Time-ordered propagator of H(t) over ``grid`` (exponential midpoint rule)."""
    return evolve_steps((family(t) for t in grid.midpoints()), grid.dt)


def evolve_state(
    family: Callable[[float], np.ndarray], psi0: np.ndarray, grid: TimeGrid
) -> np.ndarray:
    """State trajectory at every grid point, shape (n_steps + 1, dim)."""
    psi = np.asarray(psi0, dtype=complex)
    out = np.empty((grid.n_steps + 1, psi.size), dtype=complex)
    out[0] = psi
    for k, t in enumerate(grid.midpoints()):
        psi = matexp_unitary(family(t), grid.dt) @ psi
        out[k + 1] = psi
    return out


def eigenphases(u: np.ndarray) -> np.ndarray:
    """Sorted eigenphases of a unitary in (-pi, pi]."""
    phases = np.array([wrap_phase(p) for p in np.angle(np.linalg.eigvals(u))])
    return np.sort(phases)


def match_phases(a: Sequence[float], b: Sequence[float]) -> float:
    """Largest circular distance under the optimal matching of two phase multisets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("phase multisets differ in size")
    if a.size == 0:
        return 0.0
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(np.angle(np.exp(1j * (a[:, None] - b[None, :]))))
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))
