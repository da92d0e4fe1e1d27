"""Spin swapping with track-conditioned Hamiltonians and phase bookkeeping.

A particle on track A sees the spin Hamiltonian H_A(t), one on track B sees
H_B(t). The tracks stay orthogonal, so the single-particle propagator is
block diagonal on (track) x (spin) space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .linalg import TimeGrid, matexp_unitary, timeordered_evolve, wrap_phase
from .ring import _two_s

SWAP_TOL = 1e-8
LOOP_CLOSURE_TOL = 1e-6


class NotASpinSwapError(ValueError):
    pass


class OpenLoopError(ValueError):
    pass


@dataclass(frozen=True)
class SpinSystem:
    """Spin-s matrices in the basis m = s, s-1, ..., -s."""

    s: float
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self) -> int:
        return self.sz.shape[0]

    @property
    def m_values(self) -> np.ndarray:
        return np.real(np.diag(self.sz))

    def along(self, axis) -> np.ndarray:
        """n . S for a 3-vector n."""
        nx, ny, nz = np.asarray(axis, dtype=float)
        return nx * self.sx + ny * self.sy + nz * self.sz

    def basis_state(self, m: float) -> np.ndarray:
        idx = int(round(self.s - m))
        if not 0 <= idx < self.dim or abs(self.m_values[idx] - m) > 1e-12:
            raise ValueError(f"m = {m} is not a projection for s = {self.s}")
        v = np.zeros(self.dim, dtype=complex)
        v[idx] = 1.0
        return v

    def coherent_state(self, theta: float, phi: float) -> np.ndarray:
        """|theta, phi> = exp(-i phi Sz) exp(-i theta Sy) |s, s>."""
        top = self.basis_state(self.s)
        return matexp_unitary(self.sz, phi) @ (matexp_unitary(self.sy, theta) @ top)


def make_spin_system(s) -> SpinSystem:
    two_s = _two_s(s)
    s = two_s / 2
    m = s - np.arange(two_s + 1)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1)); basis index decreases as m increases
    raise_ = np.zeros((two_s + 1, two_s + 1), dtype=complex)
    for k in range(1, two_s + 1):
        mk = m[k]
        raise_[k - 1, k] = math.sqrt(s * (s + 1) - mk * (mk + 1))
    lower = raise_.conj().T
    sx = (raise_ + lower) / 2
    sy = (raise_ - lower) / 2j
    sz = np.diag(m).astype(complex)
    for op in (sx, sy, sz):
        op.setflags(write=False)
    return SpinSystem(s, sx, sy, sz)


def rotation_unitary(system: SpinSystem, axis, angle: float) -> np.ndarray:
    """exp(-i angle n.S) for a unit axis n."""
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise ValueError("rotation axis must be nonzero")
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"rotation axis must be a unit vector, |n| = {norm!r}")
    return matexp_unitary(system.along(axis), angle)


@dataclass(frozen=True)
class ConditionedHamiltonian:
    """Spin Hamiltonians H_A(t), H_B(t) applied on orthogonal tracks A and B."""

    h_a: Callable[[float], np.ndarray]
    h_b: Callable[[float], np.ndarray]

    def full(self, t: float) -> np.ndarray:
        """Pi_A (x) H_A(t) + Pi_B (x) H_B(t) on track (x) spin space."""
        pa = np.diag([1.0, 0.0])
        pb = np.diag([0.0, 1.0])
        return np.kron(pa, self.h_a(t)) + np.kron(pb, self.h_b(t))


def conditioned_propagator(cond: ConditionedHamiltonian, grid: TimeGrid) -> np.ndarray:
    """Block-diagonal propagator on track (x) spin space.

    The off-diagonal blocks are exact zeros because the blocks are evolved
    separately and assembled afterwards.
    """
    v_a = timeordered_evolve(cond.h_a, grid)
    v_b = timeordered_evolve(cond.h_b, grid)
    return np.kron(np.diag([1.0, 0.0]), v_a) + np.kron(np.diag([0.0, 1.0]), v_b)


class SpinSwap(NamedTuple):
    v_a: np.ndarray
    v_b: np.ndarray
    phi_a: float
    phi_b: float


def conditioned_swap_evolve(system: SpinSystem, cond: ConditionedHamiltonian, sigma, tau,
                            grid: TimeGrid) -> SpinSwap:
    """Evolve both tracks and read off V_A sigma = e^{i phi_A} tau, V_B tau = e^{i phi_B} sigma."""
    sigma = _spin_state(system, sigma)
    tau = _spin_state(system, tau)
    v_a = timeordered_evolve(cond.h_a, grid)
    v_b = timeordered_evolve(cond.h_b, grid)
    amp_a = np.vdot(tau, v_a @ sigma)
    amp_b = np.vdot(sigma, v_b @ tau)
    for name, amp in (("V_A", amp_a), ("V_B", amp_b)):
        if abs(amp) < 1 - SWAP_TOL:
            raise NotASpinSwapError(f"{name} is not a spin swap: achieved overlap {abs(amp):.10f}")
    return SpinSwap(v_a, v_b, wrap_phase(np.angle(amp_a)), wrap_phase(np.angle(amp_b)))


def spin_phase_sum(phi_a: float, phi_b: float) -> float:
    return wrap_phase(phi_a + phi_b)


def loop_phase(v_a: np.ndarray, v_b: np.ndarray, sigma) -> float:
    """arg <sigma|V_B V_A|sigma>."""
    sigma = np.asarray(sigma, dtype=complex)
    return wrap_phase(np.angle(np.vdot(sigma, v_b @ (v_a @ sigma))))


def total_observable_phase(spin_s, phi_spatial: float, phi_spin: float) -> float:
    """2 s pi + spatial dynamical phase + spin phase, mod 2 pi."""
    return wrap_phase(_two_s(spin_s) * math.pi + phi_spatial + phi_spin)


@dataclass(frozen=True)
class PhaseDecomposition:
    total: float
    dynamical: float
    geometric: float


def aa_decompose(trajectory: np.ndarray, hamiltonians: Sequence[np.ndarray] | Callable[[float], np.ndarray],
                 grid: TimeGrid) -> PhaseDecomposition:
    """Split the phase of a closed ray-space loop into dynamical and geometric parts.

    ``trajectory`` holds the state at every grid point; ``hamiltonians`` is
    either the same-length sequence of H(t_k) or a callable. The dynamical
    part is -int <psi|H|psi> dt by the trapezoid rule.
    """
    psi = np.asarray(trajectory, dtype=complex)
    if psi.shape[0] != grid.n_steps + 1:
        raise ValueError(f"trajectory needs {grid.n_steps + 1} samples, got {psi.shape[0]}")
    closure = np.vdot(psi[0], psi[-1])
    if abs(closure) < 1 - LOOP_CLOSURE_TOL:
        raise OpenLoopError(f"trajectory does not close in ray space: closure defect {1 - abs(closure):.3e}")
    times = grid.points()
    if callable(hamiltonians):
        hs = [hamiltonians(t) for t in times]
    else:
        hs = list(hamiltonians)
        if len(hs) != len(times):
            raise ValueError(f"need {len(times)} Hamiltonian samples, got {len(hs)}")
    energies = np.array([np.real(np.vdot(p, h @ p)) for p, h in zip(psi, hs)])
    dynamical = -float(trapezoid(energies, times))
    total = float(np.angle(closure))
    return PhaseDecomposition(
        total=wrap_phase(total),
        dynamical=dynamical,
        geometric=wrap_phase(total - dynamical),
    )


def _spin_state(system: SpinSystem, v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape != (system.dim,):
        raise ValueError(f"spin state needs {system.dim} amplitudes, got {v.shape}")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"spin state not normalized: |v| = {norm!r}")
    return v
