"""Physical swap of two identical particles moving on a ring.

Each particle lives in the angular-momentum basis |m>, m in [-m_max, m_max].
The swap drives both particles with H(t) = phi'(t) L_z (+ an optional
identity term phi_extra'(t) acting on the pair) so that after time T each
particle has been carried half way round the ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .linalg import TimeGrid, evolve_steps, wrap_phase

DEFAULT_M_MAX = 16
ORTHOGONALITY_TOL = 1e-10
NORM_TOL = 1e-12


class SwapConditionError(ValueError):
    """The rotated state is not orthogonal to the original one."""


@dataclass(frozen=True)
class RingState:
    m_max: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        if amps.shape != (2 * self.m_max + 1,):
            raise ValueError(f"expected {2 * self.m_max + 1} amplitudes, got {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"ring state not normalized: sum |c_m|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_weights(cls, coefficients: Mapping[int, complex], m_max: int = DEFAULT_M_MAX,
                     normalize: bool = False) -> "RingState":
        amps = np.zeros(2 * m_max + 1, dtype=complex)
        for m, c in coefficients.items():
            if abs(m) > m_max:
                raise ValueError(f"|m| = {abs(m)} exceeds truncation m_max = {m_max}")
            amps[m + m_max] = c
        if normalize:
            amps /= np.linalg.norm(amps)
        return cls(m_max, amps)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-self.m_max, self.m_max + 1)

    def amplitude(self, m: int) -> complex:
        return complex(self.amplitudes[m + self.m_max])

    def overlap(self, other: "RingState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    @property
    def swap_compatible(self) -> bool:
        return check_swap_orthogonality(self) <= ORTHOGONALITY_TOL


def rotate_ring(state: RingState, theta: float) -> RingState:
    """Rigid rotation by ``theta``: c_m -> exp(-i m theta) c_m."""
    return RingState(state.m_max, state.amplitudes * np.exp(-1j * state.m_values * theta))


def check_swap_orthogonality(state: RingState) -> float:
    """|sum_m |c_m|^2 exp(i m pi)|; zero iff the pi-rotated copy stays orthogonal."""
    weights = np.abs(state.amplitudes) ** 2
    signs = np.where(state.m_values % 2 == 0, 1.0, -1.0)
    return float(abs(np.sum(weights * signs)))


def _sample(fn: Callable[[float], float] | None, times: np.ndarray) -> np.ndarray:
    if fn is None:
        return np.zeros_like(times)
    return np.array([float(fn(t)) for t in times])


@dataclass(frozen=True)
class SwapSchedule:
    """Rotation angle phi(t) and extra phase phi_extra(t) sampled on a grid.

    phi(t_start) = 0 and phi(t_end) = pi are enforced exactly.
    """

    grid: TimeGrid
    phi: np.ndarray
    extra_phase: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.grid.n_steps + 1
        phi = np.array(self.phi, dtype=float)
        if phi.shape != (n,):
            raise ValueError(f"phi needs {n} samples, got {phi.shape}")
        if abs(phi[0]) > 1e-12 or abs(phi[-1] - math.pi) > 1e-12:
            raise ValueError(f"phi must run from 0 to pi, got {phi[0]!r} -> {phi[-1]!r}")
        phi[0], phi[-1] = 0.0, math.pi
        extra = np.zeros(n) if self.extra_phase is None else np.array(self.extra_phase, dtype=float)
        if extra.shape != (n,):
            raise ValueError(f"extra_phase needs {n} samples, got {extra.shape}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(extra))):
            raise ValueError("schedule samples must be finite")
        for arr in (phi, extra):
            arr.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "extra_phase", extra)

    @classmethod
    def from_functions(cls, grid: TimeGrid, phi: Callable[[float], float],
                       extra_phase: Callable[[float], float] | None = None) -> "SwapSchedule":
        times = grid.points()
        return cls(grid, _sample(phi, times), _sample(extra_phase, times))

    @classmethod
    def linear(cls, grid: TimeGrid, extra_phase: Callable[[float], float] | None = None) -> "SwapSchedule":
        s = (grid.points() - grid.t_start) / grid.duration
        return cls(grid, math.pi * s, _sample(extra_phase, grid.points()))

    @property
    def spatial_dynamical_phase(self) -> float:
        """phi_extra(0) - phi_extra(T), unwrapped."""
        return float(self.extra_phase[0] - self.extra_phase[-1])

    def without_extra(self) -> "SwapSchedule":
        return SwapSchedule(self.grid, self.phi)

    def step_rates(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step average of phi' and phi_extra' (exact for the piecewise-linear interpolant)."""
        dt = self.grid.dt
        return np.diff(self.phi) / dt, np.diff(self.extra_phase) / dt


def ring_propagator(schedule: SwapSchedule, m_max: int) -> np.ndarray:
    """Single-particle propagator of phi'(t) L_z + phi_extra'(t) 1."""
    m = np.arange(-m_max, m_max + 1, dtype=float)
    rates, extra = schedule.step_rates()
    hams = (np.diag(r * m + e) for r, e in zip(rates, extra))
    return evolve_steps(hams, schedule.grid.dt)


def evolve_ring_swap(state: RingState, schedule: SwapSchedule) -> tuple[RingState, float]:
    """Drive one particle through the swap.

    Returns the evolved state and its global phase relative to
    ``rotate_ring(state, pi)``.
    """
    defect = check_swap_orthogonality(state)
    if defect > ORTHOGONALITY_TOL:
        raise SwapConditionError(
            f"state cannot be swapped: sum_m |c_m|^2 e^(i m pi) has modulus {defect:.3e}"
        )
    u = ring_propagator(schedule, state.m_max)
    final = u @ state.amplitudes
    target = rotate_ring(state, math.pi)
    phase = wrap_phase(np.angle(np.vdot(target.amplitudes, final)))
    return RingState(state.m_max, final), phase


def exchange_sign(spin_s) -> int:
    """(-1)^(2s) for s a positive multiple of 1/2."""
    two_s = _two_s(spin_s)
    return -1 if two_s % 2 else 1


def _two_s(spin_s) -> int:
    two_s = Fraction(spin_s).limit_denominator(1000) * 2
    if two_s.denominator != 1 or abs(float(two_s) - 2 * float(spin_s)) > 1e-12:
        raise ValueError(f"spin must be a multiple of 1/2, got {spin_s!r}")
    if two_s <= 0:
        raise ValueError(f"spin must be positive, got {spin_s!r}")
    return int(two_s)


def symmetrized_pair(a: RingState, b: RingState, spin_s) -> np.ndarray:
    """Amplitude array Psi[i, j] of (|a>|b> + (-1)^(2s) |b>|a>) / sqrt(2).

    Assumes <a|b> = 0 so the result is normalized.
    """
    sign = exchange_sign(spin_s)
    psi = np.outer(a.amplitudes, b.amplitudes) + sign * np.outer(b.amplitudes, a.amplitudes)
    return psi / math.sqrt(2.0)


@dataclass(frozen=True)
class ExchangeOutcome:
    total_phase: float
    exchange_part: float
    spatial_dynamical_part: float
    fidelity: float
    truncation_leakage: float = 0.0

    @property
    def decomposition_defect(self) -> float:
        return abs(wrap_phase(self.total_phase - self.exchange_part - self.spatial_dynamical_part))


def two_particle_swap(spin_s, state_a: RingState, schedule: SwapSchedule) -> ExchangeOutcome:
    """Physically swap two identical spin-s particles on the ring.

    Particle B starts in ``rotate_ring(state_a, pi)``. Both particles are
    driven by the same single-particle propagator; the extra identity term
    of the schedule acts once on the pair. The observable phase is
    arg <Psi|Psi_final> with the unswapped pair as reference.
    """
    two_s = _two_s(spin_s)
    if check_swap_orthogonality(state_a) > ORTHOGONALITY_TOL:
        raise SwapConditionError(
            f"state cannot be swapped: orthogonality defect {check_swap_orthogonality(state_a):.3e}"
        )
    state_b = rotate_ring(state_a, math.pi)
    psi = symmetrized_pair(state_a, state_b, spin_s)

    u = ring_propagator(schedule.without_extra(), state_a.m_max)
    # pair identity term, integrated step by step like the spatial part
    _, extra_rates = schedule.step_rates()
    pair_phase = complex(np.prod(np.exp(-1j * extra_rates * schedule.grid.dt)))
    final = pair_phase * (u @ psi @ u.T)

    overlap = np.vdot(psi, final)
    total = wrap_phase(np.angle(overlap))
    norm = float(np.linalg.norm(final))
    return ExchangeOutcome(
        total_phase=total,
        exchange_part=wrap_phase(two_s * math.pi),
        spatial_dynamical_part=wrap_phase(schedule.spatial_dynamical_phase),
        fidelity=float(abs(overlap) ** 2),
        truncation_leakage=abs(1.0 - norm),
    )
