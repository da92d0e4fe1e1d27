"""Independent reference computations shared by the tests.

The frozen numbers were produced by the functions below and are kept as
literals so the fast tests do not depend on the oracle code paths.
"""

import math

import numpy as np
from scipy.linalg import expm

from exchange_lab.families import PAULI_X, PAULI_Y, PAULI_Z, rotated_block_generators
from exchange_lab.linalg import TimeGrid, timeordered_evolve

# dense adiabatic evolution around the cone, dynamical phase removed,
# Richardson-extrapolated in 1/T from T = 400 and T = 800
CONE_ORACLE = {
    math.pi / 6: -0.42087951255158895,
    math.pi / 3: -1.5707929859006358,
    math.pi / 2: -3.1415726986246906,
}

# closed-form path-ordered product for the rotated block family, rectangle
# (0,0) -> (0.7,0) -> (0.7,0.5) -> (0,0.5)
RECTANGLE = (0.7, 0.5)
RECTANGLE_PHASES = (-0.031934257399328266, 0.01921255348406603)


def cone_dense_phase(theta: float, T: float, steps_per_time: int = 20) -> float:
    def h(t):
        phi = 2 * math.pi * t / T
        return -(math.sin(theta) * (math.cos(phi) * PAULI_X + math.sin(phi) * PAULI_Y) + math.cos(theta) * PAULI_Z)

    _, v = np.linalg.eigh(h(0.0))
    psi = v[:, 0]
    u = timeordered_evolve(h, TimeGrid(0.0, T, int(steps_per_time * T)))
    # ground energy is -1 throughout, so the dynamical phase is +T
    return float(np.angle(np.vdot(psi, u @ psi) * np.exp(-1j * T)))


def cone_richardson(theta: float) -> float:
    p = np.unwrap([cone_dense_phase(theta, T) for T in (400.0, 800.0)])
    return float(2 * p[1] - p[0])


def rectangle_holonomy(a: float, b: float) -> np.ndarray:
    """Edges have constant connection in the gauge W(lambda) P, so each is one exponential."""
    k1, k2 = rotated_block_generators()
    p = np.eye(4)[:, :2]

    def a1(l2):
        return p.T @ expm(1j * l2 * k2) @ k1 @ expm(-1j * l2 * k2) @ p

    a2 = p.T @ k2 @ p
    return expm(-1j * b * a2) @ expm(-1j * a * a1(b)) @ expm(1j * b * a2) @ expm(1j * a * a1(0.0))


def holomorphic_loop_phase(loop, sheet_scale: float = 3.0, degeneracy: int = 2) -> tuple[float, int]:
    """Overall phase of B U_L for one puncture at the origin and its winding.

    Orbit factor: minus the eta-area. Sheet factor: -kappa^2 times the
    integral of Im(conj(r) dr) along the continued root r = eta^(1/D).
    """
    eta = loop.samples[:, 0] + 1j * loop.samples[:, 1]
    area = 0.5 * np.sum(np.imag(np.conj(eta[:-1]) * eta[1:]))
    arg = np.unwrap(np.angle(eta))
    r = np.abs(eta) ** (1 / degeneracy) * np.exp(1j * arg / degeneracy)
    mid = 0.5 * (r[1:] + r[:-1])
    phase = -area - sheet_scale ** 2 * np.sum(np.imag(np.conj(mid) * np.diff(r)))
    winding = int(round((arg[-1] - arg[0]) / (2 * math.pi)))
    return float(phase), winding
