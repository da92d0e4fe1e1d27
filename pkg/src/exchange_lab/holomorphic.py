"""Toy degenerate family whose states depend holomorphically on a planar position.

The loop parameter is eta = (x + i y) / l_B. Frame vector a (a = 0..D-1) is a
product of two coherent states in truncated oscillator factors,

    v_a(eta) = |eta / sqrt 2> (x) |kappa c_a(eta)>,
    c_a(eta) = omega^a prod_j (eta - p_j)^(1/D),   omega = exp(2 pi i / D),

with unnormalized coherent amplitudes alpha^n / sqrt(n!). Normalizing the
first factor supplies the Gaussian exp(-|eta|^2 / 4). The D branches of the
root are the D sheets; carrying eta once around a puncture permutes them
cyclically, so the matrix part of the holonomy is a pure monodromy while all
sheets share the same scalar (area-type) phase.

Perturbations shift the sheet amplitudes kappa c_a: ``antiholomorphic`` adds
eps |eta|^2, ``extra-parameter`` adds a third loop coordinate u and adds eps u.
A shift by eps conj(eta) alone would not do: it changes the Berry curvature
of every sheet by the same amount, which only moves the overall phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .anyons import PlanarPath, winding_numbers
from .families import HamiltonianFamily, ParameterLoop
from .holonomy import holonomy_overlap, projective_distance

TRUNCATION_TOL = 1e-10
MODES = ("antiholomorphic", "extra-parameter")


class TruncationError(ValueError):
    pass


class PunctureCollisionError(ValueError):
    pass


def _coherent_columns(beta: np.ndarray, n: int) -> np.ndarray:
    """Normalized truncated coherent states, one column per entry of ``beta``."""
    k = np.arange(n)[:, None]
    beta = np.asarray(beta, dtype=complex)[None, :]
    out = np.zeros((n, beta.shape[1]), dtype=complex)
    nz = np.abs(beta[0]) > 0
    out[0, ~nz] = 1.0
    if np.any(nz):
        b = beta[:, nz]
        logs = k * np.log(b) - 0.5 * gammaln(k + 1) - 0.5 * np.abs(b) ** 2
        out[:, nz] = np.exp(logs)
    return out


def _poisson_cutoff(mean: float, tol: float = TRUNCATION_TOL) -> int:
    """Smallest n with P(Poisson(mean) >= n) < tol."""
    n = int(mean) + 1
    while poisson.sf(n - 1, mean) >= tol:
        n += 1
    return n


@dataclass(frozen=True)
class HolomorphicFamily:
    punctures: tuple[complex, ...]
    l_b: float
    n_sheet: int
    n_orbit: int
    degeneracy: int
    epsilon: float = 0.0
    mode: str = "antiholomorphic"
    sheet_scale: float = 3.0
    working_radius: float = 4.0

    @property
    def param_dim(self) -> int:
        return 3 if self.mode == "extra-parameter" else 2

    @property
    def dimension(self) -> int:
        return self.n_orbit * self.n_sheet

    @property
    def puncture_eta(self) -> np.ndarray:
        return np.asarray(self.punctures, dtype=complex) / self.l_b

    def with_epsilon(self, epsilon: float) -> "HolomorphicFamily":
        return replace(self, epsilon=float(epsilon))

    # -- amplitudes -----------------------------------------------------------

    def _eta(self, lam: np.ndarray) -> complex:
        return complex(lam[0], lam[1]) / self.l_b

    def _perturbation(self, eta: complex, lam: np.ndarray) -> complex:
        if self.epsilon == 0.0:
            return 0.0
        if self.mode == "antiholomorphic":
            return self.epsilon * abs(eta) ** 2
        return self.epsilon * lam[2]

    def _root(self, log_sum: complex) -> complex:
        return np.exp(log_sum / self.degeneracy)

    def _sheet_amplitudes(self, root: complex, shift: complex) -> np.ndarray:
        omega = np.exp(2j * np.pi * np.arange(self.degeneracy) / self.degeneracy)
        return self.sheet_scale * omega * root + shift

    def _frame_from(self, eta: complex, betas: np.ndarray) -> np.ndarray:
        orbit = _coherent_columns([eta / math.sqrt(2.0)], self.n_orbit)[:, 0]
        sheets = _coherent_columns(betas, self.n_sheet)
        tail = max(1.0 - float(np.vdot(orbit, orbit).real),
                   float(np.max(1.0 - np.sum(np.abs(sheets) ** 2, axis=0))))
        if tail > TRUNCATION_TOL:
            raise TruncationError(f"truncation error {tail:.2e} at eta = {eta:.4g}; raise N or stay inside the working disk")
        gram = sheets.conj().T @ sheets
        w, v = np.linalg.eigh(gram)
        if w[0] < 1e-8:
            raise ValueError(f"sheets nearly coincide at eta = {eta:.4g}")
        sheets = sheets @ ((v / np.sqrt(w)) @ v.conj().T)
        return np.kron(orbit[:, None], sheets)

    def _check(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float).reshape(-1)
        if lam.shape != (self.param_dim,):
            raise ValueError(f"holomorphic family takes {self.param_dim} parameters, got {lam.shape[0]}")
        return lam

    def frame(self, lam) -> np.ndarray:
        """Orthonormalized frame on the principal branch of the root."""
        lam = self._check(lam)
        eta = self._eta(lam)
        d = eta - self.puncture_eta
        if np.min(np.abs(d)) == 0.0:
            raise PunctureCollisionError(f"parameter point {eta} sits on a puncture")
        root = self._root(np.sum(np.log(d)))
        return self._frame_from(eta, self._sheet_amplitudes(root, self._perturbation(eta, lam)))

    def frames_along(self, samples) -> "list[np.ndarray] | object":
        """Frames analytically continued along the samples (unwrapped logarithms)."""
        samples = np.asarray(samples, dtype=float)
        etas = (samples[:, 0] + 1j * samples[:, 1]) / self.l_b
        d = etas[:, None] - self.puncture_eta[None, :]
        if np.min(np.abs(d)) == 0.0:
            raise PunctureCollisionError("loop passes through a puncture")
        logs = np.log(np.abs(d)) + 1j * np.unwrap(np.angle(d), axis=0)
        roots = np.exp(np.sum(logs, axis=1) / self.degeneracy)
        for lam, eta, root in zip(samples, etas, roots):
            lam = self._check(lam)
            yield self._frame_from(eta, self._sheet_amplitudes(root, self._perturbation(eta, lam)))

    def reference_frame(self) -> np.ndarray:
        raise NotImplementedError("the holomorphic family has no global reference gauge; use overlap holonomy")

    def unnormalized_amplitudes(self, lam, sheet: int = 0, offset: complex = 0.0) -> np.ndarray:
        """alpha^n/sqrt(n!) (x) beta^n/sqrt(n!) at eta + offset, continued from eta."""
        lam = self._check(lam)
        eta = self._eta(lam)
        d = eta - self.puncture_eta
        logs = np.log(d) + np.log1p(offset / d)
        root = self._root(np.sum(logs))
        beta = self._sheet_amplitudes(root, self._perturbation(eta + offset, lam))[sheet]
        alpha = (eta + offset) / math.sqrt(2.0)
        k = np.arange(self.n_orbit)
        orbit = alpha ** k / np.exp(0.5 * gammaln(k + 1))
        k = np.arange(self.n_sheet)
        sheet_amp = beta ** k / np.exp(0.5 * gammaln(k + 1))
        return np.kron(orbit, sheet_amp)

    def cauchy_riemann_residual(self, lam, h: float = 1e-3, points: int = 16) -> float:
        """max_a max |d amplitude / d conj(eta)| / max |amplitude|.

        The derivative uses a ring of ``points`` samples at radius h, which
        annihilates holomorphic terms up to order points - 1.
        """
        theta = 2 * np.pi * np.arange(points) / points
        worst = 0.0
        for a in range(self.degeneracy):
            acc = 0.0
            for t in theta:
                acc = acc + np.exp(1j * t) * self.unnormalized_amplitudes(lam, a, h * np.exp(1j * t))
            dbar = acc / (points * h)
            scale = float(np.max(np.abs(self.unnormalized_amplitudes(lam, a))))
            worst = max(worst, float(np.max(np.abs(dbar))) / scale)
        return worst

    def hamiltonian(self, lam) -> np.ndarray:
        f = self.frame(lam)
        return -(f @ f.conj().T)

    def induced_hamiltonian_family(self, gap_floor: float = 1e-6) -> HamiltonianFamily:
        """H(lambda) = -P(lambda): the frame span is the degenerate ground cluster."""
        return HamiltonianFamily(self.hamiltonian, self.param_dim, 0, self.degeneracy,
                                 gap_floor=gap_floor, name="holomorphic")

    def windings(self, loop: ParameterLoop) -> tuple[int, ...]:
        """Winding numbers of the loop's planar projection around each puncture."""
        path = PlanarPath(loop.samples[:-1, :2])
        pts = np.column_stack([np.real(self.punctures), np.imag(self.punctures)])
        return tuple(int(w) for w in winding_numbers(path, pts))

    def monodromy(self, loop: ParameterLoop) -> np.ndarray:
        """Cyclic sheet shift C^(sum of windings) with C e_a = e_(a+1)."""
        total = sum(self.windings(loop))
        shift = np.roll(np.eye(self.degeneracy), 1, axis=0)
        return np.linalg.matrix_power(shift, total % self.degeneracy).astype(complex)


class HolomorphicSetup(NamedTuple):
    family: HolomorphicFamily
    hamiltonian_family: HamiltonianFamily


def make_holomorphic_family(punctures: Sequence[complex] = (0.0,), l_b: float = 1.0, n: int | None = None,
                            degeneracy: int = 2, epsilon: float = 0.0, mode: str = "antiholomorphic",
                            sheet_scale: float = 3.0, working_radius: float = 4.0,
                            extra_extent: float = 1.0) -> HolomorphicFamily:
    """Build the toy family.

    ``n`` is the truncation of the sheet oscillator; None picks the smallest
    value meeting the truncation tolerance over the working disk
    |x + i y| <= working_radius (and |u| <= extra_extent). The orbit factor
    truncation is always chosen automatically. Use
    ``family.induced_hamiltonian_family()`` for the matching Hamiltonian family.
    """
    pts = tuple(complex(p) for p in punctures)
    if not pts:
        raise ValueError("at least one puncture is required")
    for i in range(len(pts)):
        for j in range(i):
            if abs(pts[i] - pts[j]) < 1e-12:
                raise PunctureCollisionError(f"punctures {i} and {j} coincide at {pts[i]}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if degeneracy < 1 or l_b <= 0 or sheet_scale <= 0 or working_radius <= 0:
        raise ValueError("degeneracy, l_b, sheet_scale and working_radius must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    r_eta = working_radius / l_b
    ring = r_eta * np.exp(2j * np.pi * np.arange(720) / 720)
    eta_p = np.asarray(pts) / l_b
    root_max = float(np.max(np.prod(np.abs(ring[:, None] - eta_p[None, :]), axis=1) ** (1.0 / degeneracy)))
    pert_max = epsilon * (r_eta ** 2 if mode == "antiholomorphic" else extra_extent)
    # 1.05 margin for the sampled maximum on the ring
    sheet_mean = (sheet_scale * 1.05 * root_max + pert_max) ** 2
    needed = _poisson_cutoff(sheet_mean)
    if n is None:
        n = needed
    elif n < needed:
        raise TruncationError(f"N = {n} is too small for the working disk; need at least {needed}")
    n_orbit = _poisson_cutoff(r_eta ** 2 / 2)
    return HolomorphicFamily(pts, float(l_b), int(n), n_orbit, int(degeneracy), float(epsilon), mode,
                             float(sheet_scale), float(working_radius))


def make_holomorphic_setup(**kwargs) -> HolomorphicSetup:
    fam = make_holomorphic_family(**kwargs)
    return HolomorphicSetup(fam, fam.induced_hamiltonian_family())


@dataclass(frozen=True)
class DeviationTable:
    epsilons: tuple[float, ...]
    max_residuals: tuple[float, ...]
    pair_residuals: tuple[tuple[float, ...], ...]

    @property
    def non_decreasing(self) -> bool:
        r = self.max_residuals
        return all(b >= a for a, b in zip(r, r[1:]))

    def rows(self) -> list[dict]:
        return [{"epsilon": e, "max_residual": r} for e, r in zip(self.epsilons, self.max_residuals)]


def robustness_break_probe(family: HolomorphicFamily,
                           loop_pairs: Sequence[tuple[ParameterLoop, ParameterLoop]],
                           eps_sweep: Sequence[float]) -> DeviationTable:
    """For each epsilon, max over pairs of the projective residual between the pair's B U_L."""
    for i, (l1, l2) in enumerate(loop_pairs):
        if family.windings(l1) != family.windings(l2):
            raise ValueError(f"loop pair {i} is not homotopic: windings {family.windings(l1)} vs {family.windings(l2)}")
        if not np.allclose(l1.samples[0], l2.samples[0]):
            raise ValueError(f"loop pair {i} does not share a base point")
    per_eps = []
    for eps in eps_sweep:
        fam = family.with_epsilon(eps)
        row = []
        for l1, l2 in loop_pairs:
            w1 = holonomy_overlap(fam, l1).loop_unitary
            w2 = holonomy_overlap(fam, l2).loop_unitary
            row.append(projective_distance(w1, w2).residual)
        per_eps.append(tuple(row))
    return DeviationTable(tuple(float(e) for e in eps_sweep), tuple(max(r) for r in per_eps), tuple(per_eps))
