"""Parameterized Hermitian families, parameter loops and the family registry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .linalg import hermitian_defect

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class GapCollapseError(ValueError):
    pass


@dataclass(frozen=True)
class HamiltonianFamily:
    """lambda -> H(lambda) with a selected cluster of ``degeneracy`` levels.

    ``level`` is the index (ascending order) of the lowest eigenvalue in the
    cluster. ``reference_params`` anchors the default smooth gauge used for
    connection sampling.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    param_dim: int
    level: int = 0
    degeneracy: int = 1
    gap_floor: float = 1e-6
    cluster_width: float = 1e-8
    reference_params: tuple[float, ...] | None = None
    name: str = ""

    def hamiltonian(self, lam) -> np.ndarray:
        lam = self._params(lam)
        h = np.asarray(self.evaluator(lam), dtype=complex)
        if hermitian_defect(h) > 1e-10 * max(1.0, float(np.max(np.abs(h)))):
            raise ValueError(f"family {self.name!r} returned a non-Hermitian matrix at {lam}")
        return h

    def spectrum_frame(self, lam) -> tuple[np.ndarray, np.ndarray]:
        lam = self._params(lam)
        w, v = np.linalg.eigh(self.hamiltonian(lam))
        lo, hi = self.level, self.level + self.degeneracy
        if hi > len(w):
            raise ValueError(f"cluster [{lo}, {hi}) exceeds dimension {len(w)}")
        width = float(w[hi - 1] - w[lo])
        if width > self.cluster_width:
            raise GapCollapseError(f"cluster at lambda={tuple(lam)} is split by {width:.3e}")
        gaps = []
        if lo > 0:
            gaps.append(w[lo] - w[lo - 1])
        if hi < len(w):
            gaps.append(w[hi] - w[hi - 1])
        gap = float(min(gaps)) if gaps else math.inf
        if gap < self.gap_floor:
            raise GapCollapseError(f"gap collapsed at lambda={tuple(lam)}: gap {gap:.3e} < {self.gap_floor:.1e}")
        return w[lo:hi], v[:, lo:hi]

    def frame(self, lam) -> np.ndarray:
        return self.spectrum_frame(lam)[1]

    def energy(self, lam) -> float:
        return float(np.mean(self.spectrum_frame(lam)[0]))

    def frames_along(self, samples: Iterable) -> Iterator[np.ndarray]:
        for lam in samples:
            yield self.frame(lam)

    def reference_frame(self) -> np.ndarray:
        ref = self.reference_params if self.reference_params is not None else (0.0,) * self.param_dim
        return self.frame(ref)

    def _params(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float).reshape(-1)
        if lam.shape != (self.param_dim,):
            raise ValueError(f"family {self.name!r} takes {self.param_dim} parameters, got {lam.shape[0]}")
        return lam


@dataclass(frozen=True)
class ParameterLoop:
    """Closed sequence of parameter points; the last sample repeats the first.

    ``periods`` marks angle-like coordinates (0 = not periodic); for those the
    last sample need only agree with the first modulo the period, and segment
    steps are taken as the shortest representative.
    """

    samples: np.ndarray
    refinement: int = 0
    periods: tuple[float, ...] | None = None

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if len(s) < 3:
            raise ValueError("a loop needs at least 3 samples")
        periods = (0.0,) * s.shape[1] if self.periods is None else tuple(float(p) for p in self.periods)
        if len(periods) != s.shape[1]:
            raise ValueError(f"need one period per coordinate ({s.shape[1]}), got {len(periods)}")
        gap = _wrap_periodic(s[-1] - s[0], periods)
        if np.max(np.abs(gap)) > 1e-12:
            raise ValueError("loop is not closed: first and last samples differ")
        if not any(periods):
            s[-1] = s[0]
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "periods", periods)

    def steps(self) -> np.ndarray:
        """Segment displacement vectors, shape (n_segments, k)."""
        return _wrap_periodic(np.diff(self.samples, axis=0), self.periods)

    @property
    def n_segments(self) -> int:
        return len(self.samples) - 1

    @property
    def param_dim(self) -> int:
        return self.samples.shape[1]

    def refined(self) -> "ParameterLoop":
        mids = self.samples[:-1] + 0.5 * self.steps()
        out = np.empty((2 * len(mids) + 1, self.param_dim))
        out[0::2] = self.samples
        out[1::2] = mids
        return ParameterLoop(out, self.refinement + 1, self.periods)

    def reversed(self) -> "ParameterLoop":
        return ParameterLoop(self.samples[::-1], self.refinement, self.periods)

    def max_step(self) -> float:
        return float(np.max(np.linalg.norm(self.steps(), axis=1)))

    @classmethod
    def from_function(cls, fn: Callable[[float], Iterable[float]], n: int,
                      periods: tuple[float, ...] | None = None) -> "ParameterLoop":
        """Sample ``fn`` on t = k/n, k = 0..n; fn(1) must equal fn(0) (modulo periods)."""
        pts = np.array([np.atleast_1d(fn(k / n)) for k in range(n + 1)], dtype=float)
        return cls(pts, 0, periods)

    @classmethod
    def from_vertices(cls, vertices, n_per_edge: int = 50) -> "ParameterLoop":
        """Closed polyline through ``vertices`` with ``n_per_edge`` samples per edge."""
        v = np.asarray(vertices, dtype=float)
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        nxt = np.roll(v, -1, axis=0)
        s = np.arange(n_per_edge)[:, None, None] / n_per_edge
        pts = (v[None] + s * (nxt - v)[None]).transpose(1, 0, 2).reshape(-1, v.shape[1])
        return cls(np.vstack([pts, pts[:1]]))

    def lifted(self, extra: Callable[[float], float] | None = None) -> "ParameterLoop":
        """Append one parameter; ``extra(t)`` for t in [0, 1] (zero by default)."""
        n = self.n_segments
        col = np.array([0.0 if extra is None else float(extra(k / n)) for k in range(n + 1)])
        col[-1] = col[0]
        return ParameterLoop(np.column_stack([self.samples, col]), self.refinement, (*self.periods, 0.0))


def _wrap_periodic(delta: np.ndarray, periods: tuple[float, ...]) -> np.ndarray:
    out = np.array(delta, dtype=float)
    for i, p in enumerate(periods):
        if p:
            out[..., i] -= p * np.round(out[..., i] / p)
    return out


def cone_loop(theta: float, n: int = 2000, phi0: float = 0.0) -> ParameterLoop:
    """(theta, phi) loop at fixed polar angle, phi running once counter-clockwise."""
    return ParameterLoop.from_function(lambda t: (theta, phi0 + 2 * math.pi * t), n, (0.0, 2 * math.pi))


def circle_loop(center, radius: float, n: int = 1000, start_angle: float = 0.0, turns: int = 1) -> ParameterLoop:
    cx, cy = center
    return ParameterLoop.from_function(
        lambda t: (cx + radius * math.cos(start_angle + 2 * math.pi * turns * t),
                   cy + radius * math.sin(start_angle + 2 * math.pi * turns * t)),
        n,
    )


def ellipse_loop(center, a: float, b: float, n: int = 1000, tilt: float = 0.0, start=None) -> ParameterLoop:
    """Ellipse with semi-axes a, b; rotated so the loop starts at ``start`` if given."""
    cx, cy = center
    c, s = math.cos(tilt), math.sin(tilt)

    def point(t):
        x, y = a * math.cos(2 * math.pi * t), b * math.sin(2 * math.pi * t)
        return cx + c * x - s * y, cy + s * x + c * y

    loop = ParameterLoop.from_function(point, n)
    return loop if start is None else rebase_loop(loop, start)


def rebase_loop(loop: ParameterLoop, start) -> ParameterLoop:
    """Same loop with a straight out-and-back spur from ``start`` to the nearest sample."""
    start = np.asarray(start, dtype=float)
    body = loop.samples[:-1]
    k = int(np.argmin(np.linalg.norm(body - start, axis=1)))
    body = np.roll(body, -k, axis=0)
    gap = float(np.linalg.norm(body[0] - start))
    if gap < 1e-14:
        return ParameterLoop(np.vstack([body, body[:1]]), loop.refinement)
    step = np.median(np.linalg.norm(np.diff(loop.samples, axis=0), axis=1))
    m = max(1, int(math.ceil(gap / step)))
    out = start + np.linspace(0.0, 1.0, m + 1)[:, None] * (body[0] - start)
    back = out[::-1][1:]
    return ParameterLoop(np.vstack([out, body[1:], body[:1], back]), loop.refinement)


# --- registered toy families -------------------------------------------------

def spin_half_cone_family() -> HamiltonianFamily:
    """H(theta, phi) = -n(theta, phi).sigma; the ground state is aligned with n."""

    def h(lam):
        theta, phi = lam
        n = (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))
        return -(n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z)

    return HamiltonianFamily(h, 2, level=0, degeneracy=1, reference_params=(0.0, 0.0), name="spin_half_cone")


def constant_family(dim: int = 3, degeneracy: int = 2, param_dim: int = 2) -> HamiltonianFamily:
    energies = np.concatenate([-np.ones(degeneracy), np.arange(1, dim - degeneracy + 1, dtype=float)])
    h0 = np.diag(energies).astype(complex)
    return HamiltonianFamily(lambda lam: h0, param_dim, 0, degeneracy, name="constant")


ROTATED_BLOCK_ENERGIES = (-1.0, -1.0, 1.0, 2.0)


def rotated_block_generators() -> tuple[np.ndarray, np.ndarray]:
    """Two fixed non-commuting 4x4 Hermitian generators."""
    k1 = np.array([[0.3, 0.0, 0.5, 0.2j],
                   [0.0, -0.1, 0.4, 0.1],
                   [0.5, 0.4, 0.0, 0.0],
                   [-0.2j, 0.1, 0.0, 0.2]], dtype=complex)
    k2 = np.array([[0.0, 0.6j, 0.1, 0.0],
                   [-0.6j, 0.2, 0.0, 0.3],
                   [0.1, 0.0, -0.3, 0.5j],
                   [0.0, 0.3, -0.5j, 0.0]], dtype=complex)
    return k1, k2


def rotated_block_family() -> HamiltonianFamily:
    """H(l1, l2) = W H0 W^dagger with W = exp(-i l1 K1) exp(-i l2 K2); D = 2 ground cluster."""
    from scipy.linalg import expm

    k1, k2 = rotated_block_generators()
    h0 = np.diag(ROTATED_BLOCK_ENERGIES).astype(complex)

    def h(lam):
        w = expm(-1j * lam[0] * k1) @ expm(-1j * lam[1] * k2)
        out = w @ h0 @ w.conj().T
        return 0.5 * (out + out.conj().T)

    return HamiltonianFamily(h, 2, level=0, degeneracy=2, reference_params=(0.0, 0.0), name="rotated_block")


FAMILY_REGISTRY: dict[str, Callable[..., object]] = {
    "spin_half_cone": spin_half_cone_family,
    "constant": constant_family,
    "rotated_block": rotated_block_family,
}


def make_family(name: str, **params):
    if name == "holomorphic":
        from .holomorphic import make_holomorphic_family

        return make_holomorphic_family(**params)
    try:
        factory = FAMILY_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted([*FAMILY_REGISTRY, "holomorphic"]))
        raise KeyError(f"unknown family {name!r}; known: {known}") from None
    return factory(**params)
