"""Braid words, unitary braid-group representations and comparison with holonomies.

Convention: the first letter of a word acts first, so the word
s_{i1}^{e1} s_{i2}^{e2} ... evaluates to B_{ik}^{ek} ... B_{i2}^{e2} B_{i1}^{e1}.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .holonomy import HolonomyResult, projective_distance
from .linalg import unitary_defect

UNITARY_TOL = 1e-10
_TOKEN = re.compile(r"^s(\d+)(?:\^(-?1))?$")


@dataclass(frozen=True)
class BraidWord:
    n_strands: int
    letters: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_strands < 2:
            raise ValueError(f"a braid needs at least 2 strands, got {self.n_strands}")
        letters = tuple((int(i), int(e)) for i, e in self.letters)
        for i, e in letters:
            if not 1 <= i <= self.n_strands - 1:
                raise ValueError(f"generator s{i} out of range for {self.n_strands} strands")
            if e not in (1, -1):
                raise ValueError(f"exponent must be +1 or -1, got {e}")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        """Concatenation: self acts first, then other."""
        if other.n_strands != self.n_strands:
            raise ValueError("cannot concatenate braids on different strand counts")
        return BraidWord(self.n_strands, self.letters + other.letters)

    def inverse(self) -> "BraidWord":
        return BraidWord(self.n_strands, tuple((i, -e) for i, e in reversed(self.letters)))

    @property
    def exponent_sum(self) -> int:
        return sum(e for _, e in self.letters)

    def __str__(self) -> str:
        return " ".join(f"s{i}" if e == 1 else f"s{i}^-1" for i, e in self.letters)


def parse_word(text: str, n_strands: int) -> BraidWord:
    """Parse whitespace-separated tokens ``s<i>`` / ``s<i>^-1`` (``s<i>^1`` also accepted)."""
    letters = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if m is None:
            raise ValueError(f"bad braid token {tok!r}; expected s<i> or s<i>^-1")
        letters.append((int(m.group(1)), int(m.group(2) or 1)))
    return BraidWord(n_strands, tuple(letters))


def reduce_word(w: BraidWord) -> BraidWord:
    """Cancel adjacent s_i s_i^-1 pairs until none remain."""
    stack: list[tuple[int, int]] = []
    for i, e in w.letters:
        if stack and stack[-1] == (i, -e):
            stack.pop()
        else:
            stack.append((i, e))
    return BraidWord(w.n_strands, tuple(stack))


@dataclass(frozen=True)
class BraidRepresentation:
    n_strands: int
    generator_images: Mapping[int, np.ndarray]

    def __post_init__(self):
        images = {}
        dims = set()
        for i in range(1, self.n_strands):
            if i not in self.generator_images:
                raise ValueError(f"missing image for generator s{i}")
            m = np.array(self.generator_images[i], dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"image of s{i} must be square, got shape {m.shape}")
            defect = unitary_defect(m)
            if defect > UNITARY_TOL:
                raise ValueError(f"image of s{i} is not unitary: defect {defect:.3e}")
            m.setflags(write=False)
            images[i] = m
            dims.add(m.shape[0])
        extra = set(self.generator_images) - set(images)
        if extra:
            raise ValueError(f"images given for generators outside 1..{self.n_strands - 1}: {sorted(extra)}")
        if len(dims) > 1:
            raise ValueError(f"generator images have different dimensions: {sorted(dims)}")
        object.__setattr__(self, "generator_images", images)

    @property
    def dimension(self) -> int:
        return next(iter(self.generator_images.values())).shape[0]

    def image(self, i: int, e: int = 1) -> np.ndarray:
        m = self.generator_images[i]
        return m if e == 1 else m.conj().T


class RelationReport(NamedTuple):
    braid_residual: float
    commute_residual: float
    worst_braid_pair: tuple[int, int] | None
    worst_commute_pair: tuple[int, int] | None
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.braid_residual, self.commute_residual) <= self.tol


def verify_representation(rep: BraidRepresentation, tol: float = 1e-9) -> RelationReport:
    """Worst residuals of the braid and far-commutation relations (Frobenius norm)."""
    n = rep.n_strands
    b = rep.generator_images
    braid, braid_at = 0.0, None
    for i in range(1, n - 1):
        r = float(np.linalg.norm(b[i] @ b[i + 1] @ b[i] - b[i + 1] @ b[i] @ b[i + 1]))
        if braid_at is None or r > braid:
            braid, braid_at = r, (i, i + 1)
    comm, comm_at = 0.0, None
    for i in range(1, n):
        for j in range(i + 2, n):
            r = float(np.linalg.norm(b[i] @ b[j] - b[j] @ b[i]))
            if comm_at is None or r > comm:
                comm, comm_at = r, (i, j)
    return RelationReport(braid, comm, braid_at, comm_at, tol)


def evaluate_word(rep: BraidRepresentation, w: BraidWord) -> np.ndarray:
    if w.n_strands != rep.n_strands:
        raise ValueError(f"word has {w.n_strands} strands, representation has {rep.n_strands}")
    out = np.eye(rep.dimension, dtype=complex)
    for i, e in w.letters:
        out = rep.image(i, e) @ out
    return out


def conjugate_representation(rep: BraidRepresentation, v: np.ndarray) -> BraidRepresentation:
    """Generator images B -> V^dagger B V."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (rep.dimension, rep.dimension):
        raise ValueError(f"V must be {rep.dimension}x{rep.dimension}, got {v.shape}")
    defect = unitary_defect(v)
    if defect > UNITARY_TOL:
        raise ValueError(f"V is not unitary: defect {defect:.3e}")
    return BraidRepresentation(rep.n_strands, {i: v.conj().T @ m @ v for i, m in rep.generator_images.items()})


def compare_braid_to_holonomy(rep: BraidRepresentation, w: BraidWord, hol: HolonomyResult | np.ndarray):
    """projective_distance(evaluate_word(rep, w), B U_L)."""
    target = hol.loop_unitary if isinstance(hol, HolonomyResult) else np.asarray(hol, dtype=complex)
    if target.shape != (rep.dimension, rep.dimension):
        raise ValueError(f"holonomy is {target.shape}, representation has dimension {rep.dimension}")
    return projective_distance(evaluate_word(rep, w), target)


# --- sample representations ----------------------------------------------------

def abelian_representation(n_strands: int, theta: float) -> BraidRepresentation:
    return BraidRepresentation(n_strands, {i: np.array([[np.exp(1j * theta)]]) for i in range(1, n_strands)})


def ising_representation() -> BraidRepresentation:
    """Three-strand Ising-type representation on a qubit."""
    s1 = np.exp(-1j * np.pi / 8) * np.diag([1, 1j])
    s2 = np.exp(1j * np.pi / 8) / np.sqrt(2) * np.array([[1, -1j], [-1j, 1]])
    return BraidRepresentation(3, {1: s1, 2: s2})


def fibonacci_representation() -> BraidRepresentation:
    """Three-strand Fibonacci-type representation on a qubit."""
    phi = (1 + np.sqrt(5)) / 2
    r = np.diag([np.exp(-4j * np.pi / 5), np.exp(3j * np.pi / 5)])
    f = np.array([[1 / phi, 1 / np.sqrt(phi)], [1 / np.sqrt(phi), -1 / phi]])
    return BraidRepresentation(3, {1: r, 2: f @ r @ f})


def sheet_monodromy_representation(degeneracy: int, n_strands: int = 2) -> BraidRepresentation:
    """Every generator maps to the principal square root of the cyclic sheet shift.

    A full counter-clockwise turn of the probe around one puncture is s_i s_i,
    which maps to the shift C with C e_a = e_(a+1).
    """
    d = degeneracy
    k = np.arange(d)
    # C is diagonalized by the Fourier basis with eigenvalues exp(-2 pi i k / d)
    fourier = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    half = np.exp(-1j * np.pi * k / d)
    root = fourier @ np.diag(half) @ fourier.conj().T
    return BraidRepresentation(n_strands, {i: root for i in range(1, n_strands)})


def random_word(rng: np.random.Generator, n_strands: int, length: int) -> BraidWord:
    idx = rng.integers(1, n_strands, size=length)
    exps = rng.choice([-1, 1], size=length)
    return BraidWord(n_strands, tuple(zip(idx.tolist(), exps.tolist())))
