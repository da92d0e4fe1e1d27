"""Abelian flux-charge anyons: winding phases and enclosed external flux.

Charge and flux are folded into phase units, so q * Phi is the pair phase in
radians for one full mutual encirclement. Paths are closed polylines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import wrap_phase

WINDING_RESIDUAL_TOL = 1e-6
ON_PATH_TOL = 1e-9
DEFAULT_RESOLUTION = 400
_CHUNK = 1 << 20  # point-edge pairs per vectorized block


class PointOnPathError(ValueError):
    pass


@dataclass(frozen=True)
class AnyonSpecies:
    charge: float
    flux: float

    @property
    def pair_phase(self) -> float:
        """q * Phi, the phase for one full mutual encirclement."""
        return self.charge * self.flux

    @property
    def statistics_angle(self) -> float:
        """q * Phi / 2, the exchange (half-encirclement) phase."""
        return 0.5 * self.charge * self.flux


@dataclass(frozen=True)
class PlanarPath:
    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"vertices must be an (n, 2) array, got shape {v.shape}")
        if self.closed and len(v) > 1 and np.all(v[0] == v[-1]):
            v = v[:-1]
        if self.closed and len(v) < 3:
            raise ValueError("a closed path needs at least 3 vertices")
        nxt = np.roll(v, -1, axis=0) if self.closed else v[1:]
        cur = v if self.closed else v[:-1]
        if np.any(np.all(nxt == cur, axis=1)):
            raise ValueError("consecutive vertices must be distinct")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def scale(self) -> float:
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(max(np.hypot(*span), 1e-300))

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.closed:
            return self.vertices[:-1], self.vertices[1:]
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise loops."""
        a, b = self.edges()
        return 0.5 * float(np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))

    def reversed(self) -> "PlanarPath":
        return PlanarPath(self.vertices[::-1], self.closed)

    def refined(self, factor: int = 2) -> "PlanarPath":
        """Insert factor - 1 evenly spaced points on every edge."""
        a, b = self.edges()
        s = np.arange(factor)[:, None, None] / factor
        pts = (a[None] + s * (b - a)[None]).transpose(1, 0, 2).reshape(-1, 2)
        if not self.closed:
            pts = np.vstack([pts, self.vertices[-1:]])
        return PlanarPath(pts, self.closed)

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])


def _segment_distances(path: PlanarPath, points: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest path segment."""
    a, b = path.edges()
    d = b - a
    dd = np.sum(d * d, axis=1)
    out = np.empty(len(points))
    step = max(1, _CHUNK // len(a))
    for i in range(0, len(points), step):
        p = points[i:i + step, None, :]
        t = np.clip(np.sum((p - a[None]) * d[None], axis=2) / dd[None], 0.0, 1.0)
        gap = p - (a[None] + t[..., None] * d[None])
        out[i:i + step] = np.sqrt(np.min(np.sum(gap * gap, axis=2), axis=1))
    return out


def _raw_windings(path: PlanarPath, points: np.ndarray) -> np.ndarray:
    """Summed subtended angles / 2 pi, unrounded."""
    a, b = path.edges()
    total = np.empty(len(points))
    step = max(1, _CHUNK // len(a))
    for i in range(0, len(points), step):
        p = points[i:i + step, None, :]
        pa = a[None] - p
        pb = b[None] - p
        cross = pa[..., 0] * pb[..., 1] - pa[..., 1] * pb[..., 0]
        dot = np.sum(pa * pb, axis=2)
        total[i:i + step] = np.sum(np.arctan2(cross, dot), axis=1)
    return total / (2 * math.pi)


def winding_numbers(path: PlanarPath, points) -> np.ndarray:
    """Signed winding numbers of a closed path around each point."""
    if not path.closed:
        raise ValueError("winding numbers need a closed path")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dist = _segment_distances(path, pts)
    bad = dist <= ON_PATH_TOL * path.scale
    if np.any(bad):
        raise PointOnPathError(f"point {tuple(pts[np.argmax(bad)])} lies on the path")
    raw = _raw_windings(path, pts)
    w = np.rint(raw)
    residual = float(np.max(np.abs(raw - w))) if len(raw) else 0.0
    if residual > WINDING_RESIDUAL_TOL:
        raise ArithmeticError(f"winding sum not integral, residual {residual:.3e} turns")
    return w.astype(int)


def winding_number(path: PlanarPath, point) -> int:
    return int(winding_numbers(path, [point])[0])


def mutual_braid_phase(species: AnyonSpecies, path: PlanarPath, others: Sequence) -> float:
    """Sum of winding_j * q Phi over the other anyons, mod 2 pi."""
    if len(others) == 0:
        return 0.0
    w = winding_numbers(path, others)
    return wrap_phase(int(np.sum(w)) * species.pair_phase)


@dataclass(frozen=True)
class FieldMap:
    """External B_z in phase-per-area units.

    Either a uniform value ``b`` on an axis-aligned rectangle ``region``
    (``None`` means the whole plane), or a grid of cell-centred samples with
    lower-left corner ``origin`` and cell size ``h``.
    """

    b: float = 0.0
    region: tuple[float, float, float, float] | None = None
    samples: np.ndarray | None = None
    origin: tuple[float, float] = (0.0, 0.0)
    h: float = 1.0

    def __post_init__(self):
        if self.samples is not None:
            s = np.array(self.samples, dtype=float)
            if s.ndim != 2 or not np.all(np.isfinite(s)):
                raise ValueError("field samples must be a finite 2-D array")
            if self.h <= 0:
                raise ValueError("cell size must be positive")
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)
        elif self.region is not None:
            x0, x1, y0, y1 = self.region
            if not (x1 > x0 and y1 > y0):
                raise ValueError(f"degenerate field region {self.region}")
        if not math.isfinite(self.b):
            raise ValueError("field value must be finite")

    @classmethod
    def zero(cls) -> "FieldMap":
        return cls(0.0)

    @classmethod
    def uniform(cls, b: float, region=None) -> "FieldMap":
        return cls(b, None if region is None else tuple(float(x) for x in region))

    @classmethod
    def grid(cls, samples, origin=(0.0, 0.0), h: float = 1.0) -> "FieldMap":
        return cls(0.0, None, samples, tuple(float(x) for x in origin), float(h))

    @property
    def is_grid(self) -> bool:
        return self.samples is not None

    def total_flux(self) -> float:
        if self.is_grid:
            return float(np.sum(self.samples) * self.h ** 2)
        if self.region is None:
            return math.inf if self.b else 0.0
        x0, x1, y0, y1 = self.region
        return self.b * (x1 - x0) * (y1 - y0)


def _cell_windings(path: PlanarPath, centers: np.ndarray, h: float) -> np.ndarray:
    """Winding numbers at cell centres; a centre on the path is replaced by
    the mean over the two points half a cell away along the local normal."""
    w = np.zeros(len(centers))
    dist = _segment_distances(path, centers)
    on = dist <= ON_PATH_TOL * path.scale
    if np.any(~on):
        w[~on] = np.rint(_raw_windings(path, centers[~on]))
    if np.any(on):
        a, b = path.edges()
        for idx in np.flatnonzero(on):
            c = centers[idx]
            d = b - a
            t = np.clip(np.sum((c - a) * d, axis=1) / np.sum(d * d, axis=1), 0.0, 1.0)
            k = int(np.argmin(np.linalg.norm(a + t[:, None] * d - c, axis=1)))
            normal = np.array([-d[k, 1], d[k, 0]]) / np.linalg.norm(d[k])
            probes = np.array([c + 0.5 * h * normal, c - 0.5 * h * normal])
            w[idx] = np.mean(np.rint(_raw_windings(path, probes)))
    return w


def enclosed_external_flux(path: PlanarPath, field: FieldMap, resolution: int = DEFAULT_RESOLUTION) -> float:
    """Winding-weighted flux of ``field`` through ``path``.

    Uniform fields are integrated with a midpoint rule on a grid of
    ``resolution`` cells along the longer side of the integration window
    (the overlap of the path's bounding box with the field region). Grid
    fields use their own cells.
    """
    if not path.closed:
        raise ValueError("enclosed flux needs a closed path")
    if field.is_grid:
        ny, nx = field.samples.shape
        ox, oy = field.origin
        h = field.h
        px0, px1, py0, py1 = path.bbox()
        i0 = max(0, int(math.floor((px0 - ox) / h)))
        i1 = min(nx, int(math.ceil((px1 - ox) / h)))
        j0 = max(0, int(math.floor((py0 - oy) / h)))
        j1 = min(ny, int(math.ceil((py1 - oy) / h)))
        if i1 <= i0 or j1 <= j0:
            return 0.0
        xs = ox + (np.arange(i0, i1) + 0.5) * h
        ys = oy + (np.arange(j0, j1) + 0.5) * h
        vals = field.samples[j0:j1, i0:i1]
        mask = vals != 0
        if not np.any(mask):
            return 0.0
        X, Y = np.meshgrid(xs, ys)
        centers = np.column_stack([X[mask], Y[mask]])
        w = _cell_windings(path, centers, h)
        return float(np.sum(w * vals[mask]) * h * h)

    if field.b == 0.0:
        return 0.0
    x0, x1, y0, y1 = path.bbox()
    if field.region is not None:
        rx0, rx1, ry0, ry1 = field.region
        x0, x1, y0, y1 = max(x0, rx0), min(x1, rx1), max(y0, ry0), min(y1, ry1)
        if x1 <= x0 or y1 <= y0:
            return 0.0
    side = max(x1 - x0, y1 - y0)
    nx = max(1, int(math.ceil(resolution * (x1 - x0) / side)))
    ny = max(1, int(math.ceil(resolution * (y1 - y0) / side)))
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    X, Y = np.meshgrid(x0 + (np.arange(nx) + 0.5) * hx, y0 + (np.arange(ny) + 0.5) * hy)
    centers = np.column_stack([X.ravel(), Y.ravel()])
    w = _cell_windings(path, centers, min(hx, hy))
    return float(field.b * np.sum(w) * hx * hy)


def flux_refinement(path: PlanarPath, field: FieldMap, resolutions: Sequence[int]) -> list[float]:
    """Enclosed flux at successively finer resolutions (uniform fields only)."""
    return [enclosed_external_flux(path, field, r) for r in resolutions]


@dataclass(frozen=True)
class AnyonPhaseReport:
    topological: float
    geometric: float
    total: float
    windings: tuple[int, ...]
    enclosed_flux: float = 0.0


def total_anyon_phase(species: AnyonSpecies, path: PlanarPath, others: Sequence,
                      field: FieldMap | None = None, resolution: int = DEFAULT_RESOLUTION) -> AnyonPhaseReport:
    windings = tuple(int(w) for w in winding_numbers(path, others)) if len(others) else ()
    topo = wrap_phase(sum(windings) * species.pair_phase)
    flux = 0.0 if field is None else enclosed_external_flux(path, field, resolution)
    geo = wrap_phase(species.charge * flux)
    return AnyonPhaseReport(topo, geo, wrap_phase(topo + geo), windings, flux)


@dataclass(frozen=True)
class DeformationVerdict:
    report: AnyonPhaseReport
    topology_change: bool
    geometric_drift: float
    robust: bool


@dataclass(frozen=True)
class RobustnessTable:
    base: AnyonPhaseReport
    rows: tuple[DeformationVerdict, ...]
    threshold: float

    @property
    def robust(self) -> bool:
        return all(r.robust for r in self.rows)

    @property
    def max_drift(self) -> float:
        return max((abs(r.geometric_drift) for r in self.rows), default=0.0)


def deformation_robustness_probe(species: AnyonSpecies, base_path: PlanarPath, deformations: Sequence[PlanarPath],
                                 others: Sequence, field: FieldMap | None = None, threshold: float = 1e-9,
                                 resolution: int = DEFAULT_RESOLUTION) -> RobustnessTable:
    """Compare phase reports of deformed paths against the base path.

    The drift is q times the change in enclosed flux (not wrapped). A
    deformation that changes any winding number is flagged as a topology
    change and is never robust.
    """
    base = total_anyon_phase(species, base_path, others, field, resolution)
    rows = []
    for path in deformations:
        rep = total_anyon_phase(species, path, others, field, resolution)
        changed = rep.windings != base.windings
        drift = species.charge * (rep.enclosed_flux - base.enclosed_flux)
        rows.append(DeformationVerdict(rep, changed, drift, (not changed) and abs(drift) <= threshold))
    return RobustnessTable(base, tuple(rows), threshold)
