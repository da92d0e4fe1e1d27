"""Plain-text inputs: planar paths and field grids.

Path file: one vertex per line as ``x y``; blank lines and ``#`` comments are
ignored. A closing vertex equal to the first one is optional.

Grid file: first non-comment line ``x0 y0 h nx ny`` (lower-left corner, cell
size, cell counts), followed by ``ny`` rows of ``nx`` B_z values. Row j holds
the cells with centres at y = y0 + (j + 1/2) h, so the first row is the bottom.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..anyons import FieldMap, PlanarPath


def _data_lines(path: Path) -> list[tuple[int, list[str]]]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line.split()))
    return out


def _floats(tokens: list[str], where: str) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ValueError(f"{where}: expected numbers, got {' '.join(tokens)!r}") from None


def read_vertices(path) -> np.ndarray:
    rows = []
    for lineno, tokens in _data_lines(path):
        if len(tokens) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'x y', got {len(tokens)} fields")
        rows.append(_floats(tokens, f"{path}:{lineno}"))
    if not rows:
        raise ValueError(f"{path}: no vertices")
    return np.array(rows)


def read_path(path, closed: bool = True) -> PlanarPath:
    return PlanarPath(read_vertices(path), closed)


def write_path(path, vertices) -> None:
    lines = [f"{float(x)!r} {float(y)!r}" for x, y in np.asarray(vertices, dtype=float)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_grid(path) -> FieldMap:
    lines = _data_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty grid file")
    lineno, header = lines[0]
    if len(header) != 5:
        raise ValueError(f"{path}:{lineno}: header must be 'x0 y0 h nx ny'")
    x0, y0, h, nx, ny = _floats(header, f"{path}:{lineno}")
    if nx != int(nx) or ny != int(ny) or nx < 1 or ny < 1:
        raise ValueError(f"{path}:{lineno}: nx and ny must be positive integers")
    nx, ny = int(nx), int(ny)
    rows = lines[1:]
    if len(rows) != ny:
        raise ValueError(f"{path}: expected {ny} sample rows, found {len(rows)}")
    samples = np.empty((ny, nx))
    for j, (ln, tokens) in enumerate(rows):
        if len(tokens) != nx:
            raise ValueError(f"{path}:{ln}: expected {nx} samples, got {len(tokens)}")
        samples[j] = _floats(tokens, f"{path}:{ln}")
    return FieldMap.grid(samples, (x0, y0), h)


def write_field_grid(path, field: FieldMap) -> None:
    if not field.is_grid:
        raise ValueError("only grid fields can be written")
    ny, nx = field.samples.shape
    x0, y0 = field.origin
    lines = [f"{x0!r} {y0!r} {field.h!r} {nx} {ny}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in field.samples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
