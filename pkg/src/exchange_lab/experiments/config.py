"""Scenario configuration files (TOML) and their strict schema.

Top level::

    id = "fermion-swap"          # scenario id, also the default output stem
    kind = "ring-swap"           # selects the [params] schema
    output = "fermion_swap"      # optional output stem
    [params]                     # kind-specific, see the *Params models
    [tolerances]                 # output name -> tolerance; "default" for the rest
    [expect]                     # output name -> expected value (see Expectation)
    [[sweep]]                    # optional axes; the Cartesian product is run
    name = "spin"                # params key, dotted for nested tables
    values = [0.5, 1.0]

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("ring-swap", "spin-swap", "anyon-phase", "berry-holonomy", "robustness-sweep", "braid-check")


class ConfigError(ValueError):
    pass


def _half_integer(v: float) -> float:
    if v <= 0 or abs(2 * v - round(2 * v)) > 1e-12:
        raise ValueError(f"spin must be a positive multiple of 1/2, got {v!r}")
    return v


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Point = tuple[float, float]


# --- loops ---------------------------------------------------------------------

class ConeLoop(Strict):
    kind: Literal["cone"]
    theta: float
    n: int = Field(2000, ge=3)


class CircleLoop(Strict):
    kind: Literal["circle"]
    center: Point = (0.0, 0.0)
    radius: float = Field(gt=0)
    n: int = Field(1000, ge=3)
    turns: int = 1
    start_angle: float = 0.0
    start: Point | None = None


class EllipseLoop(Strict):
    kind: Literal["ellipse"]
    center: Point = (0.0, 0.0)
    a: float = Field(gt=0)
    b: float = Field(gt=0)
    tilt: float = 0.0
    n: int = Field(1000, ge=3)
    start: Point | None = None


class PolygonLoop(Strict):
    kind: Literal["polygon"]
    vertices: list[list[float]] = Field(min_length=3)
    n_per_edge: int = Field(50, ge=1)
    start: Point | None = None


class FileLoop(Strict):
    kind: Literal["file"]
    path: str
    n_per_edge: int = Field(50, ge=1)
    start: Point | None = None


LoopSpec = Annotated[Union[ConeLoop, CircleLoop, EllipseLoop, PolygonLoop, FileLoop], Field(discriminator="kind")]


class LoopPair(Strict):
    first: LoopSpec
    second: LoopSpec


# --- kind-specific parameter blocks ------------------------------------------------

class RingSwapParams(Strict):
    spin: float = Field(gt=0)
    m_max: int = Field(16, ge=1)
    n_steps: int = Field(10_000, ge=1)
    duration: float = Field(1.0, gt=0)
    profile: Literal["linear", "smoothstep", "overshoot"] = "linear"
    extra_phase: float = 0.0
    state_weights: dict[str, float] = Field(default_factory=lambda: {"0": 1.0, "1": 1.0})

    _spin = field_validator("spin")(_half_integer)

    @field_validator("state_weights")
    @classmethod
    def _integer_keys(cls, v):
        for k in v:
            try:
                int(k)
            except ValueError:
                raise ValueError(f"state_weights keys must be integers m, got {k!r}") from None
        if not any(w != 0 for w in v.values()):
            raise ValueError("state_weights are all zero")
        return v

    @model_validator(mode="after")
    def _swappable(self):
        ms = {int(k): w for k, w in self.state_weights.items()}
        if max(abs(m) for m in ms) > self.m_max:
            raise ValueError(f"state_weights use |m| > m_max = {self.m_max}")
        # the pi-rotated copy must stay orthogonal: equal weight on even and odd m
        norm = sum(w * w for w in ms.values())
        parity = sum(w * w * (-1) ** (m % 2) for m, w in ms.items())
        if abs(parity) > 1e-10 * norm:
            raise ValueError("state_weights must put equal weight on even and odd m for a swap")
        return self


class SpinSwapParams(Strict):
    spin: float = Field(gt=0)
    scenario: Literal["same-rotation", "inverse"] = "same-rotation"
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    detuning: float = 0.0
    n_steps: int = Field(2000, ge=1)
    duration: float = Field(1.0, gt=0)

    _spin = field_validator("spin")(_half_integer)

    @field_validator("axis")
    @classmethod
    def _nonzero(cls, v):
        if not any(v):
            raise ValueError("axis must be nonzero")
        return v


class FieldSpec(Strict):
    kind: Literal["none", "uniform", "grid"] = "none"
    b: float = 0.0
    region: tuple[float, float, float, float] | None = None
    grid_file: str | None = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "grid" and self.grid_file is None:
            raise ValueError("grid fields need grid_file")
        if self.kind != "grid" and self.grid_file is not None:
            raise ValueError("grid_file is only valid for kind = 'grid'")
        return self


class PathSpec(Strict):
    vertices: list[list[float]] | None = None
    file: str | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.vertices is None) == (self.file is None):
            raise ValueError("give exactly one of vertices or file")
        return self


class AnyonPhaseParams(Strict):
    charge: float
    flux: float
    path: PathSpec
    others: list[Point] = Field(default_factory=list)
    field: FieldSpec = FieldSpec()
    resolution: int = Field(400, ge=4)
    deformations: list[PathSpec] = Field(default_factory=list)
    threshold: float = Field(1e-9, ge=0)


class HolomorphicParams(Strict):
    punctures: list[Point] = Field(default_factory=lambda: [(0.0, 0.0)], min_length=1)
    l_b: float = Field(1.0, gt=0)
    n: int | None = Field(None, ge=1)
    degeneracy: int = Field(2, ge=1)
    epsilon: float = Field(0.0, ge=0)
    mode: Literal["antiholomorphic", "extra-parameter"] = "antiholomorphic"
    sheet_scale: float = Field(3.0, gt=0)
    working_radius: float = Field(4.0, gt=0)


class BerryHolonomyParams(Strict):
    family: Literal["spin_half_cone", "constant", "rotated_block", "holomorphic"]
    holomorphic: HolomorphicParams | None = None
    loop: LoopSpec
    method: Literal["overlap", "connection", "both"] = "overlap"
    fd_step: float = Field(1e-4, gt=0)

    @model_validator(mode="after")
    def _family_block(self):
        if self.holomorphic is not None and self.family != "holomorphic":
            raise ValueError("the holomorphic block is only valid for family = 'holomorphic'")
        return self


class RobustnessSweepParams(Strict):
    family: HolomorphicParams = HolomorphicParams()
    loop_pairs: list[LoopPair] = Field(min_length=1)
    extra_amplitude: float = 0.0


class HolonomyLink(Strict):
    word: str
    family: HolomorphicParams = HolomorphicParams()
    loop: LoopSpec


class BraidCheckParams(Strict):
    representation: Literal["ising", "fibonacci", "abelian", "monodromy"]
    n_strands: int = Field(3, ge=2)
    theta: float = 0.0
    degeneracy: int = Field(2, ge=1)
    words: list[str] = Field(default_factory=list)
    conjugation_angle: float = 0.0
    tol: float = Field(1e-9, gt=0)
    holonomy: HolonomyLink | None = None

    @model_validator(mode="after")
    def _words_parse(self):
        from ..braids import parse_word

        strands = 3 if self.representation in ("ising", "fibonacci") else self.n_strands
        for text in [*self.words, *([self.holonomy.word] if self.holonomy else [])]:
            parse_word(text, strands)
        return self


PARAMS_BY_KIND: dict[str, type[Strict]] = {
    "ring-swap": RingSwapParams,
    "spin-swap": SpinSwapParams,
    "anyon-phase": AnyonPhaseParams,
    "berry-holonomy": BerryHolonomyParams,
    "robustness-sweep": RobustnessSweepParams,
    "braid-check": BraidCheckParams,
}


# --- expectations and sweeps ------------------------------------------------------

class Bound(Strict):
    min: float | None = None
    max: float | None = None
    value: float | None = None

    @model_validator(mode="after")
    def _nonempty(self):
        if self.min is None and self.max is None and self.value is None:
            raise ValueError("a bound needs at least one of min, max, value")
        return self


Scalar = Union[bool, float, Bound]
Expectation = Union[Scalar, list[Scalar]]


class SweepAxis(Strict):
    name: str
    values: list[Any] = Field(min_length=1)


class ScenarioConfig(Strict):
    id: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    kind: Literal[KINDS]  # type: ignore[valid-type]
    output: str | None = Field(None, pattern=r"^[A-Za-z0-9_.-]+$")
    params: dict[str, Any]
    tolerances: dict[str, float] = Field(default_factory=dict)
    expect: dict[str, Expectation] = Field(default_factory=dict)
    sweep: list[SweepAxis] = Field(default_factory=list)

    @model_validator(mode="after")
    def _validate(self):
        for name, tol in self.tolerances.items():
            if not (tol >= 0 and math.isfinite(tol)):
                raise ValueError(f"tolerance {name!r} must be a finite non-negative number")
        n_points = math.prod(len(ax.values) for ax in self.sweep)
        for name, exp in self.expect.items():
            if isinstance(exp, list) and len(exp) != n_points:
                raise ValueError(f"expectation {name!r} lists {len(exp)} values for {n_points} sweep points")
        names = [ax.name for ax in self.sweep]
        if len(set(names)) != len(names):
            raise ValueError("sweep axes must have distinct names")
        for point in self.points():
            PARAMS_BY_KIND[self.kind].model_validate(point)
        return self

    @property
    def stem(self) -> str:
        return self.output or self.id

    def points(self) -> list[dict[str, Any]]:
        """Parameter blocks for every sweep point, first axis slowest."""
        combos: list[list[tuple[str, Any]]] = [[]]
        for ax in self.sweep:
            combos = [c + [(ax.name, v)] for c in combos for v in ax.values]
        return [_apply(self.params, combo) for combo in combos]

    def typed_points(self) -> list[Strict]:
        model = PARAMS_BY_KIND[self.kind]
        return [model.model_validate(p) for p in self.points()]


def _apply(params: dict, combo: list[tuple[str, Any]]) -> dict:
    import copy

    out = copy.deepcopy(params)
    for name, value in combo:
        keys = name.split(".")
        node = out
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                node[k] = {}
            node = node[k]
        node[keys[-1]] = value
    return out


def _format_error(exc: ValidationError, source: str) -> str:
    lines = [f"{source}: invalid scenario config"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = f"unknown key {loc.split('.')[-1]!r}"
        lines.append(f"  {loc}: {msg}")
    return "\n".join(lines)


def parse_config(data: dict, source: str = "<config>") -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc, source)) from None


def load_config(path) -> tuple[ScenarioConfig, Path]:
    """Parse a TOML scenario file; returns the config and its directory (for relative file paths)."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, str(path)), path.parent
