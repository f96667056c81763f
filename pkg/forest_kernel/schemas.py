"""Pydantic models for config files and command reports."""

from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from .model import (
    ConstantKernel, Configuration, EdgeKernel, Label, NumericMode, Point, Scalar,
    format_scalar, mode_of, scalars_match,
)


class PointSpec(BaseModel):
    """A point as written in a config file."""
    id: Label = Field(..., description="Unique label within its side")
    pos: Optional[Tuple[float, ...]] = Field(None, description="Coordinates, all-or-none")


class ConfigFile(BaseModel):
    """
    Contents of a configuration file.

    Rationals are written as "p/q" strings (or integers); floats as JSON
    numbers. An id listed both as a root and as a vertex is accepted: it is
    the boundary state where Q vanishes.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dimension: Optional[int] = Field(None, ge=1)
    roots: List[PointSpec] = Field(default_factory=list)
    vertices: List[PointSpec] = Field(default_factory=list)
    kernel: EdgeKernel = Field(default_factory=ConstantKernel)
    h: Scalar = Fraction(1)

    @model_validator(mode="after")
    def _check_points(self):
        for side, specs in (("roots", self.roots), ("vertices", self.vertices)):
            ids = [spec.id for spec in specs]
            if len(set(ids)) != len(ids):
                raise ValueError(f"Duplicate ids among {side}")

        dimensions = {None if spec.pos is None else len(spec.pos) for spec in self.roots + self.vertices}
        if len(dimensions) > 1:
            raise ValueError("Positions must be given for all points or none, with one dimension")
        if self.dimension is not None and dimensions and dimensions != {self.dimension}:
            raise ValueError(f"Positions do not match dimension {self.dimension}")
        return self

    def to_configuration(self) -> Configuration:
        return Configuration(
            roots=tuple(Point(label=spec.id, position=spec.pos) for spec in self.roots),
            vertices=tuple(Point(label=spec.id, position=spec.pos) for spec in self.vertices),
        )

    @classmethod
    def from_configuration(cls, config: Configuration, kernel=None, h=Fraction(1)) -> "ConfigFile":
        return cls(
            dimension=config.dimension,
            roots=[PointSpec(id=p.label, pos=p.position) for p in config.roots],
            vertices=[PointSpec(id=p.label, pos=p.position) for p in config.vertices],
            kernel=kernel or ConstantKernel(),
            h=h,
        )


class OracleCheck(BaseModel):
    """One comparison of a computed value against an independent one."""
    family: str
    name: str
    expected: str
    actual: str
    mode: str = Field(..., description="'exact' or 'tolerance'")
    passed: bool
    detail: Optional[str] = None

    @classmethod
    def compare(cls, family: str, name: str, expected: Any, actual: Any,
                tolerance: float = 1e-9, detail: Optional[str] = None) -> "OracleCheck":
        exact = mode_of(expected) is NumericMode.EXACT and mode_of(actual) is NumericMode.EXACT
        return cls(
            family=family,
            name=name,
            expected=format_scalar(expected),
            actual=format_scalar(actual),
            mode="exact" if exact else f"tolerance {tolerance:g}",
            passed=scalars_match(expected, actual, tolerance),
            detail=detail,
        )

    @classmethod
    def failure(cls, family: str, name: str, detail: str) -> "OracleCheck":
        """A comparison that could not be carried out."""
        return cls(family=family, name=name, expected="-", actual="error", mode="exact",
                   passed=False, detail=detail)


class FamilySummary(BaseModel):
    """Pass/fail tally of one family of checks."""
    name: str
    cases: int
    failed: int

    @computed_field
    @property
    def passed(self) -> bool:
        return self.failed == 0


class RunReport(BaseModel):
    """Result of one CLI command."""
    command: str
    inputs: Dict[str, Any] = Field(default_factory=dict)
    outputs: Dict[str, Any] = Field(default_factory=dict)
    checks: List[OracleCheck] = Field(default_factory=list)
    families: List[FamilySummary] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
    elapsed_seconds: Optional[float] = None

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(f.passed for f in self.families)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, exclude_none=True)

    def render_text(self) -> str:
        lines = [f"command: {self.command}"]
        for key, value in self.outputs.items():
            lines.append(f"{key} = {value}")
        for note in self.notes:
            lines.append(f"note: {note}")
        for family in self.families:
            status = "PASS" if family.passed else "FAIL"
            lines.append(f"[{status}] {family.name}: {family.cases} cases, {family.failed} failed")
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            relation = "=" if check.passed else "!="
            line = f"[{status}] {check.family}/{check.name}: {check.expected} {relation} {check.actual} ({check.mode})"
            if check.detail:
                line += f" - {check.detail}"
            lines.append(line)
        if self.elapsed_seconds is not None:
            lines.append(f"elapsed: {self.elapsed_seconds:.3f}s")
        lines.append("result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)
