"""Problem geometry for two Dirichlet strips coupled through a window.

The strip ``R x [-d2, d1]`` carries Dirichlet conditions on its outer walls and
on the common boundary ``y = 0`` outside the window ``|x| <= a``.  Setting
``d2 = 0`` selects the half-strip ``R x [0, d1]`` with a Neumann window, which
is the nontrivial part of the symmetric problem ``d1 == d2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .exceptions import GeometryError

__all__ = [
    "Geometry",
    "SpectralWindow",
    "threshold",
    "eigen_bracket",
    "read_geometry_config",
    "parse_geometry_config",
]

#: Relative distance below threshold where the search window stops.
DEFAULT_SHRINK = 1e-12


@dataclass(frozen=True)
class Geometry:
    """Strip widths ``d1`` (upper), ``d2`` (lower) and window half-width ``a``."""

    d1: float
    d2: float
    a: float

    def __post_init__(self):
        for name in ("d1", "d2", "a"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise GeometryError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise GeometryError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.d1 <= 0:
            raise GeometryError(f"d1 must be positive, got {self.d1}")
        if self.d2 < 0:
            raise GeometryError(f"d2 must be non-negative, got {self.d2}")
        if self.a <= 0:
            raise GeometryError(f"a must be positive, got {self.a}")
        if self.a >= self.d:
            raise GeometryError(
                f"window half-width a={self.a} must be smaller than d={self.d}"
            )

    @property
    def half_strip(self) -> bool:
        return self.d2 == 0.0

    @property
    def symmetric(self) -> bool:
        return self.d1 == self.d2

    @property
    def d(self) -> float:
        """Width of the wider strip; fixes the essential spectrum."""
        return max(self.d1, self.d2)

    @property
    def D(self) -> float:
        """Total cross-section ``d1 + d2``."""
        return self.d1 + self.d2

    def with_window(self, a: float) -> "Geometry":
        return Geometry(self.d1, self.d2, a)

    def half_strip_equivalent(self) -> "Geometry":
        if not self.symmetric:
            raise GeometryError("only symmetric two-strip geometries reduce to a half-strip")
        return Geometry(self.d1, 0.0, self.a)


@dataclass(frozen=True)
class SpectralWindow:
    """Open energy interval searched for the ground state."""

    e_min: float
    e_max: float
    margin: float

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise GeometryError(f"empty spectral window ({self.e_min}, {self.e_max})")
        if not 0.0 < self.margin < 1.0:
            raise GeometryError(f"margin must lie in (0, 1), got {self.margin}")

    def __contains__(self, energy: float) -> bool:
        return self.e_min < energy < self.e_max


def threshold(g: Geometry) -> float:
    """Bottom of the essential spectrum, ``(pi / d)**2``."""
    return (math.pi / g.d) ** 2


def eigen_bracket(g: Geometry, margin: float = DEFAULT_SHRINK) -> SpectralWindow:
    """Interval ``(e_min, e_max)`` that contains the ground-state eigenvalue.

    The lower end is ``(pi/D)**2`` for two strips and ``(pi/2d)**2`` (lowest
    Neumann-Dirichlet transverse level) for the half-strip; both coincide when
    ``d1 == d2``.  The upper end sits ``margin`` (relative) below threshold.
    """
    thr = threshold(g)
    if g.half_strip:
        e_min = (math.pi / (2.0 * g.d1)) ** 2
    else:
        e_min = (math.pi / g.D) ** 2
    return SpectralWindow(e_min=e_min, e_max=thr * (1.0 - margin), margin=margin)


_CONFIG_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[:=]?\s*(\S+)\s*$")


def parse_geometry_config(text: str) -> dict[str, float]:
    """Parse ``key = value`` lines (``#`` comments allowed) into floats.

    Only ``d1``, ``d2`` and ``a`` are recognised; anything else is an error.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _CONFIG_LINE.match(line)
        if match is None:
            raise GeometryError(f"line {lineno}: cannot parse {raw!r}")
        key, value = match.groups()
        if key not in ("d1", "d2", "a"):
            raise GeometryError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise GeometryError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise GeometryError(f"line {lineno}: {key} is not a number: {value!r}") from None
    return values


def read_geometry_config(path: str | Path) -> dict[str, float]:
    return parse_geometry_config(Path(path).read_text())
