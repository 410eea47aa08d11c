"""Domain types shared by every solver: the string medium, point scatterers,
space/frequency grids and initial conditions.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

__all__ = [
    "StringMedium",
    "FreeString",
    "MassSpring",
    "MassAnchor",
    "Scatterer",
    "SpatialGrid",
    "FrequencyGrid",
    "build_spatial_grid",
    "build_frequency_grid",
    "build_grids",
    "GaussianPacket",
    "PointImpulse",
    "InitialCondition",
    "sample_initial_condition",
    "Snapshot",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StringMedium:
    """Physical constants of the stretched string.

    Parameters
    ----------
    mu : float
        Linear mass density (kg/m), strictly positive.
    tension : float
        Tension (N), strictly positive.
    """

    mu: float = 1.0
    tension: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mass density must be positive, got {self.mu}")
        if not (self.tension > 0 and math.isfinite(self.tension)):
            raise ValueError(f"tension must be positive, got {self.tension}")

    @property
    def wave_speed(self) -> float:
        """Wave speed c = sqrt(tension / mu), always recomputed."""
        return math.sqrt(self.tension / self.mu)


@dataclass(frozen=True)
class FreeString:
    """No scatterer: the uniform infinite string."""


@dataclass(frozen=True)
class MassSpring:
    """Point mass at x = 0, additionally tied to a spring.

    ``mass = 0`` together with ``spring = 0`` degenerates to the free string
    and is accepted so coefficient formulas can be exercised in that limit.
    """

    mass: float
    spring: float = 0.0

    def __post_init__(self):
        if self.mass < 0 or not math.isfinite(self.mass):
            raise ValueError(f"mass must be non-negative, got {self.mass}")
        if self.spring < 0 or not math.isfinite(self.spring):
            raise ValueError(f"spring constant must be non-negative, got {self.spring}")


@dataclass(frozen=True)
class MassAnchor:
    """Point mass at x = 0 on a semi-infinite string anchored at x = -offset."""

    mass: float
    offset: float

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not (self.offset > 0 and math.isfinite(self.offset)):
            raise ValueError(f"anchor offset must be positive, got {self.offset}")


Scatterer = Union[FreeString, MassSpring, MassAnchor]


def point_mass(scatterer: Scatterer) -> float:
    """Mass of the point scatterer (0 for the free string)."""
    if isinstance(scatterer, FreeString):
        return 0.0
    return scatterer.mass


def point_spring(scatterer: Scatterer) -> float:
    """Spring constant attached to the point scatterer (0 unless mass-spring)."""
    if isinstance(scatterer, MassSpring):
        return scatterer.spring
    return 0.0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-midpoint grid over [x_min, x_max].

    ``scatterer_index`` is the index of the midpoint that coincides with the
    scatterer position x = 0 (None when the grid was built without one).
    ``shift`` is the translation applied to the requested bounds;
    ``adjustments`` holds human-readable notes about any changes made.
    """

    x_min: float
    x_max: float
    n_cells: int
    dx: float
    midpoints: np.ndarray
    scatterer_index: Optional[int] = None
    shift: float = 0.0
    adjustments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "midpoints", _readonly(self.midpoints))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform cell-midpoint grid over [w_min, w_max]; never contains 0."""

    w_min: float
    w_max: float
    n_cells: int
    dw: float
    midpoints: np.ndarray
    shift: float = 0.0
    adjustments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "midpoints", _readonly(self.midpoints))


def _check_bounds(lo: float, hi: float, n: int, what: str) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"{what} bounds must be finite, got [{lo}, {hi}]")
    if not hi > lo:
        raise ValueError(f"{what} bounds are inverted or empty: [{lo}, {hi}]")
    if n < 1:
        raise ValueError(f"{what} cell count must be at least 1, got {n}")


def build_spatial_grid(
    x_min: float,
    x_max: float,
    n_cells: int,
    scatterer: Scatterer = FreeString(),
) -> SpatialGrid:
    """Build the spatial midpoint grid for a scenario.

    With a point scatterer present, one midpoint must coincide with x = 0.
    For the free and mass-spring cases the bounds are translated by the
    minimal amount (at most dx/2) to achieve this.  For the anchored string
    the lower bound is pinned to the anchor at -offset, so the cell width is
    retuned minimally instead, keeping the cell count fixed.
    """
    _check_bounds(x_min, x_max, n_cells, "spatial")
    dx = (x_max - x_min) / n_cells
    adjustments = []

    if isinstance(scatterer, FreeString):
        mid = x_min + (np.arange(n_cells) + 0.5) * dx
        return SpatialGrid(x_min, x_max, n_cells, dx, mid)

    if isinstance(scatterer, MassAnchor):
        L = scatterer.offset
        if abs(x_min + L) > 1e-12 * max(1.0, L):
            raise ValueError(
                f"anchored-string grid must start at the anchor x = {-L}, got x_min = {x_min}"
            )
        if x_max <= 0:
            raise ValueError("scatterer position x = 0 must lie inside the grid")
        j0 = int(round(L / dx - 0.5))
        j0 = min(max(j0, 0), n_cells - 1)
        dx_new = L / (j0 + 0.5)
        if not math.isclose(dx_new, dx, rel_tol=1e-12):
            adjustments.append(
                f"cell width retuned from {dx:.12g} to {dx_new:.12g} m so a midpoint "
                f"sits on the scatterer while the anchor stays at x = {-L:g} m"
            )
        dx = dx_new
        x_min = -L
        x_max = -L + n_cells * dx
        mid = x_min + (np.arange(n_cells) + 0.5) * dx
        return SpatialGrid(
            x_min, x_max, n_cells, dx, mid, scatterer_index=j0, adjustments=tuple(adjustments)
        )

    # mass-spring: translate the window so a midpoint lands exactly on 0
    if not (x_min <= 0.0 <= x_max):
        raise ValueError("scatterer position x = 0 must lie inside the grid")
    j0 = int(math.floor((0.0 - x_min) / dx))
    j0 = min(max(j0, 0), n_cells - 1)
    shift = -(x_min + (j0 + 0.5) * dx)
    if shift != 0.0:
        adjustments.append(
            f"bounds shifted by {shift:.12g} m so a cell midpoint sits on the scatterer"
        )
    x_min += shift
    x_max += shift
    mid = (np.arange(n_cells) - j0) * dx  # midpoint j0 is exactly 0
    return SpatialGrid(
        x_min, x_max, n_cells, dx, mid,
        scatterer_index=j0, shift=shift, adjustments=tuple(adjustments),
    )


def build_frequency_grid(w_min: float, w_max: float, n_cells: int) -> FrequencyGrid:
    """Build the frequency midpoint grid, keeping 0 off the grid.

    If a midpoint would land within dw/2 of 0 (in particular exactly on 0,
    which happens for symmetric windows with an odd cell count), the window
    is translated so the nearest midpoint sits at distance dw/2 from 0.
    """
    _check_bounds(w_min, w_max, n_cells, "frequency")
    dw = (w_max - w_min) / n_cells
    mid = w_min + (np.arange(n_cells) + 0.5) * dw
    i0 = int(np.argmin(np.abs(mid)))
    delta = mid[i0]
    shift = 0.0
    adjustments = []
    if abs(delta) < dw / 2 * (1 - 1e-9):
        target = math.copysign(dw / 2, delta) if delta != 0.0 else -dw / 2
        shift = target - delta
        adjustments.append(
            f"bounds shifted by {shift:.12g} 1/s to keep the zero frequency off the grid"
        )
        w_min += shift
        w_max += shift
        mid = mid + shift
    return FrequencyGrid(
        w_min, w_max, n_cells, dw, mid, shift=shift, adjustments=tuple(adjustments)
    )


def build_grids(
    spatial: tuple,
    frequency: tuple,
    scatterer: Scatterer = FreeString(),
) -> tuple[SpatialGrid, FrequencyGrid]:
    """Build both grids from (min, max, n_cells) specs."""
    sg = build_spatial_grid(*spatial, scatterer=scatterer)
    fg = build_frequency_grid(*frequency)
    return sg, fg


@dataclass(frozen=True)
class GaussianPacket:
    """Gaussian wave packet f(x) = exp(-((x-center)/width)^2) * cos(carrier*x).

    ``direction`` selects the initial velocity: "left" gives g = c f' (the
    packet travels toward -infinity), "right" gives g = -c f', and "static"
    gives g = 0.
    """

    center: float
    width: float = 1.0
    carrier: float = 0.0
    direction: str = "left"

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError(f"packet width must be positive, got {self.width}")
        if self.direction not in ("left", "right", "static"):
            raise ValueError(f"unknown packet direction {self.direction!r}")

    def displacement(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(((x - self.center) / self.width) ** 2)) * np.cos(self.carrier * x)

    def displacement_derivative(self, x):
        x = np.asarray(x, dtype=float)
        envelope = np.exp(-(((x - self.center) / self.width) ** 2))
        return envelope * (
            -2.0 * (x - self.center) / self.width**2 * np.cos(self.carrier * x)
            - self.carrier * np.sin(self.carrier * x)
        )

    def velocity(self, x, wave_speed: float):
        if self.direction == "static":
            return np.zeros_like(np.asarray(x, dtype=float))
        sign = 1.0 if self.direction == "left" else -1.0
        return sign * wave_speed * self.displacement_derivative(x)


@dataclass(frozen=True)
class PointImpulse:
    """Impulsive start: the string is at rest and only the point mass moves,
    with initial velocity ``amplitude``."""

    amplitude: float = 1.0


AnalyticTag = Union[GaussianPacket, PointImpulse]


@dataclass(frozen=True)
class InitialCondition:
    """Initial displacement/velocity samples on the spatial grid plus the
    values carried by the point scatterer itself.

    The point values usually equal the samples at the scatterer midpoint; for
    a point impulse the grid samples are zero while ``point_velocity`` is not.
    """

    displacement_samples: np.ndarray
    velocity_samples: np.ndarray
    point_displacement: float = 0.0
    point_velocity: float = 0.0
    analytic_tag: Optional[AnalyticTag] = None

    def __post_init__(self):
        object.__setattr__(self, "displacement_samples", _readonly(self.displacement_samples))
        object.__setattr__(self, "velocity_samples", _readonly(self.velocity_samples))
        if self.displacement_samples.shape != self.velocity_samples.shape:
            raise ValueError("displacement and velocity samples must have equal length")


def sample_initial_condition(
    tag: AnalyticTag, grid: SpatialGrid, medium: StringMedium
) -> InitialCondition:
    """Sample a named closed-form initial condition on the grid midpoints."""
    x = grid.midpoints
    if isinstance(tag, GaussianPacket):
        f = tag.displacement(x)
        g = tag.velocity(x, medium.wave_speed)
        f0 = float(tag.displacement(0.0))
        g0 = float(tag.velocity(0.0, medium.wave_speed))
        return InitialCondition(f, g, f0, g0, analytic_tag=tag)
    if isinstance(tag, PointImpulse):
        zero = np.zeros(grid.n_cells)
        return InitialCondition(
            zero, zero.copy(), 0.0, float(tag.amplitude), analytic_tag=tag
        )
    raise ValueError(f"unknown initial-condition tag {tag!r}")


@dataclass(frozen=True)
class Snapshot:
    """Real-valued field values on the spatial grid at one instant."""

    time: float
    displacement: np.ndarray
    velocity: Optional[np.ndarray] = None
    method_tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "displacement", _readonly(self.displacement))
        if self.velocity is not None:
            object.__setattr__(self, "velocity", _readonly(self.velocity))
