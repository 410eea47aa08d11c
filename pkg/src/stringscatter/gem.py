"""Generalised eigenfunction expansion solver.

The time-domain field is expanded over the frequency-domain scattering
solutions.  On the midpoint grids everything reduces to matrix algebra: the
solution matrices U, V hold the frequency-domain fields at every (x_j, w_i),
the initial data is projected onto them with the energy weight to obtain
spectral amplitudes, and evolution multiplies by phase factors exp(-i w t).

The closed-form travelling-wave solution of the free string is implemented
alongside as an independent oracle, together with the energy functional used
by the conservation checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ImaginaryResidueError
from .freqdomain import anchor_field, free_field, mass_spring_field
from .model import (
    FreeString,
    FrequencyGrid,
    GaussianPacket,
    InitialCondition,
    MassAnchor,
    MassSpring,
    PointImpulse,
    Scatterer,
    Snapshot,
    SpatialGrid,
    StringMedium,
    point_mass,
    point_spring,
)

__all__ = [
    "GemOperator",
    "SpectralAmplitudes",
    "assemble_operator",
    "spectral_amplitudes",
    "evolve_gem",
    "dalembert_displacement",
    "energy",
    "GemSolver",
    "DalembertSolver",
]

#: default bound on the relative imaginary residue of synthesized fields
TOL_IM = 1e-6


@dataclass(frozen=True)
class GemOperator:
    """Frequency-domain solution matrices sampled on the grids.

    ``u_plus``/``v_plus`` hold the left-incident solutions at every
    (midpoint, frequency) pair; ``u_minus``/``v_minus`` hold the
    right-incident family and are None for the anchored string, which has a
    single family.  ``weights`` is the diagonal energy weight: mu*dx per
    cell plus the point mass at the scatterer cell.
    """

    medium: StringMedium
    scatterer: Scatterer
    spatial: SpatialGrid
    frequency: FrequencyGrid
    u_plus: np.ndarray
    v_plus: np.ndarray
    u_minus: Optional[np.ndarray]
    v_minus: Optional[np.ndarray]
    weights: np.ndarray


@dataclass(frozen=True)
class SpectralAmplitudes:
    """GEM expansion coefficients on the frequency grid (``minus`` is None
    for the single-family anchored string)."""

    plus: np.ndarray
    minus: Optional[np.ndarray]
    grid: FrequencyGrid


def assemble_operator(
    spatial: SpatialGrid,
    frequency: FrequencyGrid,
    medium: StringMedium,
    scatterer: Scatterer = FreeString(),
) -> GemOperator:
    """Evaluate the frequency-domain solutions at every grid point."""
    x = spatial.midpoints[:, None]
    w = frequency.midpoints[None, :]

    weights = np.full(spatial.n_cells, medium.mu * spatial.dx)
    mass = point_mass(scatterer)
    if not isinstance(scatterer, FreeString):
        if spatial.scatterer_index is None:
            raise ValueError("spatial grid was built without a scatterer cell")
        weights[spatial.scatterer_index] += mass

    if isinstance(scatterer, MassAnchor):
        u, v = anchor_field(w, medium, scatterer, x)
        return GemOperator(medium, scatterer, spatial, frequency, u, v, None, None, weights)

    if isinstance(scatterer, FreeString):
        up, vp = free_field(w, "+", medium, x)
        um, vm = free_field(w, "-", medium, x)
    else:
        up, vp = mass_spring_field(w, "+", medium, scatterer, x)
        um, vm = mass_spring_field(w, "-", medium, scatterer, x)
    return GemOperator(medium, scatterer, spatial, frequency, up, vp, um, vm, weights)


def _project(op: GemOperator, u_mat, v_mat, ic: InitialCondition) -> np.ndarray:
    """Project the initial data onto one incidence family."""
    medium, spatial = op.medium, op.spatial
    mu, dx = medium.mu, spatial.dx
    w = op.frequency.midpoints
    mass = point_mass(op.scatterer)
    j0 = spatial.scatterer_index

    amps = u_mat.conj().T @ (mu * dx * ic.displacement_samples)
    vel = v_mat.conj().T @ (mu * dx * ic.velocity_samples)
    if mass > 0 and j0 is not None:
        amps = amps + mass * ic.point_displacement * u_mat[j0, :].conj()
        vel = vel + mass * ic.point_velocity * v_mat[j0, :].conj()
    return (amps + vel / w**2) / (4 * np.pi * mu * medium.wave_speed)


def spectral_amplitudes(op: GemOperator, ic: InitialCondition) -> SpectralAmplitudes:
    """Spectral amplitudes of the initial data over the frequency grid.

    The projection is the discrete energy inner product of the data with the
    conjugated solution matrices, normalised by 4 pi mu c w^2; the velocity
    part carries the explicit 1/w^2, which is finite because the frequency
    grid never contains 0.
    """
    if ic.displacement_samples.shape[0] != op.spatial.n_cells:
        raise ValueError(
            f"initial condition has {ic.displacement_samples.shape[0]} samples "
            f"but the grid has {op.spatial.n_cells} cells"
        )
    if np.min(np.abs(op.frequency.midpoints)) == 0.0:
        raise ValueError("frequency grid contains 0; the static problem is not handled")
    plus = _project(op, op.u_plus, op.v_plus, ic)
    minus = None
    if op.u_minus is not None:
        minus = _project(op, op.u_minus, op.v_minus, ic)
    return SpectralAmplitudes(plus, minus, op.frequency)


def _field_scale(op: GemOperator, amps: SpectralAmplitudes) -> tuple[float, float]:
    """Upper bounds for |u| and |v| implied by the amplitudes, used to anchor
    the imaginary-residue check when the synthesized field is near zero."""
    dw = op.frequency.dw
    w = np.abs(op.frequency.midpoints)
    total = np.abs(amps.plus)
    if amps.minus is not None:
        total = total + np.abs(amps.minus)
    return float(dw * np.sum(total)), float(dw * np.sum(w * total))


def _as_real(values: np.ndarray, tol_im: float, scale: float, what: str) -> np.ndarray:
    worst = float(np.max(np.abs(values.imag))) if values.size else 0.0
    bound = tol_im * max(float(np.max(np.abs(values.real))), 1e-6 * scale)
    if worst > bound:
        raise ImaginaryResidueError(
            f"imaginary residue of the synthesized {what} is {worst:.3e}, above the "
            f"allowed {bound:.3e}; the spectral grid is under-resolved or unpaired"
        )
    return values.real


def evolve_gem(
    op: GemOperator,
    amps: SpectralAmplitudes,
    t: float,
    tol_im: float = TOL_IM,
    with_velocity: bool = False,
) -> Snapshot:
    """Synthesize the field at time t: u = dw * sum_i e^{-i w_i t} U A."""
    phase = np.exp(-1j * op.frequency.midpoints * t)
    dw = op.frequency.dw
    u = op.u_plus @ (amps.plus * phase)
    if amps.minus is not None:
        u = u + op.u_minus @ (amps.minus * phase)
    u = dw * u
    scale_u, scale_v = _field_scale(op, amps)
    displacement = _as_real(u, tol_im, scale_u, "displacement")
    velocity = None
    if with_velocity:
        v = op.v_plus @ (amps.plus * phase)
        if amps.minus is not None:
            v = v + op.v_minus @ (amps.minus * phase)
        velocity = _as_real(dw * v, tol_im, scale_v, "velocity")
    return Snapshot(time=t, displacement=displacement, velocity=velocity, method_tag="gem")


def dalembert_displacement(ic: InitialCondition, medium: StringMedium, x, t: float):
    """Closed-form free-string displacement
    u = (f(x-ct) + f(x+ct))/2 + (1/2c) * integral of g over (x-ct, x+ct).

    Only available for the named analytic initial conditions, whose velocity
    integral is known in closed form (for a travelling Gaussian packet
    g = +-c f', so the integral telescopes to a difference of f values).
    """
    tag = ic.analytic_tag
    if tag is None:
        raise ValueError("the closed-form solution needs a named analytic initial condition")
    c = medium.wave_speed
    x = np.asarray(x, dtype=float)
    if isinstance(tag, PointImpulse):
        return np.zeros_like(x)
    if not isinstance(tag, GaussianPacket):
        raise ValueError(f"unknown initial-condition tag {tag!r}")
    behind = tag.displacement(x - c * t)
    ahead = tag.displacement(x + c * t)
    u = 0.5 * (behind + ahead)
    if tag.direction == "left":
        u = u + 0.5 * (ahead - behind)
    elif tag.direction == "right":
        u = u - 0.5 * (ahead - behind)
    return u


def _grid_derivative(values: np.ndarray, dx: float, j0: Optional[int]) -> np.ndarray:
    """Central differences, switched to one-sided next to the scatterer cell
    (the spatial derivative jumps across the point scatterer)."""
    out = np.gradient(values, dx)
    if j0 is not None:
        if j0 - 2 >= 0:
            out[j0 - 1] = (values[j0 - 1] - values[j0 - 2]) / dx
        if j0 + 2 < values.shape[0]:
            out[j0 + 1] = (values[j0 + 2] - values[j0 + 1]) / dx
    return out


def energy(
    snapshot: Snapshot,
    medium: StringMedium,
    scatterer: Scatterer,
    grid: SpatialGrid,
) -> float:
    """Total energy of a snapshot: string kinetic + potential energy from
    midpoint quadrature plus the point scatterer's kinetic and spring terms."""
    if snapshot.velocity is None:
        raise ValueError("energy needs a snapshot with velocity values")
    u = snapshot.displacement
    v = snapshot.velocity
    du = _grid_derivative(u, grid.dx, grid.scatterer_index)
    total = 0.5 * grid.dx * float(np.sum(medium.mu * v**2 + medium.tension * du**2))
    j0 = grid.scatterer_index
    if not isinstance(scatterer, FreeString) and j0 is not None:
        total += 0.5 * point_mass(scatterer) * float(v[j0]) ** 2
        total += 0.5 * point_spring(scatterer) * float(u[j0]) ** 2
    return total


class GemSolver(BaseEstimator):
    """Spectral time-domain solver with a fit/predict interface.

    Parameters
    ----------
    medium : StringMedium
    scatterer : FreeString, MassSpring or MassAnchor
    spatial_grid : SpatialGrid
        Must carry a scatterer cell when a scatterer is present.
    frequency_grid : FrequencyGrid
    tol_im : float, default 1e-6
        Relative bound on the imaginary residue of synthesized fields.

    After ``fit`` the solution matrices are in ``operator_`` and the
    expansion coefficients in ``amplitudes_``.
    """

    def __init__(self, medium=StringMedium(), scatterer=FreeString(),
                 spatial_grid=None, frequency_grid=None, tol_im=TOL_IM):
        self.medium = medium
        self.scatterer = scatterer
        self.spatial_grid = spatial_grid
        self.frequency_grid = frequency_grid
        self.tol_im = tol_im

    def fit(self, ic: InitialCondition, y=None):
        """Assemble the solution matrices and project the initial data."""
        if self.spatial_grid is None or self.frequency_grid is None:
            raise ValueError("both grids must be provided before fitting")
        self.operator_ = assemble_operator(
            self.spatial_grid, self.frequency_grid, self.medium, self.scatterer
        )
        self.amplitudes_ = spectral_amplitudes(self.operator_, ic)
        return self

    def _require_fitted(self):
        if not hasattr(self, "operator_"):
            raise ValueError("this solver is not fitted yet; call fit first")

    def predict(self, times: Sequence[float]) -> np.ndarray:
        """Displacement on the grid midpoints, shape (n_times, n_cells)."""
        self._require_fitted()
        return np.stack([
            evolve_gem(self.operator_, self.amplitudes_, float(t), self.tol_im).displacement
            for t in np.atleast_1d(times)
        ])

    def snapshots(self, times: Sequence[float], with_velocity: bool = False) -> list[Snapshot]:
        self._require_fitted()
        return [
            evolve_gem(self.operator_, self.amplitudes_, float(t), self.tol_im, with_velocity)
            for t in np.atleast_1d(times)
        ]


class DalembertSolver(BaseEstimator):
    """Closed-form free-string solver with the same interface as GemSolver.

    Serves as the independent reference the spectral solver is validated
    against; only meaningful without a scatterer.
    """

    def __init__(self, medium=StringMedium(), spatial_grid=None):
        self.medium = medium
        self.spatial_grid = spatial_grid

    def fit(self, ic: InitialCondition, y=None):
        if self.spatial_grid is None:
            raise ValueError("a spatial grid must be provided before fitting")
        if ic.analytic_tag is None:
            raise ValueError("the closed-form solver needs a named analytic initial condition")
        self.ic_ = ic
        return self

    def predict(self, times: Sequence[float]) -> np.ndarray:
        if not hasattr(self, "ic_"):
            raise ValueError("this solver is not fitted yet; call fit first")
        x = self.spatial_grid.midpoints
        return np.stack([
            dalembert_displacement(self.ic_, self.medium, x, float(t))
            for t in np.atleast_1d(times)
        ])

    def snapshots(self, times: Sequence[float], with_velocity: bool = False) -> list[Snapshot]:
        del with_velocity  # velocities are not produced by the closed form
        return [
            Snapshot(time=float(t), displacement=row, method_tag="dalembert")
            for t, row in zip(np.atleast_1d(times), self.predict(times))
        ]
