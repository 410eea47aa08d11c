"""Singularity expansion solver.

The late-time field is approximated by a finite sum over complex resonances:
outgoing modes at complex frequencies in the lower half-plane, each decaying
like exp(-i w_j t).  Modal coefficients are energy inner products of the
initial data with the paired absorbing (incoming) modes, divided by a
biorthogonal normalization that is known in closed form for both scatterer
configurations handled here.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    ConvergenceWarning,
    DegenerateResonanceError,
    ImaginaryResidueError,
    NewtonError,
    TruncationWarning,
)
from .model import (
    InitialCondition,
    MassAnchor,
    MassSpring,
    Scatterer,
    Snapshot,
    SpatialGrid,
    StringMedium,
    point_mass,
    point_spring,
)

__all__ = [
    "ResonanceMode",
    "newton_refine",
    "mass_spring_poles",
    "anchor_pole_equation",
    "anchor_pole_equation_derivative",
    "anchor_initial_guess",
    "anchor_poles",
    "normalization",
    "modal_coefficient",
    "evolve_sem",
    "SemSolver",
]

NEWTON_TOL = 1e-12
ACCEPT_TOL = 1e-10
MAX_ITER = 50


@dataclass(frozen=True)
class ResonanceMode:
    """One complex resonance of a scatterer configuration.

    The resonant profile is the outgoing solution at the complex frequency
    ``omega``; the absorbing profile is the incoming solution at the
    conjugate frequency, the adjoint partner in the biorthogonal system.
    ``coefficient`` is filled in once initial data is supplied.
    """

    index: int
    omega: complex
    wavenumber: complex
    medium: StringMedium
    scatterer: Scatterer
    residual: float
    normalization: complex
    coefficient: Optional[complex] = None

    def resonant_profile(self, x) -> np.ndarray:
        """Outgoing mode shape at the resonance frequency."""
        x = np.asarray(x, dtype=float)
        k = self.wavenumber
        if isinstance(self.scatterer, MassSpring):
            return np.where(x < 0, np.exp(-1j * k * x), np.exp(1j * k * x))
        L = self.scatterer.offset
        s = np.sin(k * L)
        return np.where(x < 0, np.sin(k * (x + L)) / s, np.exp(1j * k * x))

    def absorbing_profile(self, x) -> np.ndarray:
        """Incoming mode shape at the conjugate frequency."""
        x = np.asarray(x, dtype=float)
        kc = np.conj(self.wavenumber)
        if isinstance(self.scatterer, MassSpring):
            return np.where(x < 0, np.exp(1j * kc * x), np.exp(-1j * kc * x))
        L = self.scatterer.offset
        s = np.sin(kc * L)
        return np.where(x < 0, np.sin(kc * (x + L)) / s, np.exp(-1j * kc * x))

    def absorbing_profile_derivative(self, x) -> np.ndarray:
        """Spatial derivative of the absorbing profile.  The derivative jumps
        at the scatterer; at x = 0 exactly the two-sided average is used so
        the midpoint cell carries the mean slope."""
        x = np.asarray(x, dtype=float)
        kc = np.conj(self.wavenumber)
        if isinstance(self.scatterer, MassSpring):
            left = 1j * kc * np.exp(1j * kc * x)
            right = -1j * kc * np.exp(-1j * kc * x)
            at0 = 0.0
        else:
            L = self.scatterer.offset
            s = np.sin(kc * L)
            left = kc * np.cos(kc * (x + L)) / s
            right = -1j * kc * np.exp(-1j * kc * x)
            at0 = 0.5 * (kc * np.cos(kc * L) / s - 1j * kc)
        out = np.where(x < 0, left, right)
        return np.where(x == 0, at0, out)


def newton_refine(
    func: Callable[[complex], complex],
    derivative: Callable[[complex], complex],
    guess: complex,
    tol: float = NEWTON_TOL,
    max_iter: int = MAX_ITER,
) -> complex:
    """Refine a complex root of ``func`` by Newton iteration until
    |func(root)| <= tol.  Raises NewtonError on stagnation or a vanishing
    derivative."""
    z = complex(guess)
    for _ in range(max_iter):
        value = func(z)
        if abs(value) <= tol:
            return z
        slope = derivative(z)
        if abs(slope) < 1e-300:
            raise NewtonError(f"derivative vanished at iterate {z}")
        z = z - value / slope
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise NewtonError(f"iteration diverged from guess {guess}")
    if abs(func(z)) <= tol:
        return z
    raise NewtonError(
        f"no convergence from guess {guess} after {max_iter} iterations "
        f"(residual {abs(func(z)):.3e})"
    )


def mass_spring_poles(medium: StringMedium, scatterer: MassSpring) -> list[ResonanceMode]:
    """The two complex resonances of the mass-spring scatterer,
    w = -iT/(cM) +- sqrt(k_s M - mu T)/M, indexed 1 and 2.
    """
    M, ks = scatterer.mass, scatterer.spring
    if M <= 0:
        raise ValueError("pole formula needs a positive mass")
    mu, T, c = medium.mu, medium.tension, medium.wave_speed
    radicand = ks * M - mu * T
    if radicand == 0:
        raise DegenerateResonanceError(
            "the two resonances coincide (double pole at k_s M = mu T); the "
            "simple-pole expansion does not apply"
        )
    root = cmath.sqrt(complex(radicand))
    modes = []
    for index, sign in ((1, 1.0), (2, -1.0)):
        w = -1j * T / (c * M) + sign * root / M
        k = w / c
        residual = abs(2j * k * T - ks + M * w**2)
        norm = M * w**2 + ks
        modes.append(ResonanceMode(index, w, k, medium, scatterer, residual, norm))
    return modes


def anchor_pole_equation(k, medium: StringMedium, scatterer: MassAnchor):
    """Pole condition of the anchored string: (Mk/mu + i) sin(kL) - cos(kL)."""
    M, L = scatterer.mass, scatterer.offset
    return (M * k / medium.mu + 1j) * np.sin(k * L) - np.cos(k * L)


def anchor_pole_equation_derivative(k, medium: StringMedium, scatterer: MassAnchor):
    M, L = scatterer.mass, scatterer.offset
    return (
        (M / medium.mu) * np.sin(k * L)
        + L * (M * k / medium.mu + 1j) * np.cos(k * L)
        + L * np.sin(k * L)
    )


def anchor_initial_guess(index: int, medium: StringMedium, scatterer: MassAnchor) -> complex:
    """Starting point for Newton refinement of the index-th anchored-string
    wavenumber: j pi / L for j >= 1, and for j = 0 the root of the small-kL
    quadratic truncation of the pole condition with positive real part."""
    M, L = scatterer.mass, scatterer.offset
    mu = medium.mu
    if index > 0:
        return complex(index * math.pi / L)
    if index == 0:
        return (-1j * mu + mu * cmath.sqrt(4 * M / (mu * L) + 1)) / (2 * M + mu * L)
    raise ValueError("guesses exist for indices >= 0; negative indices follow by symmetry")


def _anchor_normalization(w: complex, k: complex, medium, scatterer) -> complex:
    s = np.sin(k * scatterer.offset)
    if abs(s) < 1e-12:
        raise ValueError(
            f"|sin(kL)| = {abs(s):.3e} at the claimed resonance; this is not a valid root"
        )
    return scatterer.mass * w**2 + medium.mu * w**2 * scatterer.offset / s**2


def anchor_poles(
    medium: StringMedium,
    scatterer: MassAnchor,
    j_min: int,
    j_max: int,
    newton_tol: float = NEWTON_TOL,
    accept_tol: float = ACCEPT_TOL,
    max_iter: int = MAX_ITER,
) -> list[ResonanceMode]:
    """Complex resonances of the anchored string for indices j_min..j_max.

    Non-negative indices are refined by Newton iteration from their closed
    form guesses; negative indices follow from the conjugation symmetry of
    the pole condition, k(-j) = -conj(k(j-1)), without further root finding.
    Indices that fail to converge are reported as ConvergenceWarning and
    skipped; near-duplicate roots are reported as well.
    """
    if j_min > j_max:
        raise ValueError(f"empty index range [{j_min}, {j_max}]")
    c = medium.wave_speed

    needed = sorted({j if j >= 0 else -j - 1 for j in range(j_min, j_max + 1)})
    base: dict[int, complex] = {}
    func = lambda k: complex(anchor_pole_equation(k, medium, scatterer))
    deriv = lambda k: complex(anchor_pole_equation_derivative(k, medium, scatterer))
    for j in needed:
        try:
            root = newton_refine(func, deriv, anchor_initial_guess(j, medium, scatterer),
                                 tol=newton_tol, max_iter=max_iter)
        except NewtonError as exc:
            warnings.warn(f"pole index {j}: {exc}", ConvergenceWarning, stacklevel=2)
            continue
        if abs(func(root)) > accept_tol:
            warnings.warn(
                f"pole index {j}: residual {abs(func(root)):.3e} above the acceptance "
                f"tolerance {accept_tol:.1e}", ConvergenceWarning, stacklevel=2,
            )
            continue
        if root.imag >= 0:
            warnings.warn(
                f"pole index {j}: root {root} is not in the lower half-plane",
                ConvergenceWarning, stacklevel=2,
            )
            continue
        for other_j, other in base.items():
            if abs(other - root) < 1e-8:
                warnings.warn(
                    f"pole indices {other_j} and {j} converged to the same root {root}",
                    ConvergenceWarning, stacklevel=2,
                )
        base[j] = root

    modes = []
    for j in range(j_min, j_max + 1):
        base_index = j if j >= 0 else -j - 1
        if base_index not in base:
            continue
        k = base[base_index] if j >= 0 else -np.conj(base[base_index])
        w = c * k
        residual = abs(complex(anchor_pole_equation(k, medium, scatterer)))
        norm = _anchor_normalization(w, k, medium, scatterer)
        modes.append(ResonanceMode(j, complex(w), complex(k), medium, scatterer,
                                   residual, complex(norm)))
    return modes


def normalization(mode: ResonanceMode, medium: StringMedium, scatterer: Scatterer) -> complex:
    """Biorthogonal normalization of a resonance, in closed form.

    Mass-spring: M w^2 + k_s.  Anchored string: M w^2 + mu w^2 L / sin^2(kL).
    The semi-infinite parts of the defining integrals vanish after
    regularisation, so no numerical integration over unbounded regions is
    ever performed.
    """
    if isinstance(scatterer, MassSpring):
        return scatterer.mass * mode.omega**2 + scatterer.spring
    if isinstance(scatterer, MassAnchor):
        return _anchor_normalization(mode.omega, mode.wavenumber, medium, scatterer)
    raise ValueError("the free string has no resonances to normalise")


def modal_coefficient(
    ic: InitialCondition,
    mode: ResonanceMode,
    medium: StringMedium,
    scatterer: Scatterer,
    grid: SpatialGrid,
    boundary_tol: float = 1e-8,
) -> complex:
    """Expansion coefficient of one mode: the energy inner product of the
    initial data with the absorbing mode, over the closed-form normalization.

    The integral is truncated to the spatial grid, so the initial data must
    be compactly supported inside it; a TruncationWarning is emitted when the
    data is not negligible at the window edge.  The displacement derivative
    is taken by central finite differences on the grid samples.
    """
    x = grid.midpoints
    dx = grid.dx
    f = ic.displacement_samples
    g = ic.velocity_samples

    for name, values in (("displacement", f), ("velocity", g)):
        peak = float(np.max(np.abs(values)))
        if peak == 0.0:
            continue
        edges = [abs(values[-1])]
        if not isinstance(scatterer, MassAnchor):
            # the lower edge of an anchored grid is the physical anchor
            edges.append(abs(values[0]))
        if max(edges) > boundary_tol * peak:
            warnings.warn(
                f"initial {name} is {max(edges):.2e} at the grid edge "
                f"(> {boundary_tol:.0e} of its peak); the truncated inner product "
                "may be inaccurate", TruncationWarning, stacklevel=2,
            )

    w_conj = np.conj(mode.omega)
    psi = mode.absorbing_profile(x)
    dpsi = mode.absorbing_profile_derivative(x)
    fprime = np.gradient(f, dx)
    integrand = (
        medium.tension * fprime * np.conj(dpsi)
        + medium.mu * g * np.conj(-1j * w_conj * psi)
    )
    numerator = dx * complex(np.sum(integrand))
    psi0 = complex(mode.absorbing_profile(0.0))
    numerator += point_mass(scatterer) * ic.point_velocity * np.conj(-1j * w_conj * psi0)
    numerator += point_spring(scatterer) * ic.point_displacement * np.conj(psi0)
    return numerator / normalization(mode, medium, scatterer)


def evolve_sem(
    modes: Sequence[ResonanceMode],
    t: float,
    grid: SpatialGrid,
    tol_im: float = 1e-6,
) -> Snapshot:
    """Modal sum u(x, t) = Re sum_j c_j phi_j(x) exp(-i w_j t).

    For real initial data the modes come in conjugate pairs and the sum is
    real up to rounding; a large imaginary residue means the truncation
    broke a pair and raises ImaginaryResidueError.
    """
    x = grid.midpoints
    u = np.zeros(x.shape, dtype=complex)
    v = np.zeros(x.shape, dtype=complex)
    scale = 0.0
    for mode in modes:
        if mode.coefficient is None:
            raise ValueError(f"mode {mode.index} has no coefficient; supply initial data first")
        profile = mode.resonant_profile(x)
        term = mode.coefficient * profile * np.exp(-1j * mode.omega * t)
        u += term
        v += -1j * mode.omega * term
        scale += abs(mode.coefficient) * float(np.max(np.abs(profile)))

    def as_real(values, what):
        worst = float(np.max(np.abs(values.imag))) if values.size else 0.0
        bound = tol_im * max(float(np.max(np.abs(values.real))), 1e-6 * max(scale, 1e-300))
        if worst > bound:
            raise ImaginaryResidueError(
                f"imaginary residue of the modal {what} is {worst:.3e}, above "
                f"{bound:.3e}; the pole truncation is probably not closed under "
                "conjugation"
            )
        return values.real

    return Snapshot(time=t, displacement=as_real(u, "sum"),
                    velocity=as_real(v, "velocity sum"), method_tag="sem")


class SemSolver(BaseEstimator):
    """Resonance-expansion solver with a fit/predict interface.

    Parameters
    ----------
    medium : StringMedium
    scatterer : MassSpring or MassAnchor
    spatial_grid : SpatialGrid
        Grid the modal inner products are evaluated on.
    j_min, j_max : int
        Truncation range of the resonance indices (anchored string only;
        the mass-spring system always uses its two resonances).
    tol_im : float
        Relative bound on the imaginary residue of the modal sum.

    After ``fit`` the located resonances, with coefficients attached, are in
    ``modes_``.
    """

    def __init__(self, medium=StringMedium(), scatterer=None, spatial_grid=None,
                 j_min=None, j_max=None, tol_im=1e-6,
                 newton_tol=NEWTON_TOL, accept_tol=ACCEPT_TOL, max_iter=MAX_ITER):
        self.medium = medium
        self.scatterer = scatterer
        self.spatial_grid = spatial_grid
        self.j_min = j_min
        self.j_max = j_max
        self.tol_im = tol_im
        self.newton_tol = newton_tol
        self.accept_tol = accept_tol
        self.max_iter = max_iter

    def fit(self, ic: InitialCondition, y=None):
        """Locate the resonances and project the initial data onto them."""
        if self.spatial_grid is None:
            raise ValueError("a spatial grid must be provided before fitting")
        if isinstance(self.scatterer, MassSpring):
            modes = mass_spring_poles(self.medium, self.scatterer)
        elif isinstance(self.scatterer, MassAnchor):
            if self.j_min is None or self.j_max is None:
                raise ValueError("the anchored string needs a truncation range j_min..j_max")
            modes = anchor_poles(self.medium, self.scatterer, self.j_min, self.j_max,
                                 newton_tol=self.newton_tol, accept_tol=self.accept_tol,
                                 max_iter=self.max_iter)
        else:
            raise ValueError("the resonance expansion needs a point scatterer")
        self.modes_ = [
            replace(mode, coefficient=modal_coefficient(
                ic, mode, self.medium, self.scatterer, self.spatial_grid))
            for mode in modes
        ]
        return self

    def _require_fitted(self):
        if not hasattr(self, "modes_"):
            raise ValueError("this solver is not fitted yet; call fit first")

    def predict(self, times: Sequence[float]) -> np.ndarray:
        """Displacement on the grid midpoints, shape (n_times, n_cells)."""
        self._require_fitted()
        return np.stack([
            evolve_sem(self.modes_, float(t), self.spatial_grid, self.tol_im).displacement
            for t in np.atleast_1d(times)
        ])

    def snapshots(self, times: Sequence[float], with_velocity: bool = True) -> list[Snapshot]:
        self._require_fitted()
        snaps = [
            evolve_sem(self.modes_, float(t), self.spatial_grid, self.tol_im)
            for t in np.atleast_1d(times)
        ]
        if not with_velocity:
            snaps = [Snapshot(s.time, s.displacement, None, s.method_tag) for s in snaps]
        return snaps
