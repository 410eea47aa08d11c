"""Closed-form frequency-domain scattering solutions.

Every function takes a real or complex frequency ``omega`` (scalar or array)
and broadcasts against the position argument, so the same code serves the
real-frequency quadrature grids and mode evaluation at complex resonances.
The time convention is exp(-i omega t), so velocities are v = -i omega u.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CotSingularityError, PoleHitError
from .model import FreeString, MassAnchor, MassSpring, Scatterer, StringMedium

__all__ = [
    "free_field",
    "mass_spring_coefficients",
    "mass_spring_field",
    "anchor_coefficients",
    "anchor_field",
    "FrequencyDomainField",
    "solve_frequency_domain",
]

#: |denominator| below which a coefficient evaluation counts as a pole hit
POLE_TOL = 1e-12
#: |sin(kL)| below which the anchored-string cotangent is undefined
SIN_TOL = 1e-12


def _wavenumber(omega, medium: StringMedium):
    return np.asarray(omega, dtype=complex) / medium.wave_speed


def mass_spring_coefficients(omega, medium: StringMedium, scatterer: MassSpring,
                             pole_tol: float = POLE_TOL):
    """Reflection and transmission coefficients of the mass-spring scatterer.

    r = (k_s - M w^2) / (2ikT - k_s + M w^2)  and  t = 2ikT / (same),
    with k = w / c.  Raises PoleHitError when the shared denominator is
    smaller than ``pole_tol`` in modulus (evaluation at a complex resonance).
    """
    w = np.asarray(omega, dtype=complex)
    k = _wavenumber(w, medium)
    T = medium.tension
    den = 2j * k * T - scatterer.spring + scatterer.mass * w**2
    if np.min(np.abs(den)) < pole_tol:
        raise PoleHitError(
            "mass-spring coefficients requested at a resonance "
            f"(|denominator| = {np.min(np.abs(den)):.3e})"
        )
    r = (scatterer.spring - scatterer.mass * w**2) / den
    t = 2j * k * T / den
    if np.isscalar(omega):
        return complex(r), complex(t)
    return r, t


def free_field(omega, incidence: str, medium: StringMedium, x):
    """Plane-wave field of the free string: u = exp(+-ikx), v = -i w u."""
    w = np.asarray(omega, dtype=complex)
    k = _wavenumber(w, medium)
    x = np.asarray(x, dtype=float)
    sign = {"+": 1.0, "-": -1.0}[incidence]
    u = np.exp(1j * sign * k * x)
    v = -1j * w * u
    if np.isscalar(omega) and u.ndim == 0:
        return complex(u), complex(v)
    return u, v


def mass_spring_field(omega, incidence: str, medium: StringMedium,
                      scatterer: MassSpring, x, pole_tol: float = POLE_TOL):
    """Scattering field of the mass-spring system.

    For incidence "+" (wave arriving from x = -infinity):
    u = exp(ikx) + r exp(-ikx) on x < 0 and t exp(ikx) on x >= 0.
    Incidence "-" is the mirror image x -> -x.
    """
    if incidence not in ("+", "-"):
        raise ValueError(f"incidence must be '+' or '-', got {incidence!r}")
    w = np.asarray(omega, dtype=complex)
    k = _wavenumber(w, medium)
    x = np.asarray(x, dtype=float)
    r, t = mass_spring_coefficients(w, medium, scatterer, pole_tol=pole_tol)
    if incidence == "-":
        x = -x
    towards = np.exp(1j * k * x)
    away = np.exp(-1j * k * x)
    u = np.where(x < 0, towards + r * away, t * towards)
    v = -1j * w * u
    if np.isscalar(omega) and u.ndim == 0:
        return complex(u), complex(v)
    return u, v


def anchor_coefficients(omega, medium: StringMedium, scatterer: MassAnchor,
                        sin_tol: float = SIN_TOL, pole_tol: float = POLE_TOL):
    """Reflection coefficient and interior amplitude of the anchored string.

    r = -(M c^2 k^2 - kT cot(kL) - ikT) / (M c^2 k^2 - kT cot(kL) + ikT)
    and B = r + 1.  The cotangent is computed as cos/sin with an explicit
    guard on |sin(kL)| so the failure mode is visible rather than an inf.
    """
    w = np.asarray(omega, dtype=complex)
    k = _wavenumber(w, medium)
    T = medium.tension
    c = medium.wave_speed
    M, L = scatterer.mass, scatterer.offset
    s = np.sin(k * L)
    if np.min(np.abs(s)) < sin_tol:
        raise CotSingularityError(
            f"sin(kL) is below tolerance ({np.min(np.abs(s)):.3e}); the reflection "
            "formula's cotangent is undefined at this frequency"
        )
    cot = np.cos(k * L) / s
    body = M * c**2 * k**2 - k * T * cot
    den = body + 1j * k * T
    if np.min(np.abs(den)) < pole_tol:
        raise PoleHitError(
            "anchored-string coefficients requested at a resonance "
            f"(|denominator| = {np.min(np.abs(den)):.3e})"
        )
    r = -(body - 1j * k * T) / den
    B = r + 1.0
    if np.isscalar(omega):
        return complex(r), complex(B)
    return r, B


def anchor_field(omega, medium: StringMedium, scatterer: MassAnchor, x,
                 sin_tol: float = SIN_TOL, pole_tol: float = POLE_TOL):
    """Scattering field of a mass in front of an anchor point.

    u = B sin(k(x+L)) / sin(kL) on -L <= x < 0 and
    u = exp(-ikx) + r exp(ikx) on x >= 0, so u(-L) = 0 exactly and the two
    branches agree at x = 0 by construction (both equal B = 1 + r).
    """
    w = np.asarray(omega, dtype=complex)
    k = _wavenumber(w, medium)
    x = np.asarray(x, dtype=float)
    L = scatterer.offset
    if np.any(x < -L - 1e-12 * max(1.0, L)):
        raise ValueError(f"positions must satisfy x >= -{L} (the anchor)")
    r, B = anchor_coefficients(w, medium, scatterer, sin_tol=sin_tol, pole_tol=pole_tol)
    s = np.sin(k * L)
    interior = B * np.sin(k * (x + L)) / s
    exterior = np.exp(-1j * k * x) + r * np.exp(1j * k * x)
    u = np.where(x < 0, interior, exterior)
    v = -1j * w * u
    if np.isscalar(omega) and u.ndim == 0:
        return complex(u), complex(v)
    return u, v


@dataclass(frozen=True)
class FrequencyDomainField:
    """One frequency-domain scattering solution, bundled with its coefficients.

    ``incidence`` is "+" or "-" for the infinite-string configurations and
    "anchor" for the semi-infinite one (which has a single incidence family).
    """

    omega: complex
    wavenumber: complex
    incidence: str
    medium: StringMedium
    scatterer: Scatterer
    reflection: complex = 0.0
    transmission: Optional[complex] = None
    interior_amplitude: Optional[complex] = None

    def evaluate(self, x):
        """Field values (u, v) at position(s) x."""
        if isinstance(self.scatterer, FreeString):
            return free_field(self.omega, self.incidence, self.medium, x)
        if isinstance(self.scatterer, MassSpring):
            return mass_spring_field(self.omega, self.incidence, self.medium, self.scatterer, x)
        return anchor_field(self.omega, self.medium, self.scatterer, x)


def solve_frequency_domain(
    omega, medium: StringMedium, scatterer: Scatterer, incidence: str = "+"
) -> FrequencyDomainField:
    """Solve the frequency-domain scattering problem at one frequency."""
    w = complex(omega)
    k = w / medium.wave_speed
    if isinstance(scatterer, FreeString):
        return FrequencyDomainField(w, k, incidence, medium, scatterer, transmission=1.0)
    if isinstance(scatterer, MassSpring):
        r, t = mass_spring_coefficients(w, medium, scatterer)
        return FrequencyDomainField(w, k, incidence, medium, scatterer,
                                    reflection=r, transmission=t)
    r, B = anchor_coefficients(w, medium, scatterer)
    return FrequencyDomainField(w, k, "anchor", medium, scatterer,
                                reflection=r, interior_amplitude=B)
