"""Angle-profile ODE and the warp potential.

The construction reduces the surface PDE to a one-variable problem: an
amplitude profile a(alpha) solving

    da/dalpha = t2(alpha, a, conj a) / (conj(a) + b),

and a strictly monotone potential K(alpha) with K' = g, g' = -F g, whose
inverse psi warps a harmonic input into the Kaehler angle. F is real along
conjugate-pair data and the ODE preserves the real axis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .coeffs import ModelParams
from .errors import ConfigError, GuardTripped, StepFailure

AB_GUARD = 1e-3          # |a + b| floor; the ODE divides by (conj a + b)
_IM_TOL = 1e-12          # relative imaginary-part ceiling for F
_DENSE_STEPS = 256       # max_step divisor for dense output


def _max_step(lo: float, hi: float) -> float:
    # Large solver steps leave visible interpolation wiggle in the dense
    # output; downstream difference stencils amplify it by 1/h^2. Capping the
    # step keeps the interpolant at machine accuracy.
    return max((hi - lo) / _DENSE_STEPS, 1e-6)


def _t2_value(alpha, a, abar, params: ModelParams):
    cot = np.cos(alpha) / np.sin(alpha)
    return 2.0 * a * (abar - params.b) * cot \
        + 1.5 * params.rho * np.sin(alpha) * np.cos(alpha)


def F_eval(alpha, a, abar=None, *, params: ModelParams):
    """Warp coefficient F(alpha) evaluated from profile data; real by construction."""
    alpha = np.asarray(alpha, dtype=np.float64)
    a = np.asarray(a, dtype=np.complex128)
    ab = np.conj(a) if abar is None else np.asarray(abar, dtype=np.complex128)
    b, rho = params.b, params.rho
    s = np.sin(alpha)
    cot = np.cos(alpha) / s
    F = ((a - b) * (ab - b) + 1.5 * rho * s * s) * cot / ((a + b) * (ab + b))
    scale = 1.0 + np.abs(F)
    if np.any(np.abs(F.imag) > _IM_TOL * scale):
        raise ArithmeticError("F acquired an imaginary part beyond tolerance")
    return F.real


def _singular_alphas_in(lo: float, hi: float) -> list[float]:
    """Angles with sin^2 = 2/3 inside [lo, hi]; the cascade cannot evaluate there."""
    star = float(np.arcsin(np.sqrt(2.0 / 3.0)))
    out = []
    k = 0
    while k * np.pi < hi + np.pi:
        for cand in (k * np.pi + star, (k + 1) * np.pi - star):
            if lo <= cand <= hi:
                out.append(cand)
        k += 1
    return sorted(set(out))


@dataclass
class ProfileSolution:
    """Amplitude profile over a closed angle interval."""

    params: ModelParams
    alpha0: float
    a0: complex
    alpha_range: tuple[float, float]
    singular_alphas: list[float]
    tol: float
    _down: object = field(repr=False, default=None)   # dense solution for alpha <= alpha0
    _up: object = field(repr=False, default=None)     # dense solution for alpha >= alpha0

    def a(self, alpha):
        alpha = np.asarray(alpha, dtype=np.float64)
        lo, hi = self.alpha_range
        if np.any(alpha < lo - 1e-12) or np.any(alpha > hi + 1e-12):
            raise ValueError("alpha outside the solved range")
        flat = np.clip(np.atleast_1d(alpha), lo, hi)
        out = np.empty(flat.shape, dtype=np.complex128)
        below = flat <= self.alpha0
        if below.any():
            y = self._down.sol(flat[below]) if self._down is not None \
                else np.tile([[self.a0.real], [self.a0.imag]], (1, int(below.sum())))
            out[below] = y[0] + 1j * y[1]
        above = ~below
        if above.any():
            y = self._up.sol(flat[above]) if self._up is not None \
                else np.tile([[self.a0.real], [self.a0.imag]], (1, int(above.sum())))
            out[above] = y[0] + 1j * y[1]
        return out.reshape(alpha.shape) if alpha.shape else out[0]

    def F(self, alpha):
        return F_eval(alpha, self.a(alpha), params=self.params)


def solve_profile(params: ModelParams, alpha0: float, a0: complex,
                  alpha_range: tuple[float, float], tol: float = 1e-10) -> ProfileSolution:
    """Integrate the amplitude ODE across alpha_range from initial data at alpha0.

    The march halts only when |a + b| falls to the guard floor; crossing the
    coefficient-cascade singularity sin^2(alpha) = 2/3 is regular for this ODE
    and is merely recorded in singular_alphas for downstream masking. Raises
    GuardTripped with the largest valid sub-interval when the guard fires,
    StepFailure when the integrator stalls.
    """
    lo, hi = float(alpha_range[0]), float(alpha_range[1])
    if not (0.0 < lo < np.pi and 0.0 < hi < np.pi and lo < hi):
        raise ConfigError("alpha_range must be a nontrivial interval inside (0, pi)")
    if not (lo <= alpha0 <= hi):
        raise ConfigError("alpha0 must lie inside alpha_range")
    a0 = complex(a0)
    if a0.imag == 0.0:
        warnings.warn("real initial amplitude: the profile stays real "
                      "(vanishing-phase surface class)", stacklevel=2)
    if abs(a0 + params.b) <= AB_GUARD:
        raise GuardTripped("|a0 + b| already at the guard floor", achieved=(alpha0, alpha0))

    def rhs(alpha, y):
        a = y[0] + 1j * y[1]
        da = _t2_value(alpha, a, np.conj(a), params) / (np.conj(a) + params.b)
        return [da.real, da.imag]

    def guard_event(alpha, y):
        return abs((y[0] + 1j * y[1]) + params.b) - AB_GUARD
    guard_event.terminal = True

    y0 = [a0.real, a0.imag]
    down = up = None
    reached_lo, reached_hi = alpha0, alpha0
    step = _max_step(lo, hi)
    if lo < alpha0:
        down = solve_ivp(rhs, (alpha0, lo), y0, method="DOP853", dense_output=True,
                         rtol=tol, atol=tol, max_step=step, events=guard_event)
        if down.status == -1:
            raise StepFailure(f"integrator failed toward {lo}: {down.message}")
        reached_lo = float(down.t[-1])
    if hi > alpha0:
        up = solve_ivp(rhs, (alpha0, hi), y0, method="DOP853", dense_output=True,
                       rtol=tol, atol=tol, max_step=step, events=guard_event)
        if up.status == -1:
            raise StepFailure(f"integrator failed toward {hi}: {up.message}")
        reached_hi = float(up.t[-1])

    achieved = (reached_lo, reached_hi)
    if reached_lo > lo + 1e-12 or reached_hi < hi - 1e-12:
        raise GuardTripped("|a + b| guard tripped before covering the requested range",
                           achieved=achieved)
    return ProfileSolution(params=params, alpha0=float(alpha0), a0=a0,
                           alpha_range=(lo, hi),
                           singular_alphas=_singular_alphas_in(lo, hi),
                           tol=tol, _down=down, _up=up)


@dataclass
class Potential:
    """Strictly monotone potential K with derivative g, plus the inverse warp psi."""

    alpha0: float
    K0: float
    Kprime0: float
    alpha_range: tuple[float, float]
    _down: object = field(repr=False, default=None)
    _up: object = field(repr=False, default=None)
    _inv: object = field(repr=False, default=None)

    def _eval(self, alpha, row):
        alpha = np.asarray(alpha, dtype=np.float64)
        flat = np.atleast_1d(alpha)
        out = np.empty(flat.shape, dtype=np.float64)
        below = flat <= self.alpha0
        if below.any():
            src = self._down if self._down is not None else None
            out[below] = src.sol(flat[below])[row] if src is not None \
                else (self.Kprime0 if row == 0 else self.K0)
        if (~below).any():
            src = self._up if self._up is not None else None
            out[~below] = src.sol(flat[~below])[row] if src is not None \
                else (self.Kprime0 if row == 0 else self.K0)
        return out.reshape(alpha.shape) if alpha.shape else out[0]

    def g(self, alpha):
        return self._eval(alpha, 0)

    def K(self, alpha):
        return self._eval(alpha, 1)

    @property
    def t_range(self) -> tuple[float, float]:
        lo, hi = self.alpha_range
        k = (self.K(lo), self.K(hi))
        return (min(k), max(k))

    def psi(self, t):
        """Inverse of K: monotone cubic interpolation plus one Newton polish."""
        t = np.asarray(t, dtype=np.float64)
        tlo, thi = self.t_range
        if np.any(t < tlo - 1e-10) or np.any(t > thi + 1e-10):
            raise ValueError("warp input outside the potential range")
        alpha = self._inv(np.clip(t, tlo, thi))
        alpha = alpha - (self.K(alpha) - t) / self.g(alpha)
        lo, hi = self.alpha_range
        return np.clip(alpha, lo, hi)


def build_potential(profile: ProfileSolution, K0: float = 0.0, Kprime0: float = 1.0,
                    tol: float = 1e-12, n_grid: int = 4001) -> Potential:
    """Integrate g' = -F g, K' = g across the profile's range.

    Normalized by K(alpha0) = K0 and g(alpha0) = Kprime0. g never vanishes
    (it is an exponential integral scaled by Kprime0), so K is strictly
    monotone and invertible; psi is its inverse.
    """
    if Kprime0 == 0.0:
        raise ConfigError("Kprime0 must be nonzero: the potential must be strictly monotone")
    lo, hi = profile.alpha_range
    a0c = profile.alpha0

    def rhs(alpha, y):
        F = profile.F(alpha)
        return [-F * y[0], y[0]]

    y0 = [Kprime0, K0]
    down = up = None
    step = _max_step(lo, hi)
    if lo < a0c:
        down = solve_ivp(rhs, (a0c, lo), y0, method="DOP853", dense_output=True,
                         rtol=tol, atol=tol, max_step=step)
        if down.status != 0:
            raise StepFailure(f"potential integration failed toward {lo}: {down.message}")
    if hi > a0c:
        up = solve_ivp(rhs, (a0c, hi), y0, method="DOP853", dense_output=True,
                       rtol=tol, atol=tol, max_step=step)
        if up.status != 0:
            raise StepFailure(f"potential integration failed toward {hi}: {up.message}")

    pot = Potential(alpha0=a0c, K0=float(K0), Kprime0=float(Kprime0),
                    alpha_range=(lo, hi), _down=down, _up=up)
    grid = np.linspace(lo, hi, n_grid)
    kv = pot.K(grid)
    if Kprime0 < 0:
        grid, kv = grid[::-1], kv[::-1]
    pot._inv = PchipInterpolator(kv, grid, extrapolate=False)
    return pot
