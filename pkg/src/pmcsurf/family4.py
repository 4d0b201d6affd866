"""Explicit two-parameter surface family at b = 1, rho = -3.

Closed-form amplitude a(t), phase integral xi(t), and entry c(t) over an
admissible arc of t, parametrized by c1 (shape) and c2 (phase offset). The
c2 line is an associated family: changing c2 moves only the argument of c,
every metric quantity stays fixed.

Surfaces are assembled through the same warped-angle route as the generic
pipeline: the family's own angle ODE supplies a potential anchored at the
arc midpoint so the warp is a near-identity correction, and the harmonic
input ranges directly over the t-arc.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .coeffs import ModelParams
from .construct import ConstructResult, build_alpha, cascade_mask, gauss_curvature
from .errors import ConfigError, InadmissibleC1, OutOfInterval, QuadratureFailure, StepFailure
from .fields import Grid, HarmonicInput, SurfaceFields
from .profile import F_eval, Potential, _max_step as _pmax_step

FAMILY_MODEL = ModelParams(rho=-3.0, b=1.0)

_INTERVAL_GUARD = 1e-8     # relative end margin for state evaluation
_POTENTIAL_MARGIN = 0.012  # relative margin the warp potential keeps off the arc ends


def _check_c1(c1: float) -> float:
    c1 = float(c1)
    if not (c1 < 0.0 or c1 > 9.0 / 8.0):
        raise InadmissibleC1(f"c1 = {c1} is not admissible: need c1 < 0 or c1 > 9/8")
    return c1


@dataclass(frozen=True)
class FamilyParams:
    c1: float
    c2: float = 0.0

    def __post_init__(self):
        _check_c1(self.c1)
        object.__setattr__(self, "c2", float(self.c2))


def valid_interval(c1: float) -> tuple[float, float]:
    """The admissible t-arc, principal arcsines into (0, pi/2].

    Both square roots under the amplitude stay real and positive strictly
    inside; for c1 > 9/8 both endpoints are degenerate (excluded), for c1 < 0
    the right endpoint pi/2 is regular (included).
    """
    c1 = _check_c1(c1)
    if c1 > 9.0 / 8.0:
        return (float(np.arcsin(np.sqrt(1.0 / c1))), float(np.arcsin(np.sqrt(8.0 / 9.0))))
    return (float(np.arcsin(np.sqrt(8.0 / 9.0))), float(np.pi / 2.0))


def _radicand(s2, c1):
    return 2.0 * (8.0 - 9.0 * s2) * (-1.0 + c1 * s2)


def family_amplitude(t, c1: float):
    """Closed-form amplitude a(t) along the arc."""
    c1 = _check_c1(c1)
    t = np.asarray(t, dtype=np.float64)
    s2 = np.sin(t) ** 2
    rt = np.sqrt(_radicand(s2, c1))
    num = -4.0 + (9.0 + 4.0 * c1) * s2 - 9.0 * c1 * s2 * s2 + 1j * rt
    den = 4.0 * (-1.0 + c1 * s2) - 1j * rt
    return num / den


def family_amplitude_derivative(t, c1: float):
    """Exact t-derivative of the closed-form amplitude (chain rule, no differencing)."""
    c1 = _check_c1(c1)
    t = np.asarray(t, dtype=np.float64)
    s2 = np.sin(t) ** 2
    ds2 = np.sin(2.0 * t)
    rt = np.sqrt(_radicand(s2, c1))
    drt = (-9.0 * 2.0 * (-1.0 + c1 * s2) + 2.0 * (8.0 - 9.0 * s2) * c1) * ds2 / (2.0 * rt)
    num = -4.0 + (9.0 + 4.0 * c1) * s2 - 9.0 * c1 * s2 * s2 + 1j * rt
    dnum = ((9.0 + 4.0 * c1) - 18.0 * c1 * s2) * ds2 + 1j * drt
    den = 4.0 * (-1.0 + c1 * s2) - 1j * rt
    dden = 4.0 * c1 * ds2 - 1j * drt
    return (dnum * den - num * dden) / (den * den)


def _prefactor(c1: float) -> float:
    r = c1 / (2.0 * (-9.0 + 8.0 * c1))
    assert r > 0, "amplitude prefactor must be real for admissible c1"
    return float(np.sqrt(r))


def _xi_integrand(t, c1):
    s2 = np.sin(t) ** 2
    return 2.0 ** 2.5 / np.tan(t) / np.sqrt((8.0 - 9.0 * s2) * (-1.0 + c1 * s2))


def _t_ref(c1: float) -> float:
    lo, hi = valid_interval(c1)
    return 0.5 * (lo + hi)


def _guarded(t, c1) -> np.ndarray:
    lo, hi = valid_interval(c1)
    guard = _INTERVAL_GUARD * (hi - lo)
    t = np.asarray(t, dtype=np.float64)
    hi_ok = hi if c1 < 0 else hi - guard   # pi/2 endpoint is regular when c1 < 0
    if np.any(t < lo + guard) or np.any(t > hi_ok + 1e-15):
        raise OutOfInterval(f"t outside the admissible arc ({lo:.9g}, {hi:.9g}) for c1 = {c1}")
    return t


# quadrature results memoized per (c1, quad_tol); dict ops are atomic, so
# concurrent readers at worst duplicate a computation
_xi_tables: dict = {}
_XI_TABLE_CAP = 4096


def xi_of_t(t: float, params: FamilyParams, quad_tol: float = 1e-10) -> float:
    """Phase integral by adaptive quadrature, anchored xi(midpoint) = c2."""
    t = float(_guarded(t, params.c1))
    table = _xi_tables.setdefault((params.c1, quad_tol), {})
    val = table.get(t)
    if val is None:
        val, err = quad(_xi_integrand, _t_ref(params.c1), t, args=(params.c1,),
                        epsabs=quad_tol, epsrel=quad_tol, limit=200)
        if not np.isfinite(val) or err > max(10.0 * quad_tol, 1e-8 * (1.0 + abs(val))):
            raise QuadratureFailure(f"phase quadrature error estimate {err:.3g} at t = {t}")
        if len(table) < _XI_TABLE_CAP:
            table[t] = val
    return params.c2 + val


def family_state(t, params: FamilyParams, quad_tol: float = 1e-10):
    """(a, xi, c) at one t."""
    t = float(_guarded(t, params.c1))
    a = complex(family_amplitude(t, params.c1))
    xi = xi_of_t(t, params, quad_tol)
    s2 = np.sin(t) ** 2
    c = _prefactor(params.c1) * (8.0 - 9.0 * s2) * np.exp(1j * xi)
    return a, xi, complex(c)


def family_ode_residual(t, c1: float):
    """How well the closed-form amplitude solves the profile ODE da/dt = t2/(abar+b)."""
    a = family_amplitude(t, c1)
    ab = np.conj(a)
    t = np.asarray(t, dtype=np.float64)
    cot = np.cos(t) / np.sin(t)
    t2 = 2.0 * a * (ab - FAMILY_MODEL.b) * cot \
        + 1.5 * FAMILY_MODEL.rho * np.sin(t) * np.cos(t)
    return family_amplitude_derivative(t, c1) - t2 / (ab + FAMILY_MODEL.b)


def family_potential(c1: float, tol: float = 1e-12) -> Potential:
    """Warp potential from the family's angle ODE, anchored at the arc midpoint.

    Normalization K(t_ref) = t_ref, g(t_ref) = 1 makes the warp a
    near-identity correction, so harmonic inputs range directly over the
    t-arc. The potential stops a small relative margin short of the arc ends,
    where the warp coefficient blows up.
    """
    lo, hi = valid_interval(c1)
    margin = _POTENTIAL_MARGIN * (hi - lo)
    lo_m, hi_m = lo + margin, hi - margin
    tref = _t_ref(c1)

    def rhs(t, y):
        F = F_eval(t, family_amplitude(t, c1), params=FAMILY_MODEL)
        return [-F * y[0], y[0]]

    y0 = [1.0, tref]
    step = _pmax_step(lo_m, hi_m)
    down = solve_ivp(rhs, (tref, lo_m), y0, method="DOP853", dense_output=True,
                     rtol=tol, atol=tol, max_step=step)
    up = solve_ivp(rhs, (tref, hi_m), y0, method="DOP853", dense_output=True,
                   rtol=tol, atol=tol, max_step=step)
    if down.status != 0 or up.status != 0:
        raise StepFailure("family potential integration failed")

    from scipy.interpolate import PchipInterpolator
    pot = Potential(alpha0=tref, K0=tref, Kprime0=1.0, alpha_range=(lo_m, hi_m),
                    _down=down, _up=up)
    grid = np.linspace(lo_m, hi_m, 4001)
    pot._inv = PchipInterpolator(pot.K(grid), grid, extrapolate=False)
    return pot


class _XiDense:
    """Dense phase integral over a t-window via the derivative ODE."""

    def __init__(self, c1: float, window: tuple[float, float], tol: float):
        tref = _t_ref(c1)
        lo, hi = window

        def rhs(t, y):
            return [_xi_integrand(t, c1)]

        self._down = self._up = None
        self.tref = tref
        step = _pmax_step(min(lo, tref), max(hi, tref))
        if lo < tref:
            self._down = solve_ivp(rhs, (tref, lo), [0.0], method="DOP853",
                                   dense_output=True, rtol=tol, atol=tol,
                                   max_step=step)
            if self._down.status != 0:
                raise QuadratureFailure("phase integral ODE failed (down sweep)")
        if hi > tref:
            self._up = solve_ivp(rhs, (tref, hi), [0.0], method="DOP853",
                                 dense_output=True, rtol=tol, atol=tol,
                                 max_step=step)
            if self._up.status != 0:
                raise QuadratureFailure("phase integral ODE failed (up sweep)")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        flat = np.atleast_1d(t)
        out = np.zeros(flat.shape)
        below = flat <= self.tref
        if below.any():
            out[below] = self._down.sol(flat[below])[0] if self._down is not None else 0.0
        if (~below).any():
            out[~below] = self._up.sol(flat[~below])[0] if self._up is not None else 0.0
        return out.reshape(t.shape) if t.shape else out[0]


def family_surface(harmonic: HarmonicInput, grid: Grid, params: FamilyParams,
                   quad_tol: float = 1e-10) -> ConstructResult:
    """Assemble family surface fields over a grid.

    The harmonic input must range inside the warp window of the t-arc. The
    angle is the warped input, amplitude and c ride on it in closed form;
    b = 1 and rho = -3 are forced. The stored nu column is the anchored phase
    integral (c2 excluded, matching the construct-side convention for the
    phase constant).
    """
    pot = family_potential(params.c1)
    Z = grid.zmesh()
    f = harmonic.f(Z)
    alpha = build_alpha(f, pot)
    a = family_amplitude(alpha, params.c1)
    lam = harmonic.fz(Z) / (pot.g(alpha) * (a + FAMILY_MODEL.b))

    xi = _XiDense(params.c1, (float(np.min(alpha)), float(np.max(alpha))), quad_tol)(alpha)
    s2 = np.sin(alpha) ** 2
    c = _prefactor(params.c1) * (8.0 - 9.0 * s2) * np.exp(1j * (xi + params.c2))

    mask = cascade_mask(alpha)
    K_formula, K_metric = gauss_curvature(alpha, a, lam, FAMILY_MODEL, grid)
    bad = mask != 0
    nu = np.where(bad, np.nan, xi)
    c = np.where(bad, np.nan + 0j, c)

    fields = SurfaceFields(grid=grid, params=FAMILY_MODEL, alpha=alpha, a=a, lam=lam,
                           nu=nu, c=c, K_formula=K_formula, K_metric=K_metric, mask=mask)
    return ConstructResult(fields=fields, guard_events=[],
                           nu_info={"source": "closed-form phase integral"})


def general_type_witness(fields: SurfaceFields) -> dict:
    """Evidence that the surface is of general type: a is nonreal and c nonzero."""
    ok = fields.mask == 0
    ima = float(np.max(np.abs(fields.a.imag)[ok])) if ok.any() else 0.0
    cmag = fields.c[ok & np.isfinite(fields.c)]
    return {"max_abs_im_a": ima,
            "min_abs_c": float(np.min(np.abs(cmag))) if cmag.size else float("nan")}
