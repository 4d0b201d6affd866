"""Grid, harmonic input, and the on-disk surface-field bundle.

A surface run produces nodewise fields over a uniform rectangle: the Kaehler
angle alpha, the amplitude a, the frame factor lambda, the phase integral nu,
the second-fundamental-form entry c, and two curvature evaluations. They
travel as fields.csv (one row per node, x-major) next to a meta.json; the
verifier reconstructs everything from those two files alone.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .coeffs import ModelParams
from .errors import ConfigError

CSV_COLUMNS = ("x", "y", "alpha", "a_re", "a_im", "lambda_re", "lambda_im",
               "nu", "c_re", "c_im", "K_formula", "K_metric", "mask")

# mask bits
MASK_SINGULAR = 1   # node too close to the cascade singularity sin^2(alpha) = 2/3
MASK_NUPATH = 2     # two-path phase integration disagreed beyond 10 h^2
MASK_DOMAIN = 4     # phase amplitude squared nonpositive: no admissible c there


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on [x0, x1] x [y0, y1] with nx-by-ny nodes."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise ConfigError("grid needs at least 5 nodes per axis for the stencils")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError("grid rectangle is degenerate")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def axes(self):
        return (np.linspace(self.x0, self.x1, self.nx),
                np.linspace(self.y0, self.y1, self.ny))

    def mesh(self):
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def zmesh(self):
        X, Y = self.mesh()
        return X + 1j * Y


@dataclass(frozen=True)
class HarmonicInput:
    """Real part of a complex polynomial: f = Re sum_k coeffs[k] z^k."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if len(self.coeffs) < 2 or all(c == 0 for c in self.coeffs[1:]):
            raise ConfigError("harmonic input must be nonconstant")

    def f(self, z):
        p = np.zeros_like(np.asarray(z, dtype=np.complex128))
        for c in reversed(self.coeffs):
            p = p * z + c
        return p.real

    def fz(self, z):
        # Wirtinger derivative of Re P is P'/2
        z = np.asarray(z, dtype=np.complex128)
        dp = np.zeros_like(z)
        for k in range(len(self.coeffs) - 1, 0, -1):
            dp = dp * z + k * self.coeffs[k]
        return 0.5 * dp

    @classmethod
    def affine_window(cls, lo: float, hi: float, rect, tilt: float = 0.0):
        """Affine input whose values sweep [lo, hi] over the rectangle.

        f = Re(g0 + p e^{-i tilt} z) = g0 + p (x cos tilt + y sin tilt), so for
        tilt in [0, pi/2) the extremes sit at opposite rectangle corners.
        """
        x0, x1, y0, y1 = rect
        if not (0.0 <= tilt < np.pi / 2):
            raise ConfigError("tilt must lie in [0, pi/2)")
        if not (hi > lo and x1 > x0 and y1 > y0):
            raise ConfigError("window and rectangle must have positive extent")
        span = (x1 - x0) * np.cos(tilt) + (y1 - y0) * np.sin(tilt)
        p = (hi - lo) / span
        g0 = lo - p * (x0 * np.cos(tilt) + y0 * np.sin(tilt))
        return cls((complex(g0), p * np.exp(-1j * tilt)))


@dataclass
class SurfaceFields:
    """All nodewise fields of one constructed surface."""

    grid: Grid
    params: ModelParams
    alpha: np.ndarray
    a: np.ndarray
    lam: np.ndarray
    nu: np.ndarray          # anchored phase integral; the constant offset is excluded
    c: np.ndarray
    K_formula: np.ndarray
    K_metric: np.ndarray
    mask: np.ndarray        # uint8 bit field, 0 = clean
    meta: dict = field(default_factory=dict)


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_fields(fields: SurfaceFields, directory: str) -> str:
    """Write fields.csv (deterministic byte layout) and return its path."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "fields.csv")
    X, Y = fields.grid.mesh()
    cols = (X, Y, fields.alpha, fields.a.real, fields.a.imag,
            fields.lam.real, fields.lam.imag, fields.nu,
            fields.c.real, fields.c.imag, fields.K_formula, fields.K_metric)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        mask = fields.mask
        for i in range(fields.grid.nx):
            for j in range(fields.grid.ny):
                row = [_fmt(col[i, j]) for col in cols]
                row.append(str(int(mask[i, j])))
                fh.write(",".join(row) + "\n")
    return path


def write_meta(meta: dict, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "meta.json")
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_fields(directory: str) -> SurfaceFields:
    """Rebuild a SurfaceFields bundle from fields.csv + meta.json."""
    csv_path = os.path.join(directory, "fields.csv")
    meta_path = os.path.join(directory, "meta.json")
    if not os.path.exists(csv_path):
        raise ConfigError(f"missing fields.csv under {directory}")
    if not os.path.exists(meta_path):
        raise ConfigError(f"missing meta.json under {directory}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    try:
        params = ModelParams(rho=float(meta["config"]["params"]["rho"]),
                             b=float(meta["config"]["params"]["b"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"meta.json lacks readable model params: {exc}") from None

    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ConfigError("fields.csv columns do not match the expected layout")
        data = np.array([[float(v) for v in row] for row in reader], dtype=np.float64)
    if data.size == 0:
        raise ConfigError("fields.csv holds no rows")

    xs = data[:, 0]
    # rows are x-major: the leading run of constant x has length ny
    ny = int(np.argmax(xs != xs[0])) or len(xs)
    if len(xs) % ny:
        raise ConfigError("fields.csv row count is not a full grid")
    nx = len(xs) // ny

    def col(k):
        return data[:, k].reshape(nx, ny)

    x_ax = col(0)[:, 0]
    y_ax = col(1)[0, :]
    for ax in (x_ax, y_ax):
        d = np.diff(ax)
        if len(d) and (np.any(d <= 0) or np.ptp(d) > 1e-9 * max(abs(ax[0]), abs(ax[-1]), 1.0)):
            raise ConfigError("grid axes are not uniformly increasing")
    grid = Grid(x0=float(x_ax[0]), x1=float(x_ax[-1]), y0=float(y_ax[0]), y1=float(y_ax[-1]),
                nx=nx, ny=ny)
    return SurfaceFields(
        grid=grid, params=params,
        alpha=col(2),
        a=col(3) + 1j * col(4),
        lam=col(5) + 1j * col(6),
        nu=col(7),
        c=col(8) + 1j * col(9),
        K_formula=col(10),
        K_metric=col(11),
        mask=col(12).astype(np.uint8),
        meta=meta,
    )
