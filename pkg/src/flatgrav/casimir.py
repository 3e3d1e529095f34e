"""Convex structure functions and their Legendre transforms.

A steady configuration is described by two convex profiles: a microscopic
one, phi(f), penalizing phase-space density, and its reduced counterpart,
psi(rho), acting on the planar mass density.  The two are linked by
marginalizing the conjugate over the two velocity dimensions:

    psi*(lam) = integral_{R^2} phi*(lam - |v|^2 / 2) dv
              = 2 pi * integral_0^lam phi*(s) ds,        lam >= 0,

with psi recovered as the biconjugate.  Conjugates vanish for lam <= 0.
For a pure power law phi(f) = c f^(1+1/k) the chain has a closed form:

    psi(rho) = c' rho^(1+1/n),   n = k + 1,
    c' = ((k+1)/(k+2)) ((k+1)/(2 pi))^(1/(k+1)) (c (k+1)/k)^(k/(k+1)).

Everything here is scale-free; densities and multipliers are nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ExtrapolationError, FormatError, ModelError

__all__ = [
    "ConvexModel",
    "ConjugateModel",
    "polytrope",
    "tabulated",
    "eval_model",
    "legendre_numeric",
    "reduce_phi_to_psi",
    "reduced_coefficient",
    "pressure",
    "d_reduced",
    "tabulate",
    "save_model",
    "load_model",
    "DEFAULT_GRID",
]

#: Default geometric evaluation grid for conjugates and tabulations.
DEFAULT_GRID = np.geomspace(1e-8, 1e4, 2048)

_CSV_MAGIC = "# convex-model v1"


# =====================================================================
# Models
# =====================================================================

@dataclass(frozen=True)
class ConvexModel:
    """A strictly convex, superlinear profile with value(0) = deriv(0) = 0.

    Two kinds are supported.  ``polytrope`` is the closed-form power law
    ``coefficient * r**exponent`` (exponent > 1).  ``tabulated`` is a
    sampled profile on a positive increasing grid; values are interpolated
    with a monotone cubic, derivatives with a piecewise-linear interpolant
    of the nodal slopes, and the head below the first node is continued by
    the power law fitted to the first two nodes (so value(0) = 0 exactly).
    Evaluation above the last node raises ExtrapolationError.
    """

    kind: str
    coefficient: float = 1.0
    exponent: float = 0.0
    grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "polytrope":
            if not np.isfinite(self.coefficient) or self.coefficient <= 0:
                raise ModelError(f"polytrope coefficient must be positive, got {self.coefficient}")
            if not np.isfinite(self.exponent) or self.exponent <= 1:
                raise ModelError(f"polytrope exponent must exceed 1, got {self.exponent}")
        elif self.kind == "tabulated":
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if g.ndim != 1 or g.size < 4 or v.shape != g.shape:
                raise ModelError("tabulated model needs matching 1-d grid/values with >= 4 nodes")
            if not np.all(np.isfinite(g)) or not np.all(np.isfinite(v)):
                raise ModelError("tabulated model contains non-finite entries")
            if g[0] <= 0 or np.any(np.diff(g) <= 0):
                raise ModelError("tabulated grid must be positive and strictly increasing")
            if np.any(v < 0) or np.any(np.diff(v) <= 0):
                raise ModelError("tabulated values must be nonnegative and strictly increasing")
            slopes = np.gradient(v, g)
            if np.any(np.diff(slopes) <= 0):
                raise ModelError("tabulated model is not strictly convex (nodal slopes not increasing)")
            if np.any(np.diff(v / g) <= 0):
                raise ModelError("tabulated model is not superlinear (value/r not increasing)")
            object.__setattr__(self, "grid", g)
            object.__setattr__(self, "values", v)
            # fitted power-law head r**p for continuation below grid[0]
            p = np.log(v[1] / v[0]) / np.log(g[1] / g[0])
            if p <= 1:
                raise ModelError("tabulated head exponent must exceed 1 (deriv(0) = 0 fails)")
            object.__setattr__(self, "_head_exp", p)
            object.__setattr__(self, "_head_coef", v[0] / g[0] ** p)
            object.__setattr__(self, "_interp", PchipInterpolator(g, v, extrapolate=False))
            object.__setattr__(self, "_slopes", slopes)
        else:
            raise ModelError(f"unknown model kind {self.kind!r}")

    # -- evaluation -----------------------------------------------------

    def _check_domain(self, r: np.ndarray) -> None:
        if np.any(r < 0):
            raise ModelError("model argument must be nonnegative")
        if self.kind == "tabulated" and np.any(r > self.grid[-1] * (1 + 1e-12)):
            raise ExtrapolationError(
                f"argument {np.max(r):g} above tabulated range {self.grid[-1]:g}")

    def value(self, r):
        """Profile value, elementwise."""
        r = np.asarray(r, dtype=float)
        self._check_domain(r)
        if self.kind == "polytrope":
            return self.coefficient * r ** self.exponent
        out = np.where(r < self.grid[0], self._head_coef * r ** self._head_exp, 0.0)
        inside = r >= self.grid[0]
        if np.any(inside):
            vals = self._interp(np.minimum(r, self.grid[-1]))
            out = np.where(inside, vals, out)
        return out

    def deriv(self, r):
        """First derivative, elementwise."""
        r = np.asarray(r, dtype=float)
        self._check_domain(r)
        if self.kind == "polytrope":
            return self.coefficient * self.exponent * r ** (self.exponent - 1)
        head = self._head_coef * self._head_exp * np.minimum(r, self.grid[0]) ** (self._head_exp - 1)
        body = np.interp(r, self.grid, self._slopes)
        return np.where(r < self.grid[0], head, body)

    def inv_deriv(self, s):
        """Inverse of the derivative, elementwise; 0 for s <= 0."""
        s = np.asarray(s, dtype=float)
        if self.kind == "polytrope":
            core = np.maximum(s, 0.0) / (self.coefficient * self.exponent)
            return core ** (1.0 / (self.exponent - 1.0))
        d = self._slopes
        if np.any(s > d[-1] * (1 + 1e-12)):
            raise ExtrapolationError(
                f"slope {np.max(s):g} above tabulated derivative range {d[-1]:g}")
        s = np.minimum(s, d[-1])
        # piecewise-linear derivative inverts exactly segment by segment
        j = np.clip(np.searchsorted(d, s) - 1, 0, len(d) - 2)
        frac = (s - d[j]) / (d[j + 1] - d[j])
        body = self.grid[j] + frac * (self.grid[j + 1] - self.grid[j])
        c, p = self._head_coef * self._head_exp, self._head_exp - 1.0
        head = (np.maximum(s, 0.0) / c) ** (1.0 / p)
        return np.where(s <= d[0], head, body) * (s > 0)

    # -- structure ------------------------------------------------------

    @property
    def growth_rate(self) -> float:
        """k with value ~ r**(1+1/k) at the large-argument end."""
        if self.kind == "polytrope":
            return 1.0 / (self.exponent - 1.0)
        g, v = self.grid, self.values
        sel = g >= g[-1] / 10.0
        if np.count_nonzero(sel) < 3:
            sel = np.arange(len(g)) >= len(g) - 3
        slope = np.polyfit(np.log(g[sel]), np.log(v[sel]), 1)[0]
        return 1.0 / (slope - 1.0)

    @property
    def growth_rate_small(self) -> float:
        """k' with value ~ r**(1+1/k') at the small-argument end."""
        if self.kind == "polytrope":
            return 1.0 / (self.exponent - 1.0)
        return 1.0 / (self._head_exp - 1.0)


def polytrope(coefficient: float, exponent: float) -> ConvexModel:
    """Power-law model coefficient * r**exponent."""
    return ConvexModel(kind="polytrope", coefficient=coefficient, exponent=exponent)


def tabulated(grid, values) -> ConvexModel:
    """Sampled model on a positive increasing grid."""
    return ConvexModel(kind="tabulated", grid=np.asarray(grid, dtype=float),
                       values=np.asarray(values, dtype=float))


def eval_model(model: ConvexModel, r, what: str = "value"):
    """Evaluate ``value``, ``deriv`` or ``inv_deriv`` of a model."""
    if what not in ("value", "deriv", "inv_deriv"):
        raise ModelError(f"unknown evaluation kind {what!r}")
    return getattr(model, what)(r)


# =====================================================================
# Legendre transforms
# =====================================================================

@dataclass(frozen=True)
class ConjugateModel:
    """Tabulated convex conjugate sup_r (lam r - value(r)) on lam >= 0.

    The conjugate vanishes for lam <= 0 and is convex and nondecreasing.
    ``value`` interpolates the table (power-law head below the first node),
    ``integral_to`` is the exact running integral of the interpolant from 0,
    used when marginalizing over velocities.
    """

    lambda_grid: np.ndarray
    table: np.ndarray
    source_kind: str = "generic"

    def __post_init__(self):
        lg = np.asarray(self.lambda_grid, dtype=float)
        tb = np.asarray(self.table, dtype=float)
        if lg.ndim != 1 or lg.size < 4 or tb.shape != lg.shape:
            raise ModelError("conjugate table needs matching 1-d grids with >= 4 nodes")
        if lg[0] <= 0 or np.any(np.diff(lg) <= 0):
            raise ModelError("conjugate lambda grid must be positive increasing")
        if np.any(tb < 0) or np.any(np.diff(tb) < 0):
            raise ModelError("conjugate values must be nonnegative and nondecreasing")
        object.__setattr__(self, "lambda_grid", lg)
        object.__setattr__(self, "table", tb)
        interp = PchipInterpolator(lg, tb, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_anti", interp.antiderivative())
        with np.errstate(divide="ignore"):
            p = np.log(tb[1] / tb[0]) / np.log(lg[1] / lg[0]) if tb[0] > 0 else 1.0
        if not np.isfinite(p) or p < 1:
            p = 1.0
        object.__setattr__(self, "_head_exp", p)
        object.__setattr__(self, "_head_coef", tb[0] / lg[0] ** p if tb[0] > 0 else 0.0)

    def value(self, lam):
        """Conjugate value, elementwise; 0 for lam <= 0."""
        lam = np.asarray(lam, dtype=float)
        if np.any(lam > self.lambda_grid[-1] * (1 + 1e-12)):
            raise ExtrapolationError(
                f"multiplier {np.max(lam):g} above conjugate range {self.lambda_grid[-1]:g}")
        head = self._head_coef * np.maximum(lam, 0.0) ** self._head_exp
        body = self._interp(np.clip(lam, self.lambda_grid[0], self.lambda_grid[-1]))
        out = np.where(lam < self.lambda_grid[0], head, body)
        return np.where(lam > 0, out, 0.0)

    def integral_to(self, lam):
        """Integral of the conjugate from 0 to lam, elementwise."""
        lam = np.asarray(lam, dtype=float)
        if np.any(lam > self.lambda_grid[-1] * (1 + 1e-12)):
            raise ExtrapolationError(
                f"multiplier {np.max(lam):g} above conjugate range {self.lambda_grid[-1]:g}")
        g0 = self.lambda_grid[0]
        head_full = self._head_coef * g0 ** (self._head_exp + 1) / (self._head_exp + 1)
        head_part = self._head_coef * np.minimum(np.maximum(lam, 0.0), g0) ** (self._head_exp + 1) \
            / (self._head_exp + 1)
        body = self._anti(np.clip(lam, g0, self.lambda_grid[-1])) - self._anti(g0)
        return np.where(lam <= g0, head_part, head_full + body)


def legendre_numeric(model: ConvexModel, lambda_grid=None) -> ConjugateModel:
    """Convex conjugate of a model by bisection on its monotone derivative.

    For each multiplier the supremum of ``lam * r - value(r)`` is attained
    where ``deriv(r) = lam``; the root is bracketed by doubling and then
    bisected to relative precision 1e-12.

    Parameters
    ----------
    model : ConvexModel
    lambda_grid : array, optional
        Positive increasing multipliers; defaults to DEFAULT_GRID.  For
        tabulated models the grid must stay below deriv(last node).
    """
    lam = np.asarray(DEFAULT_GRID if lambda_grid is None else lambda_grid, dtype=float)
    if lam.ndim != 1 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
        raise ModelError("lambda grid must be positive and strictly increasing")

    if model.kind == "tabulated":
        dmax = model.deriv(model.grid[-1:])[0]
        if lam[-1] > dmax:
            raise ExtrapolationError(
                f"lambda grid reaches {lam[-1]:g} but the tabulated derivative "
                f"tops out at {dmax:g}; pass a grid within range")

    # bracket: double hi until deriv(hi) >= lam everywhere; tabulated
    # models are capped at their last node (the entry guard already
    # ensured the derivative there covers the whole grid)
    cap = model.grid[-1] if model.kind == "tabulated" else np.inf
    hi = np.minimum(np.ones_like(lam), cap)
    for _ in range(200):
        short = model.deriv(hi) < lam
        if not np.any(short):
            break
        hi = np.where(short, np.minimum(2.0 * hi, cap), hi)
    else:
        raise ModelError("could not bracket the conjugate maximizer (derivative too flat)")
    lo = np.zeros_like(lam)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = model.deriv(mid) < lam
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    r_star = 0.5 * (lo + hi)
    table = lam * r_star - model.value(r_star)
    return ConjugateModel(lambda_grid=lam, table=np.maximum(table, 0.0),
                          source_kind=model.kind)


# =====================================================================
# Velocity-space reduction
# =====================================================================

def reduced_coefficient(coefficient: float, k: float) -> float:
    """Closed-form coefficient of the reduced power law for a polytrope.

    For phi(f) = coefficient * f**(1+1/k) the reduced profile is
    psi(rho) = c' * rho**(1+1/n) with n = k + 1 and c' returned here.
    """
    return ((k + 1.0) / (k + 2.0)) * ((k + 1.0) / (2.0 * np.pi)) ** (1.0 / (k + 1.0)) \
        * (coefficient * (k + 1.0) / k) ** (k / (k + 1.0))


def reduce_phi_to_psi(phi: ConvexModel, lambda_grid=None, force_numeric: bool = False) -> ConvexModel:
    """Reduce a phase-space profile to its planar-density counterpart.

    The reduced conjugate is the running velocity marginal
    psi*(lam) = 2 pi * integral_0^lam phi*(s) ds, and psi is its conjugate,
    evaluated parametrically: the maximizer of rho * lam - psi*(lam)
    satisfies rho = 2 pi phi*(lam), so sweeping the multiplier grid yields
    matched (rho, psi) pairs with no root finding.

    Polytropes return the exact closed-form power law unless
    ``force_numeric`` is set (used to cross-check the chain).

    Returns
    -------
    ConvexModel
        Polytrope for polytrope input (exact), tabulated otherwise.
    """
    if phi.kind == "polytrope" and not force_numeric:
        k = phi.growth_rate
        return polytrope(reduced_coefficient(phi.coefficient, k), 1.0 + 1.0 / (k + 1.0))

    conj = legendre_numeric(phi, lambda_grid)
    lam = conj.lambda_grid
    rho = 2.0 * np.pi * conj.value(lam)
    psi_vals = rho * lam - 2.0 * np.pi * conj.integral_to(lam)
    keep = (rho > 0) & (psi_vals > 0)
    keep &= np.r_[True, np.diff(rho) > 0] & np.r_[True, np.diff(psi_vals) > 0]
    if np.count_nonzero(keep) < 8:
        raise ModelError("reduction produced too few usable nodes; widen the lambda grid")
    return tabulated(rho[keep], psi_vals[keep])


# =====================================================================
# Derived quantities
# =====================================================================

def pressure(psi: ConvexModel, rho):
    """Pressure law rho * psi'(rho) - psi(rho), elementwise."""
    rho = np.asarray(rho, dtype=float)
    return rho * psi.deriv(rho) - psi.value(rho)


def d_reduced(psi: ConvexModel, rho, rho0, U0, E0: float) -> float:
    """Relative free energy of ``rho`` against a steady density ``rho0``.

    Integrates psi(rho) - psi(rho0) + (U0 - E0)(rho - rho0) over the plane.
    The integrand is pointwise nonnegative when (rho0, U0, E0) satisfy the
    variational relation, vanishing exactly at rho = rho0; small negative
    returns at roundoff scale are possible.

    Parameters
    ----------
    psi : ConvexModel
        Reduced profile.
    rho, rho0 : RadialField or PlanarField
        Candidate and steady densities on one common grid.
    U0 : RadialField or PlanarField
        Steady potential on the same grid.
    E0 : float
        Cutoff multiplier of the steady state.
    """
    from .poisson import same_grid

    same_grid(rho, rho0, "d_reduced densities")
    same_grid(rho, U0, "d_reduced density/potential")
    a = np.maximum(np.asarray(rho.values, dtype=float), 0.0)
    b = np.maximum(np.asarray(rho0.values, dtype=float), 0.0)
    integrand = psi.value(a) - psi.value(b) + (U0.values - E0) * (a - b)
    return float(rho.integrate(integrand))


# =====================================================================
# Tabulation and CSV interchange
# =====================================================================

def tabulate(model: ConvexModel, grid=None) -> ConvexModel:
    """Sample a model onto a grid as a tabulated model."""
    g = np.asarray(DEFAULT_GRID if grid is None else grid, dtype=float)
    return tabulated(g, model.value(g))


def save_model(model: ConvexModel, path) -> None:
    """Write a tabulated model as two-column CSV with the format header."""
    if model.kind != "tabulated":
        raise ModelError("only tabulated models are saved as CSV; tabulate() first")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_CSV_MAGIC + "\n")
        for r, v in zip(model.grid, model.values):
            fh.write(f"{float(r)!r},{float(v)!r}\n")


def load_model(path) -> ConvexModel:
    """Read a tabulated model written by save_model."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != _CSV_MAGIC:
            raise FormatError(f"{path}: expected header {_CSV_MAGIC!r}, got {first!r}")
        rows = []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"{path}:{ln}: expected two comma-separated columns")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise FormatError(f"{path}:{ln}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    try:
        return tabulated(arr[:, 0], arr[:, 1])
    except ModelError as exc:
        raise FormatError(f"{path}: {exc}") from None
