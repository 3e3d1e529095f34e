"""Steady disk profiles from the reduced variational problem.

Among planar densities of fixed mass M, a steady profile minimizes the
reduced energy

    h(rho) = int psi(rho) dx + (1/2) int rho U_rho dx,

whose Euler-Lagrange relation on the support is psi'(rho) = E0 - U with
a Lagrange multiplier E0 < 0, i.e. rho = (psi')^{-1}((E0 - U)_+).  The
solver iterates that relation: given the current density, compute its
potential, pick E0 so the implied density carries exactly mass M (a
bracketed root in E0), mix the new density into the old one with a
damping factor, and rescale to mass M.  The rescaling keeps the energy
trace monotone to near roundoff, so the fallback step-halving on an
energy increase stays dormant in practice.

A converged profile lifts to a phase-space equilibrium

    f0(x, v) = (phi')^{-1}((E0 - U0(x) - |v|^2 / 2)_+),

whose velocity marginals reproduce rho0 and whose kinetic and internal
energies follow from one-dimensional integrals over the local depth
E0 - U0(r); those identities are exposed as consistency checks.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .casimir import ConvexModel, load_model, polytrope, pressure, reduce_phi_to_psi, save_model, tabulated
from .errors import ConvergenceError, FormatError, ModelError
from .poisson import (RadialField, RadialPoissonSolver, e_pot, force_radial,
                      load_radial, radial_quadrature, save_radial)

__all__ = [
    "SteadyState",
    "LiftedState",
    "cutoff_mass",
    "casimir_integral",
    "reduced_energy",
    "solve_reduced",
    "lift",
    "consistency_check",
    "equilibrium_checks",
    "scan_mass",
    "save_solution",
    "load_solution",
]

_GX64, _GW64 = np.polynomial.legendre.leggauss(64)
_SOLUTION_MAGIC = "flatgrav-solution v1"


# =====================================================================
# Energy pieces
# =====================================================================

def casimir_integral(psi: ConvexModel, rho: RadialField) -> float:
    """Internal energy int psi(rho) over the plane."""
    pts, wts, _ = radial_quadrature(rho.nodes)
    rq = np.maximum(rho.interp(pts), 0.0)
    return float(np.sum(wts * psi.value(rq) * 2.0 * np.pi * pts))


def reduced_energy(psi: ConvexModel, rho: RadialField, U: RadialField) -> float:
    """Reduced energy: internal plus interaction."""
    return casimir_integral(psi, rho) + e_pot(rho, U)


def cutoff_mass(U: RadialField, E0: float, psi: ConvexModel) -> float:
    """Mass of the Euler-Lagrange density (psi')^{-1}((E0 - U)_+).

    The support edge, where U crosses E0, is located by a bracketed
    root; the panel containing it is re-integrated under r = edge - t^2,
    which flattens the (E0 - U)^n cusp of typical power laws.
    """
    pts, wts, edges = radial_quadrature(U.nodes)
    Ui = U._interpolator(U.values)
    nodes = U.nodes
    integ = psi.inv_deriv(np.maximum(float(E0) - Ui(pts), 0.0)) * 2.0 * np.pi * pts
    if E0 > U.values[-1]:
        return float(np.sum(wts * integ))

    i = int(np.searchsorted(U.values, E0))
    lo, hi = nodes[max(i - 1, 0)], nodes[min(i, len(nodes) - 1)]
    try:
        r_edge = brentq(lambda r: float(Ui(r)) - E0, lo, hi)
    except ValueError:
        r_edge = lo
    integ = np.where(pts <= r_edge, integ, 0.0)
    total = float(np.sum(wts * integ))

    # replace the edge panel's plain Gauss by the substituted rule
    j = max(int(np.searchsorted(edges, r_edge)) - 1, 0)
    a, b = edges[j], edges[j + 1]
    mask = (pts >= a) & (pts <= b)
    base = float(np.sum(wts[mask] * integ[mask]))
    tmax = np.sqrt(max(r_edge - a, 0.0))
    t = 0.5 * tmax * (_GX64 + 1.0)
    tw = 0.5 * tmax * _GW64
    rr = r_edge - t ** 2
    edge_val = float(np.sum(tw * 2.0 * t * psi.inv_deriv(np.maximum(E0 - Ui(rr), 0.0))
                            * 2.0 * np.pi * rr))
    return total - base + edge_val


def _mass_norm(rho: RadialField, values: np.ndarray) -> float:
    """Plane integral of |values| with the field's interpolation rule."""
    return rho.integrate(np.abs(values))


# =====================================================================
# Steady state
# =====================================================================

@dataclass
class SteadyState:
    """Converged minimizer of the reduced problem with its diagnostics."""

    psi: ConvexModel
    mass: float
    rho: RadialField
    U: RadialField
    E0: float
    h_value: float
    r_edge: float
    r_half: float
    t_dyn: float
    iterations: int
    el_residual: float
    update_l1: float
    converged: bool
    trace: np.ndarray = field(repr=False, default=None)
    phi: Optional[ConvexModel] = None


def _gaussian_prescan(psi: ConvexModel, mass: float) -> float:
    """Width of the best Gaussian trial density, by coarse 1-d scan.

    The interaction energy of a Gaussian disk is known in closed form
    (-0.44311346... M^2 / R); the internal term is integrated on a small
    throwaway grid.  The dimensional estimate R ~ c'^3 / M centers the
    scan for power laws and is harmless otherwise.
    """
    ep1 = -0.4431134627263789 * mass ** 2
    if psi.kind == "polytrope":
        r_dim = psi.coefficient ** 3 / mass
    else:
        r_dim = 1.0
    best_r, best_h = None, np.inf
    for R in np.geomspace(r_dim / 50.0, 50.0 * r_dim, 61):
        nodes = np.geomspace(1e-3 * R, 12.0 * R, 96)
        rho = mass / (2.0 * np.pi * R ** 2) * np.exp(-nodes ** 2 / (2.0 * R ** 2))
        try:
            ca = casimir_integral(psi, RadialField(nodes, rho))
        except Exception:
            continue
        h = ca + ep1 / R
        if h < best_h:
            best_r, best_h = R, h
    if best_r is None:
        raise ModelError("could not evaluate the internal energy of any trial density")
    return best_r


def solve_reduced(psi: ConvexModel, mass: float, *, num_nodes: int = 512,
                  nodes=None, theta0: float = 0.5, tol_update: float = 1e-8,
                  tol_el: float = 1e-6, max_iter: int = 500,
                  phi: Optional[ConvexModel] = None,
                  callback: Optional[Callable] = None) -> SteadyState:
    """Minimize the reduced energy at fixed mass by damped iteration.

    Parameters
    ----------
    psi : ConvexModel
        Reduced profile; its growth rate n must lie in (0, 2), otherwise
        the infimum is -inf and no minimizer exists.
    mass : float
        Total mass, positive.
    num_nodes : int
        Radial resolution when ``nodes`` is not given; the grid spans
        [1e-3, 20] times the pre-scan width, geometrically.
    theta0 : float
        Initial mixing weight; halved (floor 1e-3) whenever the energy
        trace rises beyond roundoff, which the mass rescaling makes rare.
    tol_update, tol_el : float
        Convergence: mass-relative L1 change of the iterate, and the
        same norm of the Euler-Lagrange defect.
    callback : callable, optional
        Called each iteration with (iteration, h_value, el_residual).

    Raises
    ------
    ConvergenceError
        If the tolerances are not met within ``max_iter`` iterations or
        the energy keeps rising for 25 consecutive steps.
    """
    if not (np.isfinite(mass) and mass > 0):
        raise ModelError(f"mass must be positive, got {mass}")
    n = psi.growth_rate
    if not 0.0 < n < 2.0:
        raise ModelError(
            f"reduced growth rate n = {n:.4g} outside (0, 2); the "
            "mass-constrained energy is unbounded below")

    if nodes is None:
        R0 = _gaussian_prescan(psi, mass)
        nodes = np.geomspace(1e-3 * R0, 20.0 * R0, num_nodes)
    else:
        nodes = np.asarray(nodes, dtype=float)
        R0 = nodes[-1] / 20.0
    solver = RadialPoissonSolver(nodes)
    pts, wts, _ = radial_quadrature(nodes)

    rho_vals = mass / (2.0 * np.pi * R0 ** 2) * np.exp(-nodes ** 2 / (2.0 * R0 ** 2))
    rho = RadialField(nodes, rho_vals)
    rho_vals = rho_vals * (mass / rho.mass)
    rho = RadialField(nodes, rho_vals)

    U_vals = solver.potential_values(rho_vals)
    trace = [reduced_energy(psi, rho, RadialField(nodes, U_vals))]
    theta = theta0
    rising = 0
    E0 = np.nan
    el_res = np.inf
    dl1 = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        U = RadialField(nodes, U_vals)
        lo = float(U_vals.min()) * (1.0 - 1e-12)
        hi = -1e-14 * abs(float(U_vals.min()))
        try:
            E0 = brentq(lambda E: cutoff_mass(U, E, psi) - mass, lo, hi, rtol=1e-13)
        except ValueError as exc:
            raise ConvergenceError(
                f"iteration {it}: no cutoff in [{lo:.6g}, {hi:.6g}] carries "
                f"mass {mass:g} ({exc})") from None
        rho_new = psi.inv_deriv(np.maximum(E0 - U_vals, 0.0))
        el_res = _mass_norm(rho, rho_new - rho_vals) / mass
        mixed = (1.0 - theta) * rho_vals + theta * rho_new
        mixed_field = RadialField(nodes, mixed)
        mixed = mixed * (mass / mixed_field.mass)
        U_next = solver.potential_values(mixed)
        next_field = RadialField(nodes, mixed)
        h_next = reduced_energy(psi, next_field, RadialField(nodes, U_next))
        dl1 = _mass_norm(rho, mixed - rho_vals) / mass
        if h_next > trace[-1] + 1e-12 * (1.0 + abs(trace[-1])):
            theta = max(theta / 2.0, 1e-3)
            rising += 1
            if rising >= 25:
                raise ConvergenceError(
                    f"energy rose for {rising} consecutive iterations "
                    f"(h = {h_next:.8g}); the iteration is diverging")
        else:
            rising = 0
        trace.append(h_next)
        rho_vals, U_vals = mixed, U_next
        rho = next_field
        if callback is not None:
            callback(it, h_next, el_res)
        if dl1 < tol_update and el_res < tol_el:
            break
    else:
        raise ConvergenceError(
            f"no convergence in {max_iter} iterations "
            f"(update {dl1:.3g}, defect {el_res:.3g})")

    U = RadialField(nodes, U_vals)
    Ui = U._interpolator(U_vals)
    r_edge = brentq(lambda r: float(Ui(r)) - E0, nodes[0], nodes[-1])
    r_half = rho.half_mass_radius()
    f_half = force_radial(U, np.asarray([r_half]))[0]
    t_dyn = 2.0 * np.pi * np.sqrt(r_half / abs(f_half))
    return SteadyState(psi=psi, mass=mass, rho=rho, U=U, E0=float(E0),
                       h_value=float(trace[-1]), r_edge=float(r_edge),
                       r_half=float(r_half), t_dyn=float(t_dyn),
                       iterations=it, el_residual=float(el_res),
                       update_l1=float(dl1), converged=True,
                       trace=np.asarray(trace), phi=phi)


# =====================================================================
# Phase-space lift
# =====================================================================

def _depth_integral(fun, depth: np.ndarray) -> np.ndarray:
    """Gauss integral of fun(u) over u in [0, depth], per depth entry."""
    depth = np.asarray(depth, dtype=float)
    half = 0.5 * np.maximum(depth, 0.0)
    u = half[:, None] * (_GX64[None, :] + 1.0)
    w = half[:, None] * _GW64[None, :]
    return np.sum(w * fun(u), axis=1)


@dataclass
class LiftedState:
    """Kinetic equilibrium lifted from a steady planar profile."""

    state: SteadyState
    phi: ConvexModel
    f_max: float
    v_max: float
    e_kin: float
    casimir_phase: float

    def depth(self, r) -> np.ndarray:
        """Local well depth (E0 - U0(r))_+ ."""
        return np.maximum(self.state.E0 - self.state.U.interp(r), 0.0)

    def f(self, r, vx, vy) -> np.ndarray:
        """Distribution value at radius r and velocity (vx, vy)."""
        r, vx, vy = np.broadcast_arrays(np.asarray(r, dtype=float), vx, vy)
        arg = self.depth(r.ravel()).reshape(r.shape) - 0.5 * (vx ** 2 + vy ** 2)
        return self.phi.inv_deriv(np.maximum(arg, 0.0)) * (arg > 0)

    def v_edge(self, r) -> np.ndarray:
        """Escape speed of the support at radius r."""
        return np.sqrt(2.0 * self.depth(r))

    @property
    def total_energy(self) -> float:
        """Full energy E_kin + E_pot + int phi(f) of the lift."""
        return self.e_kin + e_pot(self.state.rho, self.state.U) + self.casimir_phase


def lift(state: SteadyState, phi: Optional[ConvexModel] = None,
         mismatch_tol: float = 1e-6) -> LiftedState:
    """Lift a steady profile to its phase-space equilibrium.

    ``phi`` defaults to the profile recorded in the state.  The reduction
    of ``phi`` is compared against the state's psi on the density range of
    the solution; a relative deviation beyond ``mismatch_tol`` means the
    two models are inconsistent and the lift would not reproduce rho0.
    """
    if phi is None:
        phi = state.phi
    if phi is None:
        raise ModelError("no phase-space profile recorded; pass phi explicitly")

    rho_max = float(np.max(state.rho.values))
    if rho_max <= 0:
        raise ModelError("state density vanishes; nothing to lift")
    psi_check = reduce_phi_to_psi(phi)
    probe = np.geomspace(rho_max * 1e-6, rho_max, 64)
    try:
        rel = np.abs(psi_check.value(probe) / state.psi.value(probe) - 1.0)
    except Exception as exc:
        raise ModelError(f"cannot compare reduced profiles: {exc}") from None
    if np.max(rel) > mismatch_tol:
        raise ModelError(
            f"reduction of the given phi deviates from the state's psi by "
            f"{np.max(rel):.3g} (tol {mismatch_tol:g}); mismatched models")

    depth_nodes = np.maximum(state.E0 - state.U.values, 0.0)
    f_max = float(phi.inv_deriv(np.asarray([depth_nodes.max()]))[0])
    v_max = float(np.sqrt(2.0 * depth_nodes.max()))

    inv = lambda u: phi.inv_deriv(np.maximum(u, 0.0))
    # int f |v|^2/2 dv = 2 pi int_0^D u (phi')^{-1}(D - u) du
    ekin_nodal = 2.0 * np.pi * _depth_integral(
        lambda u: u * inv(depth_nodes[:, None] - u), depth_nodes)
    # int phi(f) dv = 2 pi int_0^D phi((phi')^{-1}(u)) du
    cas_nodal = 2.0 * np.pi * _depth_integral(
        lambda u: phi.value(inv(u)), depth_nodes)
    e_kin = state.rho.integrate(ekin_nodal)
    casimir_phase = state.rho.integrate(cas_nodal)
    return LiftedState(state=state, phi=phi, f_max=f_max, v_max=v_max,
                       e_kin=float(e_kin), casimir_phase=float(casimir_phase))


def consistency_check(lifted: LiftedState) -> dict:
    """Residuals tying the lift back to the planar solution.

    density: sup |int f0 dv - rho0| / max rho0 over the nodes, using the
    marginal identity int f0 dv = 2 pi Phi*(E0 - U0).
    value: |(E_kin + int phi(f0)) - int psi(rho0)| / |int psi(rho0)|,
    the equality of full and reduced energies at the steady state.
    """
    state = lifted.state
    phi = lifted.phi
    depth_nodes = np.maximum(state.E0 - state.U.values, 0.0)
    inv = lambda u: phi.inv_deriv(np.maximum(u, 0.0))
    rho_marginal = 2.0 * np.pi * _depth_integral(
        lambda u: inv(depth_nodes[:, None] - u), depth_nodes)
    rho_max = float(np.max(state.rho.values))
    density_resid = float(np.max(np.abs(rho_marginal - state.rho.values)) / rho_max)

    cas_reduced = casimir_integral(state.psi, state.rho)
    value_resid = abs((lifted.e_kin + lifted.casimir_phase) - cas_reduced) / abs(cas_reduced)
    return {"density": density_resid, "value": float(value_resid)}


# =====================================================================
# Equilibrium diagnostics
# =====================================================================

def equilibrium_checks(state: SteadyState) -> dict:
    """Residuals a true minimizer must satisfy, all dimensionless.

    mass: relative mass defect of the stored density.
    euler_lagrange: mass-relative L1 distance between rho0 and the
        density implied by psi'(rho) = E0 - U0.
    virial: (2 int p + E_pot) / |E_pot| with p = rho psi'(rho) - psi(rho).
    hydrostatic: max |dp/dr + rho dU/dr| / max |rho dU/dr| on the nodes.

    A zero density returns zeros (nothing to check).
    """
    rho, U = state.rho, state.U
    if np.all(rho.values == 0.0):
        return {"mass": 0.0, "euler_lagrange": 0.0, "virial": 0.0, "hydrostatic": 0.0}

    mass_rel = abs(rho.mass - state.mass) / state.mass
    implied = state.psi.inv_deriv(np.maximum(state.E0 - U.values, 0.0))
    el = _mass_norm(rho, implied - rho.values) / state.mass

    pts, wts, _ = radial_quadrature(rho.nodes)
    rq = np.maximum(rho.interp(pts), 0.0)
    p_int = float(np.sum(wts * pressure(state.psi, rq) * 2.0 * np.pi * pts))
    ep = e_pot(rho, U)
    virial = (2.0 * p_int + ep) / abs(ep)

    p_nodal = pressure(state.psi, np.maximum(rho.values, 0.0))
    dp = RadialField(rho.nodes, p_nodal).deriv(rho.nodes)
    dU = U.deriv(U.nodes)
    grav = rho.values * dU
    hydro = float(np.max(np.abs(dp + grav)) / np.max(np.abs(grav)))
    return {"mass": float(mass_rel), "euler_lagrange": float(el),
            "virial": float(virial), "hydrostatic": hydro}


def scan_mass(psi: ConvexModel, masses, **solve_kwargs) -> dict:
    """Minimize at several masses and test monotonicity of the infimum.

    Returns the states, their energies, the worst violation of the
    scaling comparison h(m) >= (m/M)^{3/2} h(M) for m <= M (expected
    nonpositive up to solver error), and for power-law psi the fitted
    against predicted homogeneity exponent of |h(M)|.
    """
    masses = np.asarray(sorted(masses), dtype=float)
    states = [solve_reduced(psi, m, **solve_kwargs) for m in masses]
    h = np.array([s.h_value for s in states])
    worst = -np.inf
    for i in range(len(masses)):
        for j in range(i + 1, len(masses)):
            bound = (masses[i] / masses[j]) ** 1.5 * h[j]
            worst = max(worst, (bound - h[i]) / abs(h[j]))
    out = {"masses": masses, "h_values": h, "states": states,
           "worst_bound_violation": float(worst)}
    if psi.kind == "polytrope" and len(masses) >= 2:
        n = psi.growth_rate
        fit = np.polyfit(np.log(masses), np.log(-h), 1)[0]
        out["homogeneity_fitted"] = float(fit)
        out["homogeneity_expected"] = (3.0 - n) / (2.0 - n)
    return out


# =====================================================================
# Persistence
# =====================================================================

def _model_descriptor(model: Optional[ConvexModel], directory: str, stem: str):
    if model is None:
        return None
    if model.kind == "polytrope":
        return {"kind": "polytrope", "coefficient": model.coefficient,
                "exponent": model.exponent}
    fname = f"{stem}.csv"
    save_model(model, os.path.join(directory, fname))
    return {"kind": "tabulated", "file": fname}


def _model_from_descriptor(desc, directory: str) -> Optional[ConvexModel]:
    if desc is None:
        return None
    if desc["kind"] == "polytrope":
        return polytrope(desc["coefficient"], desc["exponent"])
    return load_model(os.path.join(directory, desc["file"]))


def save_solution(state: SteadyState, directory) -> None:
    """Persist a steady state as a directory of small artifacts.

    solution.json holds scalars and model descriptors; rho0.csv and
    U0.csv hold the nodal profiles; tabulated models get their own CSVs.
    """
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    save_radial(state.rho, os.path.join(directory, "rho0.csv"))
    save_radial(state.U, os.path.join(directory, "U0.csv"))
    doc = {
        "format": _SOLUTION_MAGIC,
        "mass": state.mass,
        "E0": state.E0,
        "h_value": state.h_value,
        "r_edge": state.r_edge,
        "r_half": state.r_half,
        "t_dyn": state.t_dyn,
        "iterations": state.iterations,
        "el_residual": state.el_residual,
        "update_l1": state.update_l1,
        "converged": state.converged,
        "psi": _model_descriptor(state.psi, directory, "psi_table"),
        "phi": _model_descriptor(state.phi, directory, "phi_table"),
    }
    tmp = os.path.join(directory, "solution.json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, os.path.join(directory, "solution.json"))


def load_solution(directory) -> SteadyState:
    """Rebuild a steady state saved by save_solution."""
    directory = os.fspath(directory)
    path = os.path.join(directory, "solution.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"{directory}: not a solution directory "
                          "(missing solution.json)") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("format") != _SOLUTION_MAGIC:
        raise FormatError(f"{path}: unknown format {doc.get('format')!r}")
    psi = _model_from_descriptor(doc["psi"], directory)
    phi = _model_from_descriptor(doc.get("phi"), directory)
    rho = load_radial(os.path.join(directory, "rho0.csv"))
    U = load_radial(os.path.join(directory, "U0.csv"))
    return SteadyState(psi=psi, mass=doc["mass"], rho=rho, U=U, E0=doc["E0"],
                       h_value=doc["h_value"], r_edge=doc["r_edge"],
                       r_half=doc["r_half"], t_dyn=doc["t_dyn"],
                       iterations=doc["iterations"],
                       el_residual=doc["el_residual"],
                       update_l1=doc["update_l1"], converged=doc["converged"],
                       trace=None, phi=phi)
