"""Particle-in-cell evolution of razor-thin disks.

Equilibria produced by the steady solver are tested empirically: draw
particles from the lifted distribution, optionally perturb them, and
march the self-consistent system with a kick-drift-kick leapfrog.  The
density is deposited with cloud-in-cell weights, the potential comes
from the exact-convolution planar solver, forces are fourth-order
finite differences gathered back at the particles.

Per diagnostic step the run records conserved quantities and two
distances to the initial profile: the potential-norm distance (raw and
minimized over rigid translations, since a boosted equilibrium drifts
as a whole) and the relative free energy d(rho, rho0), evaluated both
against the resting profile and against its best translate.

Particles leaving the box are dropped from the ensemble and their mass
is reported; a run whose density reaches the outer cells is truncated
rather than aborted, since that already answers the question the run
was asking.
"""

from __future__ import annotations

import os
import struct
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .casimir import d_reduced
from .errors import BoxSizeError, FormatError, SamplingError
from .poisson import (PlanarField, best_shift_distance, e_pot, force_planar,
                      pot_distance, potential_planar, rasterize_radial)
from .steady import LiftedState, SteadyState

__all__ = [
    "ParticleEnsemble",
    "SimConfig",
    "SimResult",
    "sample_steady",
    "perturb",
    "deposit",
    "gather",
    "run",
    "save_particles",
    "load_particles",
]

_PART_MAGIC = b"FPART1\0\0"

PERTURBATION_KINDS = ("none", "boost", "position_scale", "velocity_noise")


# =====================================================================
# Ensembles
# =====================================================================

@dataclass
class ParticleEnsemble:
    """Equal-weight particles on the plane."""

    positions: np.ndarray   # (N, 2)
    velocities: np.ndarray  # (N, 2)
    weight: float           # mass per particle

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or v.shape != p.shape:
            raise ValueError("positions/velocities must be matching (N, 2) arrays")
        self.positions = p
        self.velocities = v

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def mass(self) -> float:
        return self.weight * self.n

    def kinetic_energy(self) -> float:
        return 0.5 * self.weight * float(np.sum(self.velocities ** 2))

    def momentum(self) -> np.ndarray:
        return self.weight * self.velocities.sum(axis=0)

    def center_of_mass(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.positions.copy(), self.velocities.copy(),
                                self.weight)


def sample_steady(lifted: LiftedState, n_particles: int, rng=None,
                  batch: int = 200_000) -> ParticleEnsemble:
    """Draw particles from the lifted distribution by rejection.

    Proposals are uniform over the phase-space box
    [-r_edge, r_edge]^2 x [-v_max, v_max]^2 with envelope f_max; the
    measured acceptance for the default profile is a few percent.  An
    acceptance below 1e-4 aborts: the envelope is then so loose that
    the requested sample would take unreasonably long (usually a sign
    of a corrupt state).
    """
    if n_particles < 1:
        raise ValueError("n_particles must be positive")
    rng = np.random.default_rng() if rng is None else rng
    state = lifted.state
    r_e, v_m, f_m = state.r_edge, lifted.v_max, lifted.f_max
    out = []
    kept, tried = 0, 0
    while kept < n_particles:
        xy = rng.uniform(-r_e, r_e, (batch, 2))
        uv = rng.uniform(-v_m, v_m, (batch, 2))
        r = np.sqrt(xy[:, 0] ** 2 + xy[:, 1] ** 2)
        f = lifted.f(r, uv[:, 0], uv[:, 1])
        acc = rng.uniform(0.0, f_m, batch) < f
        out.append(np.hstack([xy[acc], uv[acc]]))
        kept += int(np.count_nonzero(acc))
        tried += batch
        if kept / tried < 1e-4:
            raise SamplingError(
                f"rejection acceptance {kept / tried:.2e} below 1e-4 after "
                f"{tried} proposals; envelope far too loose")
    sample = np.vstack(out)[:n_particles]
    return ParticleEnsemble(sample[:, :2], sample[:, 2:],
                            state.mass / n_particles)


def perturb(ensemble: ParticleEnsemble, kind: str, amplitude: float,
            rng=None) -> ParticleEnsemble:
    """Return a perturbed copy of the ensemble.

    boost: add amplitude times the rms speed along +x to every velocity.
    position_scale: dilate positions by 1 + amplitude about the origin.
    velocity_noise: Gaussian velocity kicks with rms speed equal to
        amplitude times the ensemble rms speed.
    """
    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation {kind!r}; "
                         f"choose from {PERTURBATION_KINDS}")
    out = ensemble.copy()
    if kind == "none" or amplitude == 0.0:
        return out
    v_rms = float(np.sqrt(np.mean(np.sum(ensemble.velocities ** 2, axis=1))))
    if kind == "boost":
        out.velocities[:, 0] += amplitude * v_rms
    elif kind == "position_scale":
        out.positions *= 1.0 + amplitude
    elif kind == "velocity_noise":
        rng = np.random.default_rng() if rng is None else rng
        kick = rng.standard_normal(out.velocities.shape)
        out.velocities += amplitude * v_rms / np.sqrt(2.0) * kick
    return out


# =====================================================================
# Grid transfer
# =====================================================================

def deposit(ensemble: ParticleEnsemble, n: int, spacing: float) -> PlanarField:
    """Cloud-in-cell surface density on the origin-centered grid.

    Particles whose 2 x 2 stencil does not fit in the grid contribute
    nothing; escape accounting is the caller's business.
    """
    h = spacing
    gx = ensemble.positions[:, 0] / h + n / 2 - 0.5
    gy = ensemble.positions[:, 1] / h + n / 2 - 0.5
    i0 = np.floor(gx).astype(np.int64)
    j0 = np.floor(gy).astype(np.int64)
    fx = gx - i0
    fy = gy - j0
    ok = (i0 >= 0) & (i0 < n - 1) & (j0 >= 0) & (j0 < n - 1)
    dens = np.zeros(n * n)
    flat = (i0 * n + j0)[ok]
    fxo, fyo = fx[ok], fy[ok]
    np.add.at(dens, flat, (1 - fxo) * (1 - fyo))
    np.add.at(dens, flat + n, fxo * (1 - fyo))
    np.add.at(dens, flat + 1, (1 - fxo) * fyo)
    np.add.at(dens, flat + n + 1, fxo * fyo)
    return PlanarField(h, dens.reshape(n, n) * (ensemble.weight / h ** 2))


def gather(field_values: np.ndarray, positions: np.ndarray,
           spacing: float) -> np.ndarray:
    """Bilinear interpolation of a grid quantity at particle positions."""
    n = field_values.shape[0]
    h = spacing
    gx = positions[:, 0] / h + n / 2 - 0.5
    gy = positions[:, 1] / h + n / 2 - 0.5
    i0 = np.clip(np.floor(gx).astype(np.int64), 0, n - 2)
    j0 = np.clip(np.floor(gy).astype(np.int64), 0, n - 2)
    fx = np.clip(gx - i0, 0.0, 1.0)
    fy = np.clip(gy - j0, 0.0, 1.0)
    return (field_values[i0, j0] * (1 - fx) * (1 - fy)
            + field_values[i0 + 1, j0] * fx * (1 - fy)
            + field_values[i0, j0 + 1] * (1 - fx) * fy
            + field_values[i0 + 1, j0 + 1] * fx * fy)


# =====================================================================
# Simulation
# =====================================================================

@dataclass
class SimConfig:
    """Knobs of a particle run; times are in units of the state's t_dyn."""

    n_particles: int = 200_000
    grid_n: int = 256
    box_factor: float = 4.0        # box side / support diameter
    dt_factor: float = 0.01        # time step / t_dyn
    duration: float = 10.0         # run length / t_dyn
    diag_every: int = 10           # steps between diagnostic rows
    snapshot_every: int = 0        # steps between particle dumps (0: none)
    perturbation: str = "none"
    amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.perturbation not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation {self.perturbation!r}")
        if self.n_particles < 1 or self.grid_n < 8 or self.grid_n % 2:
            raise ValueError("need n_particles >= 1 and even grid_n >= 8")
        if min(self.box_factor, self.dt_factor, self.duration) <= 0:
            raise ValueError("box_factor, dt_factor, duration must be positive")


DIAG_COLUMNS = (
    "t", "e_kin", "e_pot", "e_total", "mom_x", "mom_y", "com_x", "com_y",
    "dist_pot", "dist_pot_shift", "shift_x", "shift_y",
    "d_red", "d_red_shift", "escaped_mass",
)


@dataclass
class SimResult:
    """Diagnostic table of a run plus the final ensemble."""

    config: SimConfig
    columns: dict
    ensemble: ParticleEnsemble
    energy_drift: float
    escaped_mass: float
    truncated: bool
    snapshots: list

    def write_csv(self, path) -> None:
        names = list(DIAG_COLUMNS)
        arr = np.column_stack([self.columns[c] for c in names])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(names) + "\n")
            for row in arr:
                fh.write(",".join(f"{float(x)!r}" for x in row) + "\n")


def _raster_potential(state: SteadyState, n: int, spacing: float,
                      center=(0.0, 0.0)) -> PlanarField:
    """Steady potential on the grid, continued as -M/r beyond the nodes."""
    c = (np.arange(n) - n / 2 + 0.5) * spacing
    X, Y = np.meshgrid(c, c, indexing="ij")
    r = np.sqrt((X - center[0]) ** 2 + (Y - center[1]) ** 2)
    vals = state.U.interp(r.ravel()).reshape(n, n)
    outside = r > state.U.nodes[-1]
    vals = np.where(outside, -state.mass / np.maximum(r, spacing), vals)
    return PlanarField(spacing, vals)


def run(lifted: LiftedState, config: SimConfig, outdir=None,
        rng=None, ensemble: Optional[ParticleEnsemble] = None) -> SimResult:
    """Sample, perturb and evolve an equilibrium; collect diagnostics.

    A pre-built ensemble bypasses sampling and perturbation (used for
    restarting and for deterministic tests).  Snapshots and the
    diagnostics CSV are written under ``outdir`` if given.
    """
    state = lifted.state
    rng = np.random.default_rng(config.seed) if rng is None else rng
    if ensemble is None:
        ensemble = sample_steady(lifted, config.n_particles, rng=rng)
        ensemble = perturb(ensemble, config.perturbation, config.amplitude, rng=rng)

    n = config.grid_n
    box = config.box_factor * 2.0 * state.r_edge
    h = box / n
    dt = config.dt_factor * state.t_dyn
    n_steps = max(int(round(config.duration / config.dt_factor)), 1)

    rho0 = rasterize_radial(state.rho, n, h)
    U0 = _raster_potential(state, n, h)
    psi = state.psi

    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
    snapshots = []

    rows = {name: [] for name in DIAG_COLUMNS}
    escaped = 0.0
    truncated = False
    e_ref = None
    warned = False

    def drop_escapers():
        nonlocal ensemble, escaped, warned
        p = ensemble.positions
        inside = (np.abs(p[:, 0]) <= box / 2) & (np.abs(p[:, 1]) <= box / 2)
        lost = ensemble.n - int(np.count_nonzero(inside))
        if lost:
            escaped += lost * ensemble.weight
            if not warned:
                warnings.warn(f"{lost} particle(s) left the box; dropping them "
                              "(mass reported in the diagnostics)")
                warned = True
            ensemble = ParticleEnsemble(p[inside], ensemble.velocities[inside],
                                        ensemble.weight)

    def fields():
        dens = deposit(ensemble, n, h)
        U = potential_planar(dens)
        fx, fy = force_planar(U)
        return dens, U, fx, fy

    def record(t, dens, U):
        ek = ensemble.kinetic_energy()
        ep = e_pot(dens, U)
        mom = ensemble.momentum()
        com = ensemble.center_of_mass()
        d_raw = pot_distance(dens, rho0)
        d_min, shift, _ = best_shift_distance(dens, rho0)
        dr = d_reduced(psi, dens, rho0, U0, state.E0)
        rho0_s = rasterize_radial(state.rho, n, h, center=shift)
        U0_s = _raster_potential(state, n, h, center=shift)
        dr_s = d_reduced(psi, dens, rho0_s, U0_s, state.E0)
        vals = (t, ek, ep, ek + ep, mom[0], mom[1], com[0], com[1],
                d_raw, d_min, shift[0], shift[1], dr, dr_s, escaped)
        for name, v in zip(DIAG_COLUMNS, vals):
            rows[name].append(float(v))
        return ek + ep

    drop_escapers()
    dens, U, fx, fy = fields()
    ax = gather(fx, ensemble.positions, h)
    ay = gather(fy, ensemble.positions, h)
    e_ref = record(0.0, dens, U)
    drift_max = 0.0

    for step in range(1, n_steps + 1):
        v = ensemble.velocities
        v[:, 0] += 0.5 * dt * ax
        v[:, 1] += 0.5 * dt * ay
        ensemble.positions += dt * v
        drop_escapers()
        try:
            dens, U, fx, fy = fields()
        except BoxSizeError:
            warnings.warn("density reached the outer cells; truncating the run")
            truncated = True
            break
        ax = gather(fx, ensemble.positions, h)
        ay = gather(fy, ensemble.positions, h)
        v = ensemble.velocities
        v[:, 0] += 0.5 * dt * ax
        v[:, 1] += 0.5 * dt * ay

        if config.snapshot_every and step % config.snapshot_every == 0 and outdir:
            p = os.path.join(outdir, f"particles_{step:06d}.bin")
            save_particles(ensemble, p)
            snapshots.append(p)
        if step % config.diag_every == 0 or step == n_steps:
            e_now = record(step * dt, dens, U)
            drift_max = max(drift_max, abs(e_now - e_ref) / abs(e_ref))

    columns = {k: np.asarray(v) for k, v in rows.items()}
    result = SimResult(config=config, columns=columns, ensemble=ensemble,
                       energy_drift=float(drift_max), escaped_mass=float(escaped),
                       truncated=truncated, snapshots=snapshots)
    if outdir is not None:
        result.write_csv(os.path.join(outdir, "diagnostics.csv"))
    return result


# =====================================================================
# Particle snapshots
# =====================================================================

def save_particles(ensemble: ParticleEnsemble, path) -> None:
    """Write particles: 24-byte header, then (N, 4) x, y, vx, vy rows.

    Header: magic "FPART1\\0\\0", uint64 count, float64 weight,
    little-endian; payload is row-major float64.
    """
    header = struct.pack("<8sQd", _PART_MAGIC, ensemble.n, float(ensemble.weight))
    data = np.hstack([ensemble.positions, ensemble.velocities])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.astype("<f8", copy=False).tobytes(order="C"))


def load_particles(path) -> ParticleEnsemble:
    """Read particles written by save_particles."""
    with open(path, "rb") as fh:
        header = fh.read(24)
        if len(header) != 24:
            raise FormatError(f"{path}: truncated header")
        magic, count, weight = struct.unpack("<8sQd", header)
        if magic != _PART_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        payload = fh.read()
    expected = count * 4 * 8
    if len(payload) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, "
                          f"got {len(payload)}")
    data = np.frombuffer(payload, dtype="<f8").reshape(count, 4).copy()
    return ParticleEnsemble(data[:, :2], data[:, 2:], weight)
