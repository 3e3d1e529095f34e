"""Command-line front end: one config file, six subcommands.

Configuration is a small ``key = value`` file with sections ``[model]``,
``[problem]``, ``[sim]`` and ``[output]`` plus an optional top-level
``seed``.  Parsing reports every problem at once with line numbers, then
the chosen subcommand runs and drops its artifacts, together with a
``manifest.json`` (config digest, package versions, seed streams, and a
sha256 for every emitted file; no timestamps), into the output
directory.  Randomness flows from the single seed through
``numpy.random.SeedSequence``: child stream 0 feeds the particle
sampler and the perturbation draw, in that order.  The environment
variable ``FLATGRAV_THREADS`` caps FFT parallelism (default: all
cores).

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import difflib
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy
import scipy.fft

from . import __version__
from . import casimir as cm
from . import dynamics as dy
from . import steady as st
from . import verify as vf
from .errors import ConfigError, FlatgravError

__all__ = ["RunConfig", "parse_config", "dispatch", "main"]


# =====================================================================
# Config schema
# =====================================================================

def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _mass_list(raw: str):
    vals = [float(p) for p in raw.split(",") if p.strip()]
    if len(vals) < 2:
        raise ValueError("need at least two comma-separated masses")
    return vals


# key -> (converter, default, validator or None, "must ..." message)
_SCHEMA = {
    "": {
        "seed": (int, 0, _nonneg, "seed must be nonnegative"),
    },
    "model": {
        "kind": (str, "polytrope", lambda s: s in ("polytrope", "tabulated"),
                 "kind must be 'polytrope' or 'tabulated'"),
        "coefficient": (float, 1.0, _positive, "coefficient must be positive"),
        "k": (float, None, _positive, "k must be positive"),
        "exponent": (float, None, lambda x: x > 1.0, "exponent must exceed 1"),
        "table": (str, None, None, None),
    },
    "problem": {
        "M": (float, 1.0, _positive, "M must be positive"),
        "num_nodes": (int, 512, lambda n: n >= 8, "num_nodes must be at least 8"),
        "tol_update": (float, 1e-8, _positive, "tol_update must be positive"),
        "tol_el": (float, 1e-6, _positive, "tol_el must be positive"),
        "max_iter": (int, 500, _positive, "max_iter must be positive"),
        "masses": (_mass_list, [0.5, 1.0],
                   lambda v: all(m > 0 for m in v), "masses must be positive"),
    },
    "sim": {
        "Np": (int, 200_000, _positive, "Np must be positive"),
        "grid_n": (int, 256, lambda n: n >= 8 and n % 2 == 0,
                   "grid_n must be even and at least 8"),
        "box_factor": (float, 4.0, _positive, "box_factor must be positive"),
        "dt": (float, 0.01, _positive, "dt must be positive"),
        "duration": (float, 10.0, _positive, "duration must be positive"),
        "steps": (int, None, _positive, "steps must be positive"),
        "perturbation": (str, "none", lambda s: s in dy.PERTURBATION_KINDS,
                         "perturbation must be one of "
                         + ", ".join(dy.PERTURBATION_KINDS)),
        "amplitude": (float, 0.0, _nonneg, "amplitude must be nonnegative"),
    },
    "output": {
        "directory": (str, "out", None, None),
        "diag_every": (int, 10, _positive, "diag_every must be positive"),
        "snapshot_every": (int, 0, _nonneg, "snapshot_every must be nonnegative"),
    },
}

_SECTIONS_FOR = {
    "reduce": ("model", "output"),
    "solve": ("model", "problem", "output"),
    "lift": ("output",),
    "verify": ("output",),
    "simulate": ("sim", "output"),
    "scan-mass": ("model", "problem", "output"),
}


@dataclass
class RunConfig:
    """Parsed and validated configuration with defaults filled in."""

    seed: int = 0
    model: dict = dc_field(default_factory=dict)
    problem: dict = dc_field(default_factory=dict)
    sim: dict = dc_field(default_factory=dict)
    output: dict = dc_field(default_factory=dict)
    sections: tuple = ()

    def digest(self) -> str:
        blob = json.dumps(
            {"seed": self.seed, "model": self.model, "problem": self.problem,
             "sim": self.sim, "output": self.output}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(text: str) -> RunConfig:
    """Parse the config text, collecting every problem before failing.

    Raises ConfigError whose ``problems`` list carries one line-numbered
    message per defect: malformed lines, unknown sections, unknown keys
    (with a nearest-match suggestion), duplicates, type mismatches and
    value validation.
    """
    problems: list = []
    raw: dict = {sec: {} for sec in _SCHEMA}
    key_lines: dict = {}
    section = ""
    section_lines = {"": 0}

    for num, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                problems.append(f"line {num}: unterminated section header")
                continue
            name = stripped[1:-1].strip()
            if name not in _SCHEMA or name == "":
                known = [s for s in _SCHEMA if s]
                hint = difflib.get_close_matches(name, known, n=1)
                extra = f" (did you mean [{hint[0]}]?)" if hint else ""
                problems.append(f"line {num}: unknown section [{name}]{extra}")
                section = None
            else:
                section = name
                section_lines[name] = num
            continue
        if "=" not in stripped:
            problems.append(f"line {num}: expected 'key = value', got {stripped!r}")
            continue
        if section is None:
            continue  # already complained about this section header
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        schema = _SCHEMA[section]
        if key not in schema:
            scope = f"[{section}]" if section else "top level"
            near = max(schema, key=lambda kk: difflib.SequenceMatcher(
                None, key.lower(), kk.lower()).ratio())
            problems.append(f"line {num}: unknown key {key!r} in {scope} "
                            f"(did you mean {near!r}?)")
            continue
        if key in raw[section]:
            problems.append(f"line {num}: duplicate key {key!r}")
            continue
        conv, _, check, msg = schema[key]
        try:
            parsed = conv(value)
        except ValueError as exc:
            if conv in (int, float):
                want = "an integer" if conv is int else "a number"
                problems.append(f"line {num}: {key} = {value!r} is not {want}")
            else:
                problems.append(f"line {num}: {key} = {value!r}: {exc}")
            continue
        if check is not None and not check(parsed):
            problems.append(f"line {num}: {msg}")
            continue
        raw[section][key] = parsed
        key_lines[(section, key)] = num

    # cross-key constraints
    model = raw["model"]
    if "k" in model and "exponent" in model:
        problems.append(
            f"line {key_lines[('model', 'exponent')]}: give either k or "
            "exponent, not both")
    if model.get("kind") == "tabulated" and "table" not in model:
        problems.append(
            f"line {section_lines.get('model', 0)}: kind = tabulated needs "
            "a table path")
    sim = raw["sim"]
    if "duration" in sim and "steps" in sim:
        problems.append(
            f"line {key_lines[('sim', 'steps')]}: give either duration or "
            "steps, not both")

    if problems:
        raise ConfigError(problems)

    sections = tuple(s for s in ("model", "problem", "sim", "output")
                     if s in section_lines)
    filled = {}
    for sec, schema in _SCHEMA.items():
        if not sec:
            continue
        out = {}
        for key, (_, default, _, _) in schema.items():
            if key in raw[sec]:
                out[key] = raw[sec][key]
            elif default is not None:
                out[key] = default
        filled[sec] = out
    if "steps" in raw["sim"]:
        filled["sim"]["duration"] = raw["sim"]["steps"] * filled["sim"]["dt"]
        filled["sim"].pop("steps", None)
    return RunConfig(seed=raw[""].get("seed", 0), sections=sections, **filled)


# =====================================================================
# Artifact emission
# =====================================================================

def _sha256(path: str) -> str:
    blk = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            blk.update(chunk)
    return blk.hexdigest()


def _write_manifest(outdir: str, subcommand: str, cfg: RunConfig,
                    files, streams: dict) -> None:
    """Checksum every emitted file and write manifest.json atomically.

    ``files`` holds paths relative to ``outdir``; the manifest carries no
    timestamps so identical runs produce identical bytes.
    """
    manifest = {
        "subcommand": subcommand,
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "seed_streams": streams,
        "versions": {
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "flatgrav": __version__,
        },
        "files": {rel: _sha256(os.path.join(outdir, rel))
                  for rel in sorted(files)},
    }
    tmp = os.path.join(outdir, "manifest.json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, os.path.join(outdir, "manifest.json"))


def _json_atomic(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _build_phi(cfg: RunConfig) -> cm.ConvexModel:
    model = cfg.model
    if model["kind"] == "tabulated":
        return cm.load_model(model["table"])
    if model.get("exponent") is not None:
        exponent = model["exponent"]
    else:
        exponent = 1.0 + 1.0 / model.get("k", 0.5)
    return cm.polytrope(model["coefficient"], exponent)


# =====================================================================
# Subcommands
# =====================================================================

def _cmd_reduce(cfg: RunConfig, outdir: str) -> int:
    """Tabulate the reduced density profile for the configured model."""
    phi = _build_phi(cfg)
    psi = cm.reduce_phi_to_psi(phi)
    grid = np.geomspace(1e-8, 1e4, 2048)
    table = cm.tabulate(psi, grid)
    path = os.path.join(outdir, "psi_table.csv")
    cm.save_model(table, path)
    _write_manifest(outdir, "reduce", cfg, ["psi_table.csv"], {})
    print(f"reduced profile written to {path}")
    return 0


def _cmd_solve(cfg: RunConfig, outdir: str) -> int:
    """Solve the reduced variational problem and persist the solution."""
    phi = _build_phi(cfg)
    psi = cm.reduce_phi_to_psi(phi)
    p = cfg.problem
    state = st.solve_reduced(
        psi, p["M"], num_nodes=p["num_nodes"], tol_update=p["tol_update"],
        tol_el=p["tol_el"], max_iter=p["max_iter"], phi=phi)
    soldir = os.path.join(outdir, "solution")
    st.save_solution(state, soldir)
    files = [os.path.join("solution", f) for f in sorted(os.listdir(soldir))]
    _write_manifest(outdir, "solve", cfg, files, {})
    print(f"converged in {state.iterations} iterations: "
          f"h = {state.h_value:.6f}, E0 = {state.E0:.6f}, "
          f"r_edge = {state.r_edge:.6f}")
    return 0


def _require_solution(outdir: str):
    soldir = os.path.join(outdir, "solution")
    if not os.path.isfile(os.path.join(soldir, "solution.json")):
        print(f"error: no solution found in {soldir!r}; run the solve "
              "subcommand first", file=sys.stderr)
        return None
    return st.load_solution(soldir)


def _cmd_lift(cfg: RunConfig, outdir: str) -> int:
    """Lift a solved state to phase space and write its descriptor."""
    state = _require_solution(outdir)
    if state is None:
        return 2
    lifted = st.lift(state)
    cons = st.consistency_check(lifted)
    payload = {
        "E0": state.E0,
        "h_value": state.h_value,
        "r_edge": state.r_edge,
        "f_max": lifted.f_max,
        "v_max": lifted.v_max,
        "e_kin": lifted.e_kin,
        "casimir_phase": lifted.casimir_phase,
        "total_energy": lifted.total_energy,
        "consistency": cons,
    }
    _json_atomic(os.path.join(outdir, "lift.json"), payload)
    _write_manifest(outdir, "lift", cfg, ["lift.json"], {})
    print(f"lift written: f_max = {lifted.f_max:.6f}, "
          f"marginal defect = {cons['density']:.2e}")
    return 0


def _cmd_verify(cfg: RunConfig, outdir: str) -> int:
    """Run the verification battery and write the reports."""
    jsonl = os.path.join(outdir, "checks.jsonl")
    csvp = os.path.join(outdir, "checks_summary.csv")
    extra = []
    if "model" in cfg.sections and cfg.model["kind"] == "tabulated":
        try:
            phi = _build_phi(cfg)
            extra.append(vf.check_reduction(phi))
        except FlatgravError as exc:
            extra.append(vf.CheckReport(
                check="model_load", statement="supplied model table loads "
                "and is convex", inputs="", measured={}, tolerance={},
                passed=False, notes=[f"{type(exc).__name__}: {exc}"]))
    reports, status = vf.full_report()
    reports = extra + reports
    if extra:
        status = 0 if all(r.passed for r in reports) else 1
    vf.write_jsonl(reports, jsonl)
    vf.write_summary_csv(reports, csvp)
    _write_manifest(outdir, "verify", cfg,
                    ["checks.jsonl", "checks_summary.csv"],
                    {"density_family": vf.DEFAULT_FAMILY["seed"]})
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check}")
    return status


def _cmd_simulate(cfg: RunConfig, outdir: str) -> int:
    """Sample, perturb and evolve particles from a solved state."""
    state = _require_solution(outdir)
    if state is None:
        return 2
    lifted = st.lift(state)
    s = cfg.sim
    simcfg = dy.SimConfig(
        n_particles=s["Np"], grid_n=s["grid_n"], box_factor=s["box_factor"],
        dt_factor=s["dt"], duration=s["duration"],
        diag_every=cfg.output["diag_every"],
        snapshot_every=cfg.output["snapshot_every"],
        perturbation=s["perturbation"], amplitude=s["amplitude"],
        seed=cfg.seed)
    child = np.random.SeedSequence(cfg.seed).spawn(1)[0]
    rng = np.random.default_rng(child)
    result = dy.run(lifted, simcfg, outdir=outdir, rng=rng)
    summary = {
        "energy_drift": result.energy_drift,
        "escaped_mass": result.escaped_mass,
        "truncated": result.truncated,
        "steps": int(round(s["duration"] / s["dt"])),
    }
    _json_atomic(os.path.join(outdir, "sim_summary.json"), summary)
    files = ["diagnostics.csv", "sim_summary.json"]
    files += sorted(f for f in os.listdir(outdir)
                    if f.startswith("snapshot_") and f.endswith(".bin"))
    _write_manifest(outdir, "simulate", cfg, files,
                    {"dynamics": {"root": cfg.seed, "spawn_index": 0}})
    print(f"simulated {summary['steps']} steps: energy drift "
          f"{result.energy_drift:.2e}, escaped mass {result.escaped_mass:.2e}"
          + (" (truncated)" if result.truncated else ""))
    return 0


def _cmd_scan_mass(cfg: RunConfig, outdir: str) -> int:
    """Solve across masses and tabulate the minimal energies."""
    phi = _build_phi(cfg)
    psi = cm.reduce_phi_to_psi(phi)
    p = cfg.problem
    scan = st.scan_mass(psi, p["masses"], num_nodes=p["num_nodes"],
                        tol_update=p["tol_update"], tol_el=p["tol_el"],
                        max_iter=p["max_iter"], phi=phi)
    path = os.path.join(outdir, "mass_scan.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mass,h_value\n")
        for m, h in zip(scan["masses"], scan["h_values"]):
            fh.write(f"{float(m)!r},{float(h)!r}\n")
    _write_manifest(outdir, "scan-mass", cfg, ["mass_scan.csv"], {})
    print(f"scanned {len(scan['masses'])} masses: homogeneity exponent "
          f"{scan['homogeneity_fitted']:.4f} "
          f"(expected {scan['homogeneity_expected']:.4f})")
    return 0


_RUNNERS = {
    "reduce": _cmd_reduce,
    "solve": _cmd_solve,
    "lift": _cmd_lift,
    "verify": _cmd_verify,
    "simulate": _cmd_simulate,
    "scan-mass": _cmd_scan_mass,
}

_HELP_KEYS = {
    "reduce": "model: kind, coefficient, k | exponent, table; output: directory",
    "solve": "model: kind, coefficient, k | exponent, table; problem: M, "
             "num_nodes, tol_update, tol_el, max_iter; output: directory",
    "lift": "output: directory (must already hold a solve result)",
    "verify": "output: directory; optional model: kind, coefficient, "
              "k | exponent, table (extra reduction check on the table)",
    "simulate": "sim: Np, grid_n, box_factor, dt, duration | steps, "
                "perturbation, amplitude; output: directory, diag_every, "
                "snapshot_every; top-level seed",
    "scan-mass": "model: kind, coefficient, k | exponent, table; problem: "
                 "masses, num_nodes, tol_update, tol_el, max_iter; "
                 "output: directory",
}


def dispatch(subcommand: str, cfg: RunConfig) -> int:
    """Run one subcommand against a parsed config; returns the exit code."""
    if subcommand not in _RUNNERS:
        print(f"error: unknown subcommand {subcommand!r}", file=sys.stderr)
        return 2
    missing = [s for s in _SECTIONS_FOR[subcommand] if s not in cfg.sections]
    if missing:
        need = ", ".join(f"[{s}]" for s in _SECTIONS_FOR[subcommand])
        lack = ", ".join(f"[{s}]" for s in missing)
        print(f"error: config for {subcommand!r} needs sections {need}; "
              f"missing {lack}", file=sys.stderr)
        return 2
    outdir = cfg.output.get("directory", "out")
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {outdir!r}: {exc}",
              file=sys.stderr)
        return 2
    try:
        return _RUNNERS[subcommand](cfg, outdir)
    except FlatgravError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flatgrav",
        description="Razor-thin self-gravitating disk equilibria: reduced "
                    "variational solver, kinetic lift, and stability harness.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, runner in _RUNNERS.items():
        p = sub.add_parser(
            name, help=runner.__doc__,
            description=f"Config keys read by {name!r}: {_HELP_KEYS[name]}")
        p.add_argument("config", help="path to the run configuration file")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2

    workers = os.environ.get("FLATGRAV_THREADS")
    if workers is not None:
        try:
            nw = int(workers)
            if nw < 1:
                raise ValueError
        except ValueError:
            print(f"error: FLATGRAV_THREADS = {workers!r} is not a positive "
                  "integer", file=sys.stderr)
            return 2
        with scipy.fft.set_workers(nw):
            return dispatch(args.subcommand, cfg)
    return dispatch(args.subcommand, cfg)


if __name__ == "__main__":
    sys.exit(main())
