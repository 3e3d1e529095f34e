import numpy as np
import pytest

from flatgrav import casimir as cm
from flatgrav import poisson as ps
from flatgrav import steady as st
from flatgrav.errors import ConvergenceError, FormatError, ModelError


def test_reference_solution_values(default_state):
    # frozen against an independent prototype of the same discretization
    s = default_state
    assert s.converged
    assert s.E0 == pytest.approx(-60.582912, rel=1e-6)
    assert s.h_value == pytest.approx(-20.194313, rel=1e-6)
    assert s.r_edge == pytest.approx(0.017533, rel=1e-3)
    assert s.r_half == pytest.approx(0.006534, rel=1e-3)
    assert s.t_dyn == pytest.approx(0.004247, rel=1e-3)
    assert s.rho.mass == pytest.approx(1.0, rel=1e-12)


def test_energy_trace_monotone(default_state):
    trace = np.asarray(default_state.trace)
    assert trace.size >= 10
    assert np.all(np.diff(trace) <= 1e-10 * np.abs(trace[:-1]))


def test_equilibrium_residuals(default_state):
    checks = st.equilibrium_checks(default_state)
    assert checks["euler_lagrange"] < 1e-6
    assert abs(checks["virial"]) < 1e-3
    assert checks["hydrostatic"] < 1e-3
    assert checks["mass"] < 1e-12


def test_cutoff_mass_consistent(default_state, default_psi):
    # the final iterate renormalizes the density, so the multiplier's
    # enclosed mass agrees with M only to the convergence tolerance
    got = st.cutoff_mass(default_state.U, default_state.E0, default_psi)
    assert got == pytest.approx(1.0, rel=1e-6)
    # a deeper multiplier encloses more mass
    more = st.cutoff_mass(default_state.U, default_state.E0 * 0.5, default_psi)
    assert more > 1.0


def test_unbounded_exponent_rejected():
    phi = cm.polytrope(1.0, 2.0)  # reduces to n = 2
    psi = cm.reduce_phi_to_psi(phi)
    with pytest.raises(ModelError):
        st.solve_reduced(psi, 1.0, num_nodes=64)


def test_callback_and_iteration_cap(default_psi):
    calls = []
    with pytest.raises(ConvergenceError):
        st.solve_reduced(default_psi, 1.0, num_nodes=128, max_iter=3,
                         callback=lambda it, h, el: calls.append(it))
    assert len(calls) == 3


def test_solution_io_roundtrip(tmp_path, default_state):
    outdir = tmp_path / "sol"
    st.save_solution(default_state, str(outdir))
    back = st.load_solution(str(outdir))
    assert np.array_equal(back.rho.values, default_state.rho.values)
    assert np.array_equal(back.U.values, default_state.U.values)
    assert back.E0 == default_state.E0
    assert back.h_value == default_state.h_value
    assert back.psi.kind == default_state.psi.kind
    # the stored model descriptors are complete enough to lift again
    lifted = st.lift(back)
    assert lifted.f_max > 0


def test_load_solution_missing(tmp_path):
    with pytest.raises(FormatError):
        st.load_solution(str(tmp_path / "nowhere"))


def test_lift_reference_values(default_state, default_lifted):
    lf = default_lifted
    u_min = float(default_lifted.state.U.values[0])
    assert lf.f_max == pytest.approx(
        np.sqrt((default_state.E0 - u_min) / 3.0), rel=1e-10)
    assert lf.f_max == pytest.approx(7.436904, rel=1e-5)
    assert lf.v_max == pytest.approx(
        np.sqrt(2.0 * (default_state.E0 - u_min)), rel=1e-10)
    assert lf.e_kin == pytest.approx(40.3887, rel=1e-4)
    # value equality between the reduced and phase-space energies
    assert lf.total_energy == pytest.approx(default_state.h_value, rel=1e-4)


def test_lift_pointwise_density(default_lifted):
    cons = st.consistency_check(default_lifted)
    assert cons["density"] < 1e-5
    assert cons["value"] < 1e-4


def test_phase_space_support(default_state, default_lifted):
    lf = default_lifted
    assert lf.f(0.0, 0.0, 0.0) == pytest.approx(lf.f_max, rel=1e-6)
    v_edge0 = lf.v_edge(0.0)
    assert v_edge0 == pytest.approx(lf.v_max, rel=1e-6)
    assert lf.f(0.0, v_edge0 * 1.01, 0.0) == 0.0
    assert lf.f(default_state.r_edge * 1.05, 0.0, 0.0) == 0.0
    # monotone depth: the support shrinks outward
    assert lf.v_edge(default_state.r_half) < v_edge0


def test_reduced_energy_matches_solution(default_state, default_psi):
    h = st.reduced_energy(default_psi, default_state.rho, default_state.U)
    assert h == pytest.approx(default_state.h_value, rel=1e-10)


def test_virial_from_lift(default_state, default_lifted):
    # kinetic energy carries half the magnitude of the interaction energy
    ep = ps.e_pot(default_state.rho, default_state.U)
    assert 2.0 * default_lifted.e_kin + ep == pytest.approx(
        0.0, abs=1e-3 * abs(ep))
