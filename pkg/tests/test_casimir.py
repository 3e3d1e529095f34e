import numpy as np
import pytest

from flatgrav import casimir as cm
from flatgrav.errors import ExtrapolationError, FormatError, ModelError


def test_polytrope_basics():
    phi = cm.polytrope(2.0, 3.0)
    r = np.array([0.5, 1.0, 2.0])
    assert np.allclose(phi.value(r), 2.0 * r ** 3)
    assert np.allclose(phi.deriv(r), 6.0 * r ** 2)
    assert np.allclose(phi.inv_deriv(6.0 * r ** 2), r)
    assert phi.growth_rate == pytest.approx(0.5)


def test_polytrope_validation():
    with pytest.raises(ModelError):
        cm.polytrope(-1.0, 3.0)
    with pytest.raises(ModelError):
        cm.polytrope(1.0, 1.0)


def test_conjugate_closed_form_quadratic():
    # phi = f^2 has conjugate lambda^2/4
    phi = cm.polytrope(1.0, 2.0)
    grid = np.geomspace(1e-3, 25.0, 800)
    conj = cm.legendre_numeric(phi, grid)
    lam = np.array([0.5, 1.0, 2.0, 5.0])
    assert np.max(np.abs(conj.value(lam) / (lam ** 2 / 4.0) - 1.0)) < 1e-6
    assert conj.value(np.array([2.0]))[0] == pytest.approx(1.0, rel=1e-6)


def test_conjugate_closed_form_cubic():
    # phi = f^3: conjugate (1/(k+1)) (c(k+1)/k)^(-k) lam^(k+1) with k = 1/2
    phi = cm.polytrope(1.0, 3.0)
    conj = cm.legendre_numeric(phi, np.geomspace(1e-4, 20.0, 600))
    lam = np.geomspace(1e-3, 10.0, 25)
    k = 0.5
    a = (1.0 / (k + 1.0)) * (3.0) ** (-k)
    exact = a * lam ** (k + 1.0)
    assert np.max(np.abs(conj.value(lam) / exact - 1.0)) < 1e-7


def test_reduced_coefficient_values():
    # frozen against direct evaluation of the closed form
    assert cm.reduced_coefficient(1.0, 0.5) == pytest.approx(
        1.8 * (4.0 * np.pi) ** (-2.0 / 3.0), rel=1e-13)
    assert cm.reduced_coefficient(1.0, 1.0) == pytest.approx(
        2.0 * np.sqrt(2.0) / (3.0 * np.sqrt(np.pi)), rel=1e-13)


def test_reduce_polytrope_exponent_map():
    for k, c in [(0.5, 1.0), (1.0, 2.0), (0.9, 0.7)]:
        phi = cm.polytrope(c, 1.0 + 1.0 / k)
        psi = cm.reduce_phi_to_psi(phi)
        assert psi.kind == "polytrope"
        n = k + 1.0
        assert psi.exponent == pytest.approx(1.0 + 1.0 / n, rel=1e-12)
        assert psi.coefficient == pytest.approx(
            cm.reduced_coefficient(c, k), rel=1e-12)


def test_reduce_numeric_matches_closed_form():
    phi = cm.polytrope(1.0, 3.0)
    exact = cm.reduce_phi_to_psi(phi)
    num = cm.reduce_phi_to_psi(phi, np.geomspace(1e-6, 50.0, 1600),
                               force_numeric=True)
    rho = np.geomspace(1e-4, 10.0, 60)
    assert np.max(np.abs(num.value(rho) / exact.value(rho) - 1.0)) < 1e-6


def test_inv_deriv_roundtrip_tabulated(default_psi):
    table = cm.tabulate(default_psi, np.geomspace(1e-6, 100.0, 900))
    r = np.geomspace(1e-4, 50.0, 40)
    s = table.deriv(r)
    assert np.max(np.abs(table.inv_deriv(s) / r - 1.0)) < 1e-6


def test_tabulated_validation():
    g = np.geomspace(0.1, 10.0, 50)
    with pytest.raises(ModelError):
        cm.tabulated(g, -np.ones_like(g))
    with pytest.raises(ModelError):
        cm.tabulated(g[:3], g[:3] ** 2)
    vals = g ** 2
    vals[25] *= 1.5  # break convexity
    with pytest.raises(ModelError):
        cm.tabulated(g, vals)
    with pytest.raises(ModelError):
        cm.tabulated(g, np.sqrt(g))  # sublinear growth


def test_tabulated_extrapolation_guard():
    g = np.geomspace(0.1, 10.0, 200)
    model = cm.tabulated(g, g ** 2)
    with pytest.raises(ExtrapolationError):
        model.value(np.array([20.0]))
    # below the grid the power-law head extends smoothly to zero
    assert model.value(np.array([0.01]))[0] == pytest.approx(1e-4, rel=1e-2)


def test_pressure_polytrope_identity(default_psi):
    rho = np.geomspace(1e-3, 5.0, 30)
    p = cm.pressure(default_psi, rho)
    n = default_psi.growth_rate
    assert np.allclose(p, default_psi.value(rho) / n, rtol=1e-12)


def test_save_load_roundtrip(tmp_path, default_psi):
    grid = np.geomspace(1e-5, 20.0, 300)
    table = cm.tabulate(default_psi, grid)
    path = tmp_path / "psi.csv"
    cm.save_model(table, str(path))
    back = cm.load_model(str(path))
    assert np.array_equal(back.grid, table.grid)
    assert np.array_equal(back.values, table.values)


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("not a model\n1,2\n")
    with pytest.raises(FormatError):
        cm.load_model(str(p))
    p.write_text("# convex-model v1\n1.0,1.0\n2.0,oops\n")
    with pytest.raises(FormatError):
        cm.load_model(str(p))


def test_conjugate_integral_and_derivative():
    phi = cm.polytrope(1.0, 2.0)
    conj = cm.legendre_numeric(phi, np.geomspace(1e-4, 20.0, 800))
    # integral of lam^2/4 from 0 to 2 is 2/3
    assert conj.integral_to(2.0) == pytest.approx(2.0 / 3.0, rel=1e-6)
    assert conj.value(np.array([-1.0]))[0] == 0.0


def test_d_reduced_positive(default_psi, default_state):
    # any density differing from the minimizer carries positive distance
    rho0 = default_state.rho
    bumped = rho0.values * (1.0 + 0.05 * np.sin(
        np.linspace(0.0, 3.0, rho0.nodes.size)))
    from flatgrav.poisson import RadialField
    rho = RadialField(rho0.nodes, bumped * (rho0.mass
                                            / RadialField(rho0.nodes, bumped).mass))
    d = cm.d_reduced(default_psi, rho, rho0, default_state.U, default_state.E0)
    assert d > 0.0
    d0 = cm.d_reduced(default_psi, rho0, rho0, default_state.U, default_state.E0)
    assert abs(d0) < 1e-12
