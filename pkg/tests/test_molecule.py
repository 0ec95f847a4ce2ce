import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from etpa.molecule import (
    IntermediateState,
    MoleculeModel,
    ResponseGrid,
    detuning,
    lorentzian_lineshape,
    nile_red,
    reduced_response,
    response,
    response_argmax,
    response_bound,
    response_map,
)
from etpa.units import wavelength_to_omega

TWO_PI = 2 * math.pi
OMEGA_F = wavelength_to_omega(548.0)
optical = st.floats(min_value=1.0e15, max_value=6.0e15)


def zero_dipoles(m):
    return m.scaled_dipoles(0.0)


def test_detuning_special_points(model):
    s = model.states[0]
    assert detuning(s, s.omega_j) == 1j * s.gamma_j
    assert detuning(s, 0.0) == complex(s.omega_j, s.gamma_j)


def test_detuning_nile_red_state_one(model):
    # hand evaluation: 2 pi c/440nm - pi c/548nm + i 2 pi 24 THz
    d = detuning(model.states[0], OMEGA_F / 2)
    assert d.real == pytest.approx(2562366100187889.0, rel=1e-13)
    assert d.imag == pytest.approx(150796447372310.06, rel=1e-13)


def test_lineshape_values(model):
    G = model.Gamma_f
    assert lorentzian_lineshape(model, OMEGA_F) == pytest.approx(1 / math.pi, rel=1e-14)
    assert lorentzian_lineshape(model, OMEGA_F + G) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert lorentzian_lineshape(model, OMEGA_F - G) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert lorentzian_lineshape(model, OMEGA_F + 10 * G) == pytest.approx(1 / (101 * math.pi), rel=1e-14)


def test_lineshape_normalisation(model):
    # integrand in units of Gamma_f: unit area over the whole line,
    # (2/pi) atan(50) = 0.98727 once the tails beyond +/- 50 Gamma_f are cut
    G = model.Gamma_f
    f = lambda x: lorentzian_lineshape(model, OMEGA_F + x * G)
    val, _ = quad(f, -50, 50, limit=200)
    assert val == pytest.approx(2 / math.pi * math.atan(50), rel=1e-9)
    full, _ = quad(f, -np.inf, np.inf)
    assert full == pytest.approx(1.0, rel=1e-9)


def test_nile_red_preset_parameters(model):
    assert model.omega_f == pytest.approx(wavelength_to_omega(548.0))
    assert model.Gamma_f == pytest.approx(TWO_PI * 50e12)
    assert [s.D_j for s in model.states] == [0.086, 0.078]
    assert all(s.gamma_j == pytest.approx(TWO_PI * 24e12) for s in model.states)


def test_response_nile_red_degenerate_point(model):
    # sqrt(1/pi) * sum_j D_j * 2 / (w_j - w_f/2 + i gamma), evaluated with cmath
    L = response(model, OMEGA_F / 2, OMEGA_F / 2, OMEGA_F)
    assert L.real == pytest.approx(5.92981032971366e-17, rel=1e-12)
    assert L.imag == pytest.approx(-3.0183682598712936e-18, rel=1e-12)


def test_zero_dipoles_give_zero(model):
    z = zero_dipoles(model)
    assert response(z, 2.0e15, 1.7e15, 3.7e15) == 0
    grid = response_map(z, n=11)
    assert np.all(grid.values == 0)


@given(optical, optical, optical)
def test_exchange_symmetry_exact(a, b, w0):
    m = nile_red()
    assert response(m, a, b, w0) == response(m, b, a, w0)


@given(optical, optical, st.floats(min_value=-50, max_value=50))
def test_dipole_linearity(a, b, s):
    m = nile_red()
    L = response(m, a, b, a + b)
    Ls = response(m.scaled_dipoles(s), a, b, a + b)
    assert Ls == pytest.approx(s * L, rel=1e-12, abs=1e-300)


@settings(max_examples=200)
@given(optical, optical, optical)
def test_response_bound(a, b, w0):
    m = nile_red()
    assert abs(response(m, a, b, w0)) <= response_bound(m, w0) * (1 + 1e-12)


def test_bound_is_attained_on_resonance():
    # single state, both photons on resonance: |L| = sqrt(g) |D| 2/gamma
    st_ = IntermediateState(3.0e15, 1.0e13, -0.5)
    m = MoleculeModel(4.0e15, 1.0e14, (st_,))
    L = response(m, 3.0e15, 3.0e15, 4.0e15)
    assert abs(L) == pytest.approx(response_bound(m, 4.0e15), rel=1e-14)


def test_reduced_response_broadcasts(model):
    wi = np.linspace(1.7e15, 1.9e15, 5)[:, None]
    ws = np.linspace(1.7e15, 1.9e15, 4)[None, :]
    assert reduced_response(model, wi, ws).shape == (5, 4)


def test_map_is_mirror_symmetric(model):
    g = response_map(model, (1000, 1140), (1000, 1140), 41)
    np.testing.assert_array_equal(g.values, g.values.T)
    assert np.all(np.isfinite(g.values))


def test_map_axes_span_window(model):
    g = response_map(model, (1000, 1140), (1020, 1100), 21)
    assert g.omega_i_axis.points[0] == pytest.approx(wavelength_to_omega(1140))
    assert g.omega_i_axis.points[-1] == pytest.approx(wavelength_to_omega(1000))
    assert g.omega_s_axis.points[0] == pytest.approx(wavelength_to_omega(1100))


@pytest.mark.parametrize("rng", [(0, 1100), (-5, 1100), (1000, 1000)])
def test_map_invalid_range(model, rng):
    with pytest.raises(ValueError):
        response_map(model, rng, (1000, 1140), 11)


def test_map_invalid_n(model):
    with pytest.raises(ValueError):
        response_map(model, n=1)


def test_argmax_single_point():
    g = ResponseGrid(np.array([2.0e15]), np.array([1.5e15]), np.array([[0.3 + 0.1j]]))
    assert response_argmax(g) == (2.0e15, 1.5e15)


def test_argmax_total_tie_picks_first(model):
    g = response_map(zero_dipoles(model), n=9)
    wi, ws = response_argmax(g)
    assert wi == g.omega_i_axis.points[0] and ws == g.omega_s_axis.points[0]


def test_argmax_nile_red_off_pump_line(model):
    g = response_map(model, n=281)
    wi, ws = response_argmax(g)
    assert abs(np.abs(response(model, wi, ws, wi + ws)) - np.abs(g.values).max()) < 1e-30
    # the maximum does not lie on the 532 nm sum-frequency line
    assert abs(wi + ws - wavelength_to_omega(532.0)) > 10 * g.omega_i_axis.spacing
    # degenerate 1064 nm pairs sit on that line
    deg = wavelength_to_omega(1064.0)
    assert 2 * deg == pytest.approx(wavelength_to_omega(532.0), rel=1e-14)


def test_map_csv_format(model, tmp_path):
    g = response_map(model, n=3)
    p = tmp_path / "m.csv"
    g.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "lambda_i_nm,lambda_s_nm,abs_L"
    assert len(lines) == 1 + 9
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(1140.0, rel=1e-8)
    assert float(first[2]) == pytest.approx(abs(g.values[0, 0]), rel=1e-8)


@pytest.mark.parametrize("factor", [2.0, 0.5])
def test_linewidth_shape_robustness(model, factor):
    base = np.abs(response_map(model, n=141).values)
    alt = np.abs(response_map(model.scaled_linewidths(factor), n=141).values)
    dev = np.max(np.abs(alt / alt.max() - base / base.max()))
    print(f"gamma x{factor}: max pointwise change of normalised |L| = {dev:.3e}")
    assert dev < 0.10


def test_invalid_states():
    with pytest.raises(ValueError):
        IntermediateState(1.0e15, 0.0, 0.1)
    with pytest.raises(ValueError):
        IntermediateState(1.0e15, 1.0e13, 1j)
    with pytest.raises(ValueError):
        MoleculeModel(3.0e15, 1.0e14, ())
    with pytest.raises(ValueError):
        MoleculeModel(3.0e15, 0.0, (IntermediateState(4e15, 1e13, 0.1),))


def test_model_is_immutable(model):
    with pytest.raises(Exception):
        model.Gamma_f = 1.0
    assert replace(model, name="x").states == model.states
