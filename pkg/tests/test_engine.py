import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etpa.engine import (
    ProbabilityCurve,
    convergence_check,
    detuning_penalty,
    inner_amplitude,
    optimal_temperature,
    probability,
    response_peak_shift,
    sweep_models,
    sweep_temperatures,
    temperature_sweep,
)
from etpa.molecule import IntermediateState, MoleculeModel
from etpa.source import GridConfig, JsaGrid, build_jsa
from etpa.units import make_grid, thz_to_omega, wavelength_to_omega


@pytest.fixture(scope="module")
def jsa(preset, small_grid):
    return build_jsa(preset.crystal, preset.pump, 35.7, small_grid)


def single_state(D=0.1):
    return MoleculeModel(
        wavelength_to_omega(548.0),
        thz_to_omega(50.0),
        (IntermediateState(wavelength_to_omega(440.0), thz_to_omega(24.0), D),),
    )


def test_inner_amplitude_log_oracle():
    # constant JSA on one row: the nu integral of the two poles has a closed form
    w0 = wavelength_to_omega(532.0)
    V = thz_to_omega(40.0)
    model = single_state(0.1)
    st0 = model.states[0]
    A = 0.7 - 0.2j
    w0_axis = make_grid(w0, 1e9, 3)
    nu_axis = make_grid(0.0, V, 200001)
    jsa = JsaGrid(w0_axis, nu_axis, np.full((3, nu_axis.points.size), A), 1.0)
    a = st0.omega_j - w0 / 2 + 1j * st0.gamma_j
    expect = 2 * st0.D_j * A * np.log((a + V / 2) / (a - V / 2))
    got = inner_amplitude(model, jsa, 1)
    assert got == pytest.approx(expect, rel=1e-9)


def test_inner_amplitude_zero_cases(jsa, model):
    assert inner_amplitude(model.scaled_dipoles((0.0, 0.0)), jsa, 0) == 0
    assert inner_amplitude(model, jsa.scaled(0.0), 5) == 0
    with pytest.raises(IndexError):
        inner_amplitude(model, jsa, len(jsa.omega0_axis))


def test_probability_matches_row_sum(jsa, model):
    from scipy.integrate import trapezoid

    from etpa.molecule import lorentzian_lineshape

    rows = np.array([abs(inner_amplitude(model, jsa, a)) ** 2 for a in range(len(jsa.omega0_axis))])
    g = lorentzian_lineshape(model, jsa.omega0_axis.points)
    expect = trapezoid(g * rows, dx=jsa.omega0_axis.spacing)
    assert probability(model, jsa) == pytest.approx(expect, rel=1e-12)


def test_probability_zero_dipoles(jsa, model):
    assert probability(model.scaled_dipoles((0.0, 0.0)), jsa) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_probability_quadratic_in_dipoles(s):
    from etpa.config import load_config

    cfg = load_config()
    jsa = _cached_jsa(cfg)
    from etpa.molecule import nile_red

    m = nile_red()
    p0 = probability(m, jsa)
    assert probability(m.scaled_dipoles((s, s)), jsa) == pytest.approx(s * s * p0, rel=1e-10)


_JSA = {}


def _cached_jsa(cfg):
    if "j" not in _JSA:
        _JSA["j"] = build_jsa(cfg.crystal, cfg.pump, 35.7, GridConfig(n_omega0=33, n_nu=2049))
    return _JSA["j"]


@given(st.floats(min_value=0, max_value=2 * np.pi))
@settings(max_examples=20, deadline=None)
def test_probability_global_phase_invariant(phi):
    from etpa.config import load_config
    from etpa.molecule import nile_red

    jsa = _cached_jsa(load_config())
    m = nile_red()
    assert probability(m, jsa.scaled(np.exp(1j * phi))) == pytest.approx(probability(m, jsa), rel=1e-12)


def test_probability_scales_with_jsa_norm(jsa, model):
    assert probability(model, jsa.scaled(3.0)) == pytest.approx(9 * probability(model, jsa), rel=1e-12)


def test_probability_positive_and_bounded(jsa, model):
    p = probability(model, jsa)
    assert 0 < p < 1


def test_sweep_threaded_identical(preset, small_grid, model):
    temps = np.linspace(34.0, 37.0, 7)
    a = sweep_models([model], preset.crystal, preset.pump, temps, small_grid, workers=1)[0]
    b = sweep_models([model], preset.crystal, preset.pump, temps, small_grid, workers=4)[0]
    assert np.array_equal(a.probabilities, b.probabilities)
    assert a.fingerprint == b.fingerprint


def test_sweep_models_share_jsa(preset, small_grid, model):
    temps = [35.0, 36.0]
    zero = model.scaled_dipoles((0.0, 0.0))
    curves = sweep_models([model, zero], preset.crystal, preset.pump, temps, small_grid)
    solo = sweep_models([model], preset.crystal, preset.pump, temps, small_grid)[0]
    assert np.array_equal(curves[0].probabilities, solo.probabilities)
    assert np.all(curves[1].probabilities == 0)
    assert curves[0].fingerprint != curves[1].fingerprint


def test_sweep_temperatures():
    np.testing.assert_allclose(sweep_temperatures(33, 39, 61), 33 + 0.1 * np.arange(61), rtol=1e-14)
    with pytest.raises(ValueError):
        sweep_temperatures(39, 33, 10)
    with pytest.raises(ValueError):
        sweep_temperatures(33, 39, 1)


def test_temperature_sweep_defaults(preset, small_grid, model):
    c = temperature_sweep(model, preset.crystal, preset.pump, 35.0, 36.0, 3, small_grid)
    assert len(c) == 3 and c.temperatures[1] == 35.5


def _curve(T, P):
    return ProbabilityCurve(np.asarray(T, float), np.asarray(P, float), GridConfig(), "x")


def test_optimal_temperature_parabola():
    T = np.linspace(45, 56, 12)
    assert optimal_temperature(_curve(T, -(T - 50.3) ** 2 + 100)) == pytest.approx(50.3, abs=1e-10)
    assert optimal_temperature(_curve(T, -(T - 50.3) ** 2 + 100), refine=False) == 50.0


@given(st.floats(min_value=34.0, max_value=37.0), st.floats(min_value=0.1, max_value=10))
def test_optimal_temperature_exact_on_parabolas(t0, a):
    T = np.linspace(33, 39, 61)
    assert optimal_temperature(_curve(T, 1000 - a * (T - t0) ** 2)) == pytest.approx(t0, abs=1e-8)


def test_optimal_temperature_edges():
    T = np.linspace(0, 1, 5)
    assert optimal_temperature(_curve(T, T + 1)) == 1.0
    assert optimal_temperature(_curve(T, 2 - T)) == 0.0
    with pytest.raises(ValueError):
        optimal_temperature(_curve([1.0, 2.0], [1.0, 2.0]))
    assert optimal_temperature(_curve([1.0], [1.0]), refine=False) == 1.0


def test_curve_validation():
    with pytest.raises(ValueError):
        _curve([1, 1], [0, 0])
    with pytest.raises(ValueError):
        _curve([1, 2], [0, -1])
    with pytest.raises(ValueError):
        _curve([1, 2], [0])


def test_curve_outputs(tmp_path):
    c = _curve([35.0, 35.5], [1e-19, 2e-19])
    np.testing.assert_array_equal(c.normalized(), [0.5, 1.0])
    c.to_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text() == "temperature_C,probability_rel\n35,1e-19\n35.5,2e-19\n"
    c.write_metadata(tmp_path / "p.json", optimal_T_C=35.5)
    meta = json.loads((tmp_path / "p.json").read_text())
    assert meta["optimal_T_C"] == 35.5 and meta["fingerprint"] == "x" and meta["grid"]["n_nu"] == 8193
    assert np.array_equal(_curve([1.0], [0.0]).normalized(), [0.0])


def test_detuning_penalty(preset, small_grid, model):
    pen = detuning_penalty(model, preset.crystal, preset.pump, 35.7, small_grid)
    assert 0 < pen < 1
    shift = response_peak_shift(model, preset.pump)
    assert shift < 0  # the response maximum sums to a redder wavelength than the pump
    with pytest.raises(ZeroDivisionError):
        detuning_penalty(model.scaled_dipoles((0.0, 0.0)), preset.crystal, preset.pump, 35.7, small_grid)


def test_convergence_check_small(preset, model):
    rel, base, fine = convergence_check(model, preset.crystal, preset.pump, [35.7], GridConfig(n_omega0=33, n_nu=2049))
    assert fine.grid.n_nu == 4097 and fine.grid.n_omega0 == 65
    assert 0 <= rel < 0.05
