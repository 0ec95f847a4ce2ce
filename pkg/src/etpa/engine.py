"""Entangled two-photon absorption probability and its temperature dependence.

The delta function tying ``w0 = w_i + w_s`` is removed by working on the
rotated JSA grid: for every sum frequency the inner amplitude is a line
integral over the difference frequency ``nu``,

    M(w0) = 1/2 * int dnu  Lt(w_i, w_s) A(w0, nu),

and the (relative) probability is ``P = int dw0 g(w0) |M(w0)|^2``. ``Lt`` is
the molecular response without the sqrt(g) factor, which depends on ``w0``
only and is therefore applied outside the line integral.
"""

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid

from .molecule import lorentzian_lineshape, reduced_response, response_argmax, response_map
from .source import GridConfig, build_jsa, degenerate_pm_temperature


def _row_response(model, jsa, omega0_shift=0.0):
    half = 0.5 * omega0_shift
    return reduced_response(model, jsa.omega_i + half, jsa.omega_s + half)


def inner_amplitude(model, jsa, omega0_index, omega0_shift=0.0):
    """Line integral over ``nu`` for one sum-frequency row of the JSA."""
    a = int(omega0_index)
    if not -len(jsa.omega0_axis) <= a < len(jsa.omega0_axis):
        raise IndexError(f"omega0 index {omega0_index} out of range")
    half = 0.5 * omega0_shift
    w0 = jsa.omega0_axis.points[a]
    nu = jsa.nu_axis.points
    lt = reduced_response(model, 0.5 * (w0 + nu) + half, 0.5 * (w0 - nu) + half)
    return complex(trapezoid(lt * jsa.values[a], dx=jsa.nu_axis.spacing) / 2.0)


def _probability(lt, g, jsa):
    inner = trapezoid(lt * jsa.values, dx=jsa.nu_axis.spacing, axis=1) / 2.0
    return float(trapezoid(g * np.abs(inner) ** 2, dx=jsa.omega0_axis.spacing))


def probability(model, jsa, omega0_shift=0.0):
    """Relative eTPA probability per photon pair.

    ``omega0_shift`` rigidly translates the JSA along the sum frequency,
    keeping its shape; used to compare against a pump tuned elsewhere.
    """
    lt = _row_response(model, jsa, omega0_shift)
    g = lorentzian_lineshape(model, jsa.omega0_axis.points + omega0_shift)
    return _probability(lt, g, jsa)


@dataclass(frozen=True, eq=False)
class ProbabilityCurve:
    temperatures: np.ndarray
    probabilities: np.ndarray
    grid: GridConfig
    fingerprint: str

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ValueError("temperatures and probabilities must be 1-D and equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("temperatures must be strictly increasing")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "probabilities", p)

    def __len__(self):
        return self.temperatures.size

    def normalized(self):
        peak = self.probabilities.max()
        return self.probabilities / peak if peak > 0 else self.probabilities.copy()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["temperature_C", "probability_rel"])
            for T, P in zip(self.temperatures, self.probabilities):
                w.writerow([f"{T:.9g}", f"{P:.9g}"])

    def write_metadata(self, path, **extra):
        meta = {"grid": self.grid.parameters(), "fingerprint": self.fingerprint}
        meta.update(extra)
        with open(path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def fingerprint(model, crystal, pump, grid):
    payload = {
        "molecule": model.parameters(),
        "crystal": crystal.parameters(),
        "pump": pump.parameters(),
        "grid": grid.parameters(),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def sweep_models(models, crystal, pump, temperatures, grid=None, workers=1):
    """Probability curves for several molecules sharing one set of JSAs.

    The JSA at each temperature is built once and reused for every model.
    Points are independent; with ``workers > 1`` they are evaluated on a
    thread pool and reassembled in temperature order, so the result does not
    depend on scheduling.
    """
    grid = grid or GridConfig()
    temps = np.asarray(temperatures, dtype=float)
    models = list(models)
    w0_axis, _ = grid.axes(pump)
    g = [lorentzian_lineshape(m, w0_axis.points) for m in models]
    lts = None

    def point(T):
        nonlocal lts
        jsa = build_jsa(crystal, pump, T, grid)
        if lts is None:
            lts = [_row_response(m, jsa) for m in models]
        return [_probability(lt, gm, jsa) for lt, gm in zip(lts, g)]

    if workers and workers > 1 and temps.size > 1:
        first = point(temps[0])  # fills the shared response cache before fan-out
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rest = list(pool.map(point, temps[1:]))
        rows = [first] + rest
    else:
        rows = [point(T) for T in temps]
    table = np.array(rows, dtype=float).reshape(temps.size, len(models))
    return [
        ProbabilityCurve(temps.copy(), table[:, k], grid, fingerprint(m, crystal, pump, grid))
        for k, m in enumerate(models)
    ]


def sweep_temperatures(T_lo, T_hi, n_T):
    if not T_lo < T_hi:
        raise ValueError(f"sweep needs T_lo < T_hi, got {T_lo}, {T_hi}")
    if int(n_T) < 2:
        raise ValueError(f"sweep needs at least 2 temperatures, got {n_T}")
    return np.linspace(T_lo, T_hi, int(n_T))


def temperature_sweep(model, crystal, pump, T_lo=33.0, T_hi=39.0, n_T=61, grid=None, workers=1):
    temps = sweep_temperatures(T_lo, T_hi, n_T)
    return sweep_models([model], crystal, pump, temps, grid, workers)[0]


def optimal_temperature(curve, refine=True):
    """Temperature of maximum probability.

    With ``refine`` a parabola through the best point and its two neighbours
    gives a sub-step estimate. At either end of the sweep the grid value is
    returned unrefined. Ties go to the lower temperature.
    """
    T = curve.temperatures
    P = curve.probabilities
    if refine and T.size < 3:
        raise ValueError("parabolic refinement needs at least 3 points")
    if T.size == 0:
        raise ValueError("empty curve")
    k = int(np.argmax(P))
    if not refine or k == 0 or k == T.size - 1:
        return float(T[k])
    x0, x1, x2 = T[k - 1 : k + 2]
    y0, y1, y2 = P[k - 1 : k + 2]
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if den == 0:
        return float(x1)
    return float(x1 - 0.5 * num / den)


def response_peak_shift(model, pump, window_nm=(1000.0, 1140.0), n_map=281):
    """Sum-frequency offset from the pump centre to the response maximum."""
    wi, ws = response_argmax(response_map(model, window_nm, window_nm, n_map))
    return wi + ws - pump.omega_p0


def detuning_penalty(model, crystal, pump, T, grid=None, window_nm=(1000.0, 1140.0), n_map=281):
    """Fractional probability loss from the pump not sitting on the response maximum.

    The reference is the same JSA rigidly moved along the sum frequency until
    its centre line passes through the response maximum of the map.
    """
    jsa = build_jsa(crystal, pump, T, grid)
    shift = response_peak_shift(model, pump, window_nm, n_map)
    p_ref = probability(model, jsa, omega0_shift=shift)
    if not p_ref > 0:
        raise ZeroDivisionError("reference probability is zero; penalty undefined")
    return 1.0 - probability(model, jsa) / p_ref


def convergence_check(model, crystal, pump, temperatures, grid=None, workers=1):
    """Largest relative change of P over ``temperatures`` when both grids are doubled."""
    grid = grid or GridConfig()
    base = sweep_models([model], crystal, pump, temperatures, grid, workers)[0]
    fine = sweep_models([model], crystal, pump, temperatures, grid.doubled(), workers)[0]
    rel = np.abs(fine.probabilities - base.probabilities) / np.maximum(
        np.abs(fine.probabilities), np.finfo(float).tiny
    )
    return float(rel.max()), base, fine


def calibrate_temperature_offset(model, crystal, pump, target_T, T_lo=33.0, T_hi=39.0, n_T=61,
                                 grid=None, tol=1e-3, max_iter=8):
    """Oven-scale offset that puts the refined sweep optimum at ``target_T``.

    Shifting the offset translates the probability curve almost rigidly in
    temperature, so a fixed-point iteration converges in a few steps. The
    start value places degenerate phase matching 1 degC below the target.
    Returns the offset in degC.
    """
    bare = replace(crystal, temperature_offset_c=0.0)
    lo, hi = crystal.sellmeier.temperature_c
    root = degenerate_pm_temperature(bare, pump.omega_p0 / 2.0, lo, hi)
    offset = root - (target_T - 1.0)
    for _ in range(max_iter):
        c = replace(crystal, temperature_offset_c=offset)
        t_opt = optimal_temperature(temperature_sweep(model, c, pump, T_lo, T_hi, n_T, grid))
        err = t_opt - target_T
        if abs(err) < tol:
            return offset
        offset += err
    raise RuntimeError(f"offset calibration did not converge (last error {err:.4g} degC)")
