"""Type-0 SPDC photon-pair source in a periodically poled crystal.

The joint spectral amplitude factorises into a Gaussian pump envelope in the
sum frequency and a sinc phase-matching function,

    A(w_i, w_s) = alpha(w_i + w_s) * sinc(dk(w_i, w_s) * l / 2).

Because the pump (GHz) and the phase matching (THz) live on very different
scales the JSA is sampled on rotated axes: the sum frequency
``w0 = w_i + w_s`` and the difference frequency ``nu = w_i - w_s``. The
Jacobian of that rotation is 1/2.
"""

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.integrate import trapezoid
from scipy.optimize import bisect
from scipy.signal import find_peaks

from .units import FrequencyGrid, make_grid, omega_to_wavelength, wavelength_to_omega


class DomainError(ValueError):
    """Input outside the validity window of a dispersion model."""


class BracketError(ValueError):
    """Root search bracket without a sign change."""


# -- dispersion ---------------------------------------------------------------


@dataclass(frozen=True)
class TemperatureSellmeier:
    """Temperature-dependent Sellmeier equation of the six-term lithium niobate form."""

    name: str
    a: tuple
    b: tuple
    t0_c: float
    t1_c: float
    wavelength_um: tuple = (0.4, 4.0)
    temperature_c: tuple = (20.0, 200.0)
    expansion: tuple = (0.0, 0.0, 25.0)  # alpha, beta, t_ref
    source: str = ""

    def check(self, lam_um, T):
        lam = np.asarray(lam_um, dtype=float)
        lo, hi = self.wavelength_um
        if np.any(~np.isfinite(lam)) or np.min(lam) < lo or np.max(lam) > hi:
            raise DomainError(
                f"{self.name}: wavelength outside [{lo}, {hi}] um "
                f"(got {np.min(lam):.6g}..{np.max(lam):.6g} um)"
            )
        tlo, thi = self.temperature_c
        if not np.isfinite(T) or T < tlo or T > thi:
            raise DomainError(f"{self.name}: temperature {T!r} degC outside [{tlo}, {thi}] degC")

    def index(self, lam_um, T):
        self.check(lam_um, T)
        a1, a2, a3, a4, a5, a6 = self.a
        b1, b2, b3, b4 = self.b
        f = (T - self.t0_c) * (T + self.t1_c)
        l2 = np.asarray(lam_um, dtype=float) ** 2
        n2 = (
            a1
            + b1 * f
            + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
            + (a4 + b4 * f) / (l2 - a5**2)
            - a6 * l2
        )
        return np.sqrt(n2)


@lru_cache(maxsize=None)
def _dispersion_table():
    text = resources.files("etpa").joinpath("data/dispersion.json").read_text()
    return json.loads(text)


def available_dispersion():
    return sorted(_dispersion_table())


def load_sellmeier(name="mgo_cln_e"):
    table = _dispersion_table()
    if name not in table:
        raise KeyError(f"unknown dispersion model {name!r}; known: {', '.join(sorted(table))}")
    e = table[name]
    te = e.get("thermal_expansion", {})
    return TemperatureSellmeier(
        name=name,
        a=tuple(e["a"]),
        b=tuple(e["b"]),
        t0_c=e["t0_c"],
        t1_c=e["t1_c"],
        wavelength_um=tuple(e["wavelength_um"]),
        temperature_c=tuple(e["temperature_c"]),
        expansion=(te.get("alpha", 0.0), te.get("beta", 0.0), te.get("t_ref_c", 25.0)),
        source=e.get("source", ""),
    )


def refractive_index(model, lam_um, T):
    return model.index(lam_um, T)


def wavevector(model, omega, T):
    """k = n(2 pi c / w, T) * w / c in rad/m."""
    omega = np.asarray(omega, dtype=float)
    lam_um = 2.0 * np.pi * C_LIGHT / omega * 1e6
    return refractive_index(model, lam_um, T) * omega / C_LIGHT


# -- source description -------------------------------------------------------


@dataclass(frozen=True)
class CrystalSpec:
    """Bulk periodically poled crystal.

    ``temperature_offset_c`` is added to the oven temperature before the
    dispersion is evaluated. It maps a nominal oven reading onto the
    temperature scale of the dispersion model.
    """

    length_mm: float
    poling_period_um: float
    sellmeier: TemperatureSellmeier = field(default_factory=load_sellmeier)
    temperature_offset_c: float = 0.0
    thermal_expansion: bool = False

    def __post_init__(self):
        if not self.length_mm > 0:
            raise ValueError(f"crystal length must be > 0, got {self.length_mm!r}")
        if not self.poling_period_um > 0:
            raise ValueError(f"poling period must be > 0, got {self.poling_period_um!r}")

    @property
    def length_m(self):
        return self.length_mm * 1e-3

    def dispersion_temperature(self, T):
        return T + self.temperature_offset_c

    def poling_period_m(self, T):
        period = self.poling_period_um * 1e-6
        if self.thermal_expansion:
            alpha, beta, t_ref = getattr(self.sellmeier, "expansion", (0.0, 0.0, 25.0))
            dT = self.dispersion_temperature(T) - t_ref
            period *= 1.0 + alpha * dT + beta * dT * dT
        return period

    def parameters(self):
        return {
            "length_mm": self.length_mm,
            "poling_period_um": self.poling_period_um,
            "dispersion": getattr(self.sellmeier, "name", repr(self.sellmeier)),
            "temperature_offset_c": self.temperature_offset_c,
            "thermal_expansion": self.thermal_expansion,
        }


@dataclass(frozen=True)
class PumpSpec:
    omega_p0: float
    sigma_p: float

    def __post_init__(self):
        if not self.sigma_p > 0:
            raise ValueError(f"pump bandwidth must be > 0, got {self.sigma_p!r}")
        if not self.omega_p0 > 0:
            raise ValueError(f"pump frequency must be > 0, got {self.omega_p0!r}")

    @classmethod
    def from_wavelength(cls, center_nm, sigma_2pi_ghz):
        return cls(wavelength_to_omega(center_nm), 2.0 * np.pi * sigma_2pi_ghz * 1e9)

    def parameters(self):
        return {"omega_p0": self.omega_p0, "sigma_p": self.sigma_p}


def phase_mismatch(crystal, omega_i, omega_s, T):
    """dk = k(w_i + w_s) - k(w_i) - k(w_s) - 2 pi / period, all extraordinary."""
    omega_i = np.asarray(omega_i, dtype=float)
    omega_s = np.asarray(omega_s, dtype=float)
    Td = crystal.dispersion_temperature(T)
    n = crystal.sellmeier
    return (
        wavevector(n, omega_i + omega_s, Td)
        - wavevector(n, omega_i, Td)
        - wavevector(n, omega_s, Td)
        - 2.0 * np.pi / crystal.poling_period_m(T)
    )


def sinc(x):
    """Unnormalised sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def phase_matching_amplitude(crystal, omega_i, omega_s, T):
    return sinc(phase_mismatch(crystal, omega_i, omega_s, T) * crystal.length_m / 2.0)


def pump_amplitude(pump, omega):
    x = np.asarray(omega, dtype=float) - pump.omega_p0
    return np.exp(-(x**2) / (2.0 * pump.sigma_p**2)) / np.sqrt(2.0 * np.pi * pump.sigma_p**2)


# -- joint spectral amplitude -------------------------------------------------


@dataclass(frozen=True)
class GridConfig:
    """Resolution of the rotated (sum, difference) frequency grid."""

    n_omega0: int = 129
    omega0_halfwidth_sigmas: float = 5.0
    n_nu: int = 8193
    lambda_window_nm: tuple = (1000.0, 1140.0)

    def __post_init__(self):
        if self.n_omega0 < 2 or self.n_nu < 2:
            raise ValueError("grid resolutions must be >= 2")
        if not self.omega0_halfwidth_sigmas > 0:
            raise ValueError("omega0 half width must be positive")
        lo, hi = self.lambda_window_nm
        if not 0 < lo < hi:
            raise ValueError(f"invalid wavelength window {self.lambda_window_nm!r}")

    def doubled(self):
        """Twice the resolution on nested nodes."""
        return GridConfig(
            2 * self.n_omega0 - 1,
            self.omega0_halfwidth_sigmas,
            2 * self.n_nu - 1,
            tuple(self.lambda_window_nm),
        )

    def axes(self, pump):
        w0 = make_grid(pump.omega_p0, self.omega0_halfwidth_sigmas * pump.sigma_p, self.n_omega0)
        lo, hi = self.lambda_window_nm
        half = pump.omega_p0 / 2.0
        if not wavelength_to_omega(hi) < half < wavelength_to_omega(lo):
            raise ValueError(
                f"wavelength window {self.lambda_window_nm} does not contain the degenerate point "
                f"{omega_to_wavelength(half):.2f} nm"
            )
        nu_max = 2.0 * max(wavelength_to_omega(lo) - half, half - wavelength_to_omega(hi))
        nu = make_grid(0.0, nu_max, self.n_nu)
        return w0, nu

    def parameters(self):
        return {
            "n_omega0": self.n_omega0,
            "omega0_halfwidth_sigmas": self.omega0_halfwidth_sigmas,
            "n_nu": self.n_nu,
            "lambda_window_nm": list(self.lambda_window_nm),
        }


def trapezoid_2d(values, omega0_axis, nu_axis):
    """Integral over (w_i, w_s) of a field sampled on (w0, nu) axes."""
    inner = trapezoid(values, dx=nu_axis.spacing, axis=1)
    return trapezoid(inner, dx=omega0_axis.spacing) / 2.0


@dataclass(frozen=True, eq=False)
class JsaGrid:
    """Unit-normalised JSA on rotated axes; ``values[a, b]`` is at (w0[a], nu[b])."""

    omega0_axis: FrequencyGrid
    nu_axis: FrequencyGrid
    values: np.ndarray
    norm: float
    temperature: float = float("nan")

    @property
    def omega_i(self):
        return 0.5 * (self.omega0_axis.points[:, None] + self.nu_axis.points[None, :])

    @property
    def omega_s(self):
        return 0.5 * (self.omega0_axis.points[:, None] - self.nu_axis.points[None, :])

    def l2_norm(self):
        return float(np.sqrt(trapezoid_2d(np.abs(self.values) ** 2, self.omega0_axis, self.nu_axis)))

    def scaled(self, factor):
        """Copy with every amplitude multiplied by ``factor`` (no renormalisation)."""
        return JsaGrid(self.omega0_axis, self.nu_axis, self.values * factor, self.norm, self.temperature)


def build_jsa(crystal, pump, T, grid=None):
    """Sample and unit-normalise the JSA at crystal temperature ``T``."""
    grid = grid or GridConfig()
    w0_axis, nu_axis = grid.axes(pump)
    w0 = w0_axis.points[:, None]
    nu = nu_axis.points[None, :]
    wi = 0.5 * (w0 + nu)
    ws = 0.5 * (w0 - nu)
    try:
        phi = phase_matching_amplitude(crystal, wi, ws, T)
    except DomainError as exc:
        raise DomainError(f"at crystal temperature {T} degC: {exc}") from exc
    amp = (pump_amplitude(pump, w0) * phi).astype(complex)
    norm = float(np.sqrt(trapezoid_2d(np.abs(amp) ** 2, w0_axis, nu_axis)))
    if not norm > 0:
        raise ValueError(f"JSA vanishes on the grid at T = {T} degC")
    return JsaGrid(w0_axis, nu_axis, amp / norm, norm, float(T))


# -- single-photon spectra ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrum:
    omega: np.ndarray
    intensity: np.ndarray
    temperature: float = float("nan")

    @property
    def wavelength_nm(self):
        return omega_to_wavelength(self.omega)

    def to_csv(self, path):
        lam = self.wavelength_nm
        order = np.argsort(lam)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda_nm", "intensity_normalized"])
            for k in order:
                w.writerow([f"{lam[k]:.9g}", f"{self.intensity[k]:.9g}"])


def single_photon_spectrum(jsa, coherent=True):
    """Idler spectrum from the JSA, peak-normalised.

    ``coherent=True`` gives |int dw_s A(w_i, w_s)|^2; otherwise the
    incoherent marginal int dw_s |A(w_i, w_s)|^2. At fixed ``w_i`` the
    integration line runs across the rotated grid as ``nu = 2 w_i - w0``;
    each row is linearly interpolated in ``nu`` and the rows are integrated
    over ``w0`` (``dw_s = dw0`` at fixed ``w_i``).
    """
    w0 = jsa.omega0_axis.points
    nu = jsa.nu_axis.points
    omega_i = 0.5 * (jsa.omega0_axis.center + nu)
    rows = np.empty((w0.size, nu.size), dtype=complex if coherent else float)
    for a in range(w0.size):
        target = 2.0 * omega_i - w0[a]
        row = jsa.values[a]
        if coherent:
            rows[a] = np.interp(target, nu, row.real, left=0.0, right=0.0) + 1j * np.interp(
                target, nu, row.imag, left=0.0, right=0.0
            )
        else:
            rows[a] = np.interp(target, nu, np.abs(row) ** 2, left=0.0, right=0.0)
    integral = trapezoid(rows, dx=jsa.omega0_axis.spacing, axis=0)
    s = np.abs(integral) ** 2 if coherent else np.abs(integral)
    peak = s.max()
    if peak > 0:
        s = s / peak
    return Spectrum(omega_i, s, jsa.temperature)


def spectrum_peaks(spectrum, min_height=0.5, min_prominence=0.05):
    """Wavelengths (nm, ascending) of the prominent local maxima of a spectrum."""
    lam = spectrum.wavelength_nm
    order = np.argsort(lam)
    y = np.asarray(spectrum.intensity)[order]
    # pad so that maxima sitting on the window edge are still reported
    idx, _ = find_peaks(np.r_[0.0, y, 0.0], height=min_height, prominence=min_prominence)
    return lam[order][idx - 1]


def spectrum_width(spectrum, level=0.1):
    """Outer full width in nm of the region where the spectrum is >= ``level``."""
    lam = spectrum.wavelength_nm
    above = lam[np.asarray(spectrum.intensity) >= level]
    if above.size == 0:
        return 0.0
    return float(above.max() - above.min())


def degenerate_pm_temperature(crystal, omega_deg, T_lo, T_hi, xtol=1e-3):
    """Crystal temperature at which degenerate pairs at ``omega_deg`` are phase matched."""

    def f(T):
        return float(phase_mismatch(crystal, omega_deg, omega_deg, T))

    f_lo, f_hi = f(T_lo), f(T_hi)
    if f_lo == 0.0:
        return float(T_lo)
    if f_hi == 0.0:
        return float(T_hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(
            f"phase mismatch does not change sign on [{T_lo}, {T_hi}] degC "
            f"(dk = {f_lo:.4g}, {f_hi:.4g} rad/m)"
        )
    return float(bisect(f, T_lo, T_hi, xtol=xtol))
