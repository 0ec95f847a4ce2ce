"""Run configuration: INI sections layered over the shipped defaults.

All values are validated and turned into model objects up front, so a bad
file is rejected before anything is computed or written.
"""

import configparser
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .molecule import MOLECULE_PRESETS, IntermediateState, MoleculeModel
from .source import CrystalSpec, GridConfig, PumpSpec, available_dispersion, load_sellmeier
from .units import thz_to_omega, wavelength_to_omega

DEFAULT_CONFIG = "nile_red_ppln.ini"

KNOWN_KEYS = {
    "molecule": {"preset", "lambda_f_nm", "gamma_f_2pi_thz", "intermediates"},
    "crystal": {"length_mm", "poling_period_um", "dispersion", "temperature_offset_c", "thermal_expansion"},
    "pump": {"center_nm", "sigma_2pi_ghz"},
    "grid": {"n_omega0", "omega0_halfwidth_sigmas", "n_nu", "lambda_min_nm", "lambda_max_nm", "response_n"},
    "sweep": {"t_min_c", "t_max_c", "t_step_c", "refine", "workers"},
    "spectrum": {"temperatures_c", "coherent"},
    "sample": {"concentration_mol_per_l", "path_length_mm"},
    "correction": {"dark_solv_cps", "dark_samp_cps", "efficiency_solv", "efficiency_samp"},
    "output": {"directory"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def default_config_text():
    return resources.files("etpa").joinpath("data", DEFAULT_CONFIG).read_text()


@dataclass
class RunConfig:
    molecule: MoleculeModel
    crystal: CrystalSpec
    pump: PumpSpec
    grid: GridConfig
    response_n: int = 281
    sweep_temperatures: np.ndarray = None
    refine: bool = True
    workers: int = 1
    spectrum_temperatures: tuple = ()
    coherent: bool = True
    concentration: float = 0.5e-3
    path_length: float = 2.0
    correction: dict = field(default_factory=dict)
    output_dir: str = "out"

    @property
    def window_nm(self):
        return tuple(self.grid.lambda_window_nm)

    def check_temperature(self, T, name="temperature"):
        lo, hi = self.crystal.sellmeier.temperature_c
        Td = self.crystal.dispersion_temperature(T)
        if not (np.isfinite(T) and lo <= Td <= hi):
            raise ConfigError(
                f"{name}: {T} degC maps to {Td:.4g} degC on the dispersion scale, "
                f"outside [{lo}, {hi}] degC"
            )


def _get(cp, section, key, conv=float):
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None


def _float_list(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _molecule(cp):
    preset = cp.get("molecule", "preset", fallback="custom").strip()
    explicit = [k for k in ("lambda_f_nm", "gamma_f_2pi_thz", "intermediates") if cp.has_option("molecule", k)]
    if preset != "custom":
        if preset not in MOLECULE_PRESETS:
            raise ConfigError(f"molecule.preset: unknown preset {preset!r} (known: {', '.join(MOLECULE_PRESETS)})")
        if explicit:
            raise ConfigError(f"molecule.{explicit[0]}: explicit parameters require preset = custom")
        return MOLECULE_PRESETS[preset]()
    missing = {"lambda_f_nm", "gamma_f_2pi_thz", "intermediates"} - set(explicit)
    if missing:
        raise ConfigError(f"molecule.{sorted(missing)[0]}: required when preset = custom")
    states = []
    for chunk in cp.get("molecule", "intermediates").split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split()
        if len(parts) != 3:
            raise ConfigError(f"molecule.intermediates: expected 'lambda_nm gamma_2pi_thz D', got {chunk.strip()!r}")
        try:
            lam, gam, d = (float(p) for p in parts)
            states.append(IntermediateState(wavelength_to_omega(lam), thz_to_omega(gam), d))
        except ValueError as exc:
            raise ConfigError(f"molecule.intermediates: {exc}") from None
    try:
        return MoleculeModel(
            wavelength_to_omega(_get(cp, "molecule", "lambda_f_nm")),
            thz_to_omega(_get(cp, "molecule", "gamma_f_2pi_thz")),
            tuple(states),
            name="custom",
        )
    except ValueError as exc:
        raise ConfigError(f"molecule: {exc}") from None


def _sweep_temperatures(t_min, t_max, step):
    if t_max < t_min:
        raise ConfigError(f"sweep.t_max_c: {t_max} is below t_min_c = {t_min}")
    if t_max == t_min:
        return np.array([t_min])
    if not step > 0:
        raise ConfigError(f"sweep.t_step_c: must be > 0, got {step}")
    n = (t_max - t_min) / step
    if abs(n - round(n)) > 1e-6:
        raise ConfigError(f"sweep.t_step_c: {step} does not divide [{t_min}, {t_max}]")
    return np.linspace(t_min, t_max, int(round(n)) + 1)


def load_config(path=None):
    """Parse and validate a run configuration (``None`` -> shipped defaults)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(default_config_text(), source=DEFAULT_CONFIG)
    if path is not None:
        user = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            with open(path) as fh:
                user.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"config: {exc}") from None
        for section in user.sections():
            if section not in KNOWN_KEYS:
                raise ConfigError(f"{section}: unknown section")
            for key in user[section]:
                if key not in KNOWN_KEYS[section]:
                    raise ConfigError(f"{section}.{key}: unknown key")
        if user.has_section("molecule"):
            # a user molecule section replaces the default one wholesale
            cp.remove_section("molecule")
            cp.add_section("molecule")
        cp.read_dict({s: dict(user[s]) for s in user.sections()})

    molecule = _molecule(cp)

    disp = cp.get("crystal", "dispersion").strip()
    if disp not in available_dispersion():
        raise ConfigError(f"crystal.dispersion: unknown set {disp!r} (known: {', '.join(available_dispersion())})")
    try:
        expansion = cp.getboolean("crystal", "thermal_expansion")
    except ValueError:
        raise ConfigError("crystal.thermal_expansion: expected true/false") from None
    try:
        crystal = CrystalSpec(
            _get(cp, "crystal", "length_mm"),
            _get(cp, "crystal", "poling_period_um"),
            load_sellmeier(disp),
            _get(cp, "crystal", "temperature_offset_c"),
            expansion,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"crystal: {exc}") from None

    center = _get(cp, "pump", "center_nm")
    sigma = _get(cp, "pump", "sigma_2pi_ghz")
    if not center > 0:
        raise ConfigError(f"pump.center_nm: must be > 0, got {center}")
    if not sigma > 0:
        raise ConfigError(f"pump.sigma_2pi_ghz: must be > 0, got {sigma}")
    pump = PumpSpec.from_wavelength(center, sigma)

    try:
        grid = GridConfig(
            _get(cp, "grid", "n_omega0", int),
            _get(cp, "grid", "omega0_halfwidth_sigmas"),
            _get(cp, "grid", "n_nu", int),
            (_get(cp, "grid", "lambda_min_nm"), _get(cp, "grid", "lambda_max_nm")),
        )
        grid.axes(pump)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    response_n = _get(cp, "grid", "response_n", int)
    if response_n < 2:
        raise ConfigError(f"grid.response_n: must be >= 2, got {response_n}")

    cfg = RunConfig(molecule, crystal, pump, grid, response_n)
    cfg.sweep_temperatures = _sweep_temperatures(
        _get(cp, "sweep", "t_min_c"), _get(cp, "sweep", "t_max_c"), _get(cp, "sweep", "t_step_c")
    )
    for T in cfg.sweep_temperatures[[0, -1]]:
        cfg.check_temperature(T, "sweep.t_min_c/t_max_c")
    try:
        cfg.refine = cp.getboolean("sweep", "refine")
        cfg.coherent = cp.getboolean("spectrum", "coherent")
    except ValueError as exc:
        raise ConfigError(f"sweep/spectrum: {exc}") from None
    cfg.workers = _get(cp, "sweep", "workers", int)
    if cfg.workers < 1:
        raise ConfigError(f"sweep.workers: must be >= 1, got {cfg.workers}")
    cfg.spectrum_temperatures = _get(cp, "spectrum", "temperatures_c", _float_list)
    for T in cfg.spectrum_temperatures:
        cfg.check_temperature(T, "spectrum.temperatures_c")

    cfg.concentration = _get(cp, "sample", "concentration_mol_per_l")
    cfg.path_length = _get(cp, "sample", "path_length_mm")
    if not cfg.concentration > 0:
        raise ConfigError(f"sample.concentration_mol_per_l: must be > 0, got {cfg.concentration}")
    if not cfg.path_length > 0:
        raise ConfigError(f"sample.path_length_mm: must be > 0, got {cfg.path_length}")
    cfg.correction = {k: _get(cp, "correction", k) for k in KNOWN_KEYS["correction"]}
    for k in ("efficiency_solv", "efficiency_samp"):
        if not cfg.correction[k] > 0:
            raise ConfigError(f"correction.{k}: must be > 0, got {cfg.correction[k]}")
    cfg.output_dir = cp.get("output", "directory").strip()
    return cfg
