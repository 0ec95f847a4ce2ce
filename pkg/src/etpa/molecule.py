"""Few-level model of a fluorophore and its two-photon response.

The response of a ground -> final transition mediated by intermediate
states ``j`` is

    L(w_i, w_s; w0) = sqrt(g(w0)) * sum_j D_j * (1/Delta_j(w_i) + 1/Delta_j(w_s))

with ``Delta_j(w) = w_j - w + i*gamma_j`` and ``g`` a unit-area Lorentzian of
half width ``Gamma_f`` centred on the final-state frequency.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .units import FrequencyGrid, omega_to_wavelength, thz_to_omega, wavelength_to_omega


@dataclass(frozen=True)
class IntermediateState:
    omega_j: float
    gamma_j: float
    D_j: float

    def __post_init__(self):
        if not self.gamma_j > 0:
            raise ValueError(f"intermediate linewidth must be > 0, got {self.gamma_j!r}")
        if not self.omega_j > 0:
            raise ValueError(f"intermediate frequency must be > 0, got {self.omega_j!r}")
        if isinstance(self.D_j, complex) or not np.isfinite(self.D_j):
            raise ValueError(f"dipole product must be a finite real number, got {self.D_j!r}")


@dataclass(frozen=True)
class MoleculeModel:
    omega_f: float
    Gamma_f: float
    states: tuple = field(default_factory=tuple)
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.Gamma_f > 0:
            raise ValueError(f"final-state width must be > 0, got {self.Gamma_f!r}")
        if not self.omega_f > 0:
            raise ValueError(f"final-state frequency must be > 0, got {self.omega_f!r}")
        if not self.states:
            raise ValueError("a molecule model needs at least one intermediate state")

    def scaled_dipoles(self, factors):
        """Copy with each ``D_j`` multiplied by ``factors`` (scalar or one per state)."""
        factors = np.broadcast_to(np.asarray(factors, dtype=float), (len(self.states),))
        states = [replace(s, D_j=s.D_j * float(f)) for s, f in zip(self.states, factors)]
        return replace(self, states=tuple(states))

    def scaled_linewidths(self, factor):
        states = [replace(s, gamma_j=s.gamma_j * factor) for s in self.states]
        return replace(self, states=tuple(states))

    def parameters(self):
        """Plain-dict view, used for fingerprints and sidecar files."""
        return {
            "name": self.name,
            "omega_f": self.omega_f,
            "Gamma_f": self.Gamma_f,
            "states": [[s.omega_j, s.gamma_j, s.D_j] for s in self.states],
        }


def nile_red():
    """Nile Red: target state at 548 nm and two intermediates (440 nm, 325 nm)."""
    gamma = thz_to_omega(24.0)
    return MoleculeModel(
        omega_f=wavelength_to_omega(548.0),
        Gamma_f=thz_to_omega(50.0),
        states=(
            IntermediateState(wavelength_to_omega(440.0), gamma, 0.086),
            IntermediateState(wavelength_to_omega(325.0), gamma, 0.078),
        ),
        name="nile_red",
    )


MOLECULE_PRESETS = {"nile_red": nile_red}


def detuning(state, omega):
    return state.omega_j - omega + 1j * state.gamma_j


def lorentzian_lineshape(model, omega0):
    """Final-state lineshape g(w0); peak value 1/pi at resonance."""
    x = (np.asarray(omega0, dtype=float) - model.omega_f) / model.Gamma_f
    return 1.0 / (np.pi * (1.0 + x * x))


def reduced_response(model, omega_i, omega_s):
    """Response without the sqrt(g) factor. Broadcasts over array inputs."""
    omega_i = np.asarray(omega_i, dtype=float)
    omega_s = np.asarray(omega_s, dtype=float)
    total = np.zeros(np.broadcast(omega_i, omega_s).shape, dtype=complex)
    for st in model.states:
        total = total + st.D_j * (1.0 / detuning(st, omega_i) + 1.0 / detuning(st, omega_s))
    return total


def response(model, omega_i, omega_s, omega0):
    return np.sqrt(lorentzian_lineshape(model, omega0)) * reduced_response(model, omega_i, omega_s)


def response_bound(model, omega0):
    """Upper bound on |response| at a given sum frequency."""
    s = sum(abs(st.D_j) * 2.0 / st.gamma_j for st in model.states)
    return np.sqrt(lorentzian_lineshape(model, omega0)) * s


@dataclass(frozen=True, eq=False)
class ResponseGrid:
    """Complex response sampled on (w_i, w_s) with w0 = w_i + w_s; rows index w_i."""

    omega_i_axis: FrequencyGrid
    omega_s_axis: FrequencyGrid
    values: np.ndarray

    def to_csv(self, path):
        lam_i = omega_to_wavelength(self.omega_i_axis.points)
        lam_s = omega_to_wavelength(self.omega_s_axis.points)
        mag = np.abs(self.values)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda_i_nm", "lambda_s_nm", "abs_L"])
            for a in range(len(lam_i)):
                for b in range(len(lam_s)):
                    w.writerow([f"{lam_i[a]:.9g}", f"{lam_s[b]:.9g}", f"{mag[a, b]:.9g}"])


def _axis_from_wavelengths(lam_range, n):
    lo, hi = (float(v) for v in lam_range)
    if not (lo > 0 and hi > 0) or lo == hi:
        raise ValueError(f"invalid wavelength range {lam_range!r}")
    w1, w2 = sorted((wavelength_to_omega(lo), wavelength_to_omega(hi)))
    return FrequencyGrid(np.linspace(w1, w2, n))


def response_map(model, lambda_i_range=(1000.0, 1140.0), lambda_s_range=(1000.0, 1140.0), n=281):
    """Sample the response over a wavelength rectangle.

    The axes are uniform in angular frequency between the frequencies of the
    two range endpoints, so the map is exactly mirror-symmetric when both
    ranges coincide.
    """
    if int(n) < 2:
        raise ValueError(f"response map needs n >= 2, got {n}")
    ax_i = _axis_from_wavelengths(lambda_i_range, int(n))
    ax_s = _axis_from_wavelengths(lambda_s_range, int(n))
    wi = ax_i.points[:, None]
    ws = ax_s.points[None, :]
    return ResponseGrid(ax_i, ax_s, response(model, wi, ws, wi + ws))


def response_argmax(grid):
    """(w_i, w_s) of the largest |L|; ties resolve to the smallest w_i, then w_s."""
    mag = np.abs(np.asarray(grid.values))
    if mag.size == 0:
        raise ValueError("empty response grid")
    # first occurrence in C order == lexicographically smallest indices; axes ascend
    a, b = np.unravel_index(int(np.argmax(mag)), mag.shape)
    wi = np.asarray(getattr(grid.omega_i_axis, "points", grid.omega_i_axis), dtype=float)
    ws = np.asarray(getattr(grid.omega_s_axis, "points", grid.omega_s_axis), dtype=float)
    return float(wi[a]), float(ws[b])
