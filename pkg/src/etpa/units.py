"""Unit conversions and uniform frequency grids.

Everything inside the package works in angular frequency (rad/s). Wavelengths
(nm) and THz values are converted at the boundary only.
"""

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT

TWO_PI = 2.0 * np.pi


def wavelength_to_omega(lam_nm):
    """Vacuum wavelength in nm -> angular frequency in rad/s."""
    lam = np.asarray(lam_nm, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError(f"wavelength must be positive, got {lam_nm!r} nm")
    out = TWO_PI * C_LIGHT / (lam * 1e-9)
    return float(out) if out.ndim == 0 else out


def omega_to_wavelength(omega):
    """Angular frequency in rad/s -> vacuum wavelength in nm."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise ValueError(f"angular frequency must be positive, got {omega!r} rad/s")
    out = TWO_PI * C_LIGHT / w * 1e9
    return float(out) if out.ndim == 0 else out


def thz_to_omega(f_thz):
    """Ordinary frequency in THz -> rad/s (i.e. ``2*pi*f``)."""
    return TWO_PI * np.asarray(f_thz, dtype=float) * 1e12


def omega_to_thz(omega):
    return np.asarray(omega, dtype=float) / TWO_PI / 1e12


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Uniformly spaced, strictly increasing frequency axis (rad/s)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a frequency grid needs at least 2 points")
        d = np.diff(pts)
        if np.any(d <= 0):
            raise ValueError("grid points must be strictly increasing")
        step = (pts[-1] - pts[0]) / (pts.size - 1)
        # allow a few ulps of the absolute values: narrow grids far from 0 (the pump axis)
        tol = 1e-9 * step + 4 * np.finfo(float).eps * np.max(np.abs(pts))
        if np.max(np.abs(d - step)) > tol:
            raise ValueError("grid spacing is not uniform")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def spacing(self):
        return (self.points[-1] - self.points[0]) / (self.points.size - 1)

    @property
    def center(self):
        return 0.5 * (self.points[0] + self.points[-1])

    def __len__(self):
        return self.points.size

    def reversed(self):
        """Points in descending order (plain array; grids are increasing by contract)."""
        return self.points[::-1].copy()


def make_grid(center, half_width, n):
    """Uniform grid of ``n`` points spanning ``center +/- half_width``."""
    n = int(n)
    if n < 2:
        raise ValueError(f"grid needs n >= 2, got {n}")
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width!r}")
    pts = np.linspace(center - half_width, center + half_width, n)
    if n % 2 == 1:
        pts[n // 2] = center
    return FrequencyGrid(pts)
