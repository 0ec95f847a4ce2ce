"""Reduction of measured pair-transmission rates to eTPA cross sections.

The absorbed rate is ``R_abs = R_solv - R_samp``; its slope against
``R_solv`` divided by the areal number density of molecules ``c * L * N_A``
gives the cross section. Units: c in mol/L and L in mm on input, converted
to mol/cm^3 and cm, so the result is in cm^2.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import Avogadro

log = logging.getLogger(__name__)


class SingularFitError(ValueError):
    pass


class DataError(ValueError):
    """Malformed or physically invalid measurement data."""


@dataclass(frozen=True)
class RateRecord:
    r_solv: float
    r_samp: float
    pump_power: float = None

    def __post_init__(self):
        if not (self.r_solv >= 0 and self.r_samp >= 0):
            raise DataError(f"rates must be non-negative, got ({self.r_solv}, {self.r_samp})")


@dataclass(frozen=True)
class RateDataset:
    records: tuple
    concentration: float  # mol/L
    path_length: float  # mm
    temperature: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.concentration > 0:
            raise ValueError(f"concentration must be > 0, got {self.concentration!r}")
        if not self.path_length > 0:
            raise ValueError(f"path length must be > 0, got {self.path_length!r}")


@dataclass(frozen=True)
class CrossSectionResult:
    slope: float
    slope_stderr: float
    sigma_e: float
    intercept: float
    temperature: float = float("nan")
    n_negative: int = 0


@dataclass(frozen=True)
class PowerLawResult:
    exponent: float
    amplitude: float
    exponent_stderr: float


def correct_rates(values, dark_rate=0.0, efficiency=1.0):
    """Affine count correction: subtract the dark rate, divide by the efficiency."""
    if not efficiency > 0:
        raise ValueError(f"efficiency must be > 0, got {efficiency!r}")
    return (np.asarray(values, dtype=float) - dark_rate) / efficiency


def absorption_rates(dataset):
    """(R_solv, R_abs) per record, in input order. Negative R_abs is kept."""
    if not dataset.records:
        raise ValueError("empty dataset")
    out = [(r.r_solv, r.r_solv - r.r_samp) for r in dataset.records]
    neg = sum(1 for _, a in out if a < 0)
    if neg:
        log.warning("%d of %d records have negative absorption rate", neg, len(out))
    return out


def linear_slope(pairs, through_origin=False):
    """Ordinary least squares line through (x, y) pairs.

    Returns ``(slope, intercept, stderr)``. ``stderr`` is the standard error
    of the slope and is NaN when there are no residual degrees of freedom.
    """
    xy = np.asarray(pairs, dtype=float).reshape(-1, 2)
    x, y = xy[:, 0], xy[:, 1]
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    if through_origin:
        sxx = np.dot(x, x)
        if sxx == 0:
            raise SingularFitError("all x are zero")
        slope = np.dot(x, y) / sxx
        intercept = 0.0
        dof = n - 1
        resid = y - slope * x
        stderr = np.sqrt(np.dot(resid, resid) / dof / sxx) if dof > 0 else np.nan
    else:
        xm, ym = x.mean(), y.mean()
        dx = x - xm
        sxx = np.dot(dx, dx)
        if sxx == 0 or np.ptp(x) == 0:
            raise SingularFitError("x values are all equal")
        slope = np.dot(dx, y - ym) / sxx
        intercept = ym - slope * xm
        dof = n - 2
        resid = y - (intercept + slope * x)
        stderr = np.sqrt(np.dot(resid, resid) / dof / sxx) if dof > 0 else np.nan
    return float(slope), float(intercept), float(stderr)


def cross_section(slope, concentration, path_length):
    """Cross section in cm^2 from a dimensionless slope, c in mol/L, L in mm."""
    if not concentration > 0:
        raise ValueError(f"concentration must be > 0, got {concentration!r}")
    if not path_length > 0:
        raise ValueError(f"path length must be > 0, got {path_length!r}")
    if not np.isfinite(slope):
        raise ValueError(f"slope must be finite, got {slope!r}")
    c_mol_cm3 = concentration * 1e-3
    l_cm = path_length * 0.1
    return slope / (c_mol_cm3 * l_cm * Avogadro)


def fit_dataset(dataset, through_origin=False):
    rates = absorption_rates(dataset)
    slope, intercept, stderr = linear_slope(rates, through_origin)
    return CrossSectionResult(
        slope=slope,
        slope_stderr=stderr,
        sigma_e=cross_section(slope, dataset.concentration, dataset.path_length),
        intercept=intercept,
        temperature=dataset.temperature,
        n_negative=sum(1 for _, a in rates if a < 0),
    )


def power_law_exponent(pairs):
    """Fit y = amplitude * x**exponent by least squares in log-log space."""
    xy = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if xy.shape[0] < 3:
        raise ValueError(f"power-law fit needs at least 3 points, got {xy.shape[0]}")
    if np.any(~(xy > 0)):
        raise DataError("power-law fit needs strictly positive x and y")
    slope, intercept, stderr = linear_slope(np.log(xy))
    return PowerLawResult(slope, float(np.exp(intercept)), stderr)


def cubic_trend(points):
    """Least-squares cubic in T, coefficients highest power first.

    Fitted on a centred and scaled variable, then mapped back, which keeps the
    Vandermonde system well conditioned for temperatures around 35 degC.
    """
    tp = np.asarray(points, dtype=float).reshape(-1, 2)
    if tp.shape[0] < 4:
        raise ValueError(f"cubic trend needs at least 4 points, got {tp.shape[0]}")
    poly = np.polynomial.Polynomial.fit(tp[:, 0], tp[:, 1], 3)
    coef = poly.convert().coef  # ascending
    coef = np.pad(coef, (0, 4 - coef.size))
    return tuple(float(v) for v in coef[::-1])


# -- file formats -------------------------------------------------------------


@dataclass
class RateFile:
    records: list = field(default_factory=list)
    temperature: float = None


def _data_rows(path):
    """Yield (line_number, fields) for non-comment, non-blank CSV lines."""
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, next(csv.reader([stripped]))


def _comment_temperature(path):
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if s.startswith("#") and "temperature_c" in s.lower():
                _, _, value = s.partition("=") if "=" in s else s.partition(":")
                try:
                    return float(value.strip())
                except ValueError as exc:
                    raise DataError(f"{path}: bad temperature tag {s!r}") from exc
    return None


def read_rate_csv(path):
    """Read ``r_solv_cps,r_samp_cps[,pump_power_mw]`` with ``#`` comments.

    A comment line ``# temperature_C = 35`` tags the crystal temperature.
    Raises DataError naming the offending line.
    """
    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DataError(f"{path}: no data (empty file)") from None
    header = [h.strip() for h in header]
    if header[:2] != ["r_solv_cps", "r_samp_cps"] or len(header) > 3 or (
        len(header) == 3 and header[2] != "pump_power_mw"
    ):
        raise DataError(f"{path}:{lineno}: unexpected header {','.join(header)!r}")
    out = RateFile(temperature=_comment_temperature(path))
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            vals = [float(v) for v in fields]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric value in {','.join(fields)!r}") from None
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}:{lineno}: non-finite value")
        try:
            out.records.append(RateRecord(*vals))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    if not out.records:
        raise DataError(f"{path}: no data rows")
    return out


def read_xy_csv(path):
    """Two-column numeric CSV with a header row and ``#`` comments."""
    rows = _data_rows(path)
    try:
        next(rows)
    except StopIteration:
        raise DataError(f"{path}: no data (empty file)") from None
    pairs = []
    for lineno, fields in rows:
        if len(fields) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(fields)}")
        try:
            pairs.append((float(fields[0]), float(fields[1])))
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric value") from None
    if not pairs:
        raise DataError(f"{path}: no data rows")
    return pairs


def write_report(path, results):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["temperature_C", "slope", "slope_stderr", "intercept", "sigma_e_cm2"])
        for r in results:
            w.writerow(
                [f"{r.temperature:.9g}", f"{r.slope:.9g}", f"{r.slope_stderr:.9g}",
                 f"{r.intercept:.9g}", f"{r.sigma_e:.9g}"]
            )
