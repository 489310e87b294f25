"""Extraordinary-index dispersion and first-order type-0 quasi-phase-matching.

Wavelengths are in nm at the interface and converted to um internally;
wavevectors are in rad/um and angular frequencies in rad/ps.

Bulk Sellmeier data misses the waveguide dispersion of the real chip, so all
phase-matching calls take a single ``offset_nm`` calibration: the bulk model
is evaluated at ``lambda - offset_nm`` for the fundamental, which shifts the
whole channel curve along the wavelength axis without changing its shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

C_NM_PER_PS = 299792.458

DEFAULT_MODEL = "jundt1997_congruent_e"
DEFAULT_PERIODS_UM = tuple(round(14.36 + 0.24 * k, 2) for k in range(9))
DEFAULT_BRACKET_NM = (1400.0, 1700.0)
ROOT_TOL_NM = 1e-9


class PhaseMatchError(ValueError):
    pass


@dataclass(frozen=True)
class SellmeierModel:
    """Temperature-dependent Sellmeier coefficients (Jundt functional form)."""

    name: str
    a: tuple[float, ...]
    b: tuple[float, ...]
    wavelength_range_nm: tuple[float, float]
    temperature_range_c: tuple[float, float]
    description: str = ""

    def check(self, wavelength_nm, temperature_c: float):
        lo, hi = self.wavelength_range_nm
        lam = np.asarray(wavelength_nm, dtype=float)
        if np.any(lam < lo) or np.any(lam > hi):
            raise PhaseMatchError(
                f"wavelength outside {self.name} validity range {lo}-{hi} nm"
            )
        t_lo, t_hi = self.temperature_range_c
        if not t_lo <= temperature_c <= t_hi:
            raise PhaseMatchError(
                f"temperature {temperature_c} C outside {self.name} validity range {t_lo}-{t_hi} C"
            )


def load_sellmeier_models(path=None) -> dict[str, SellmeierModel]:
    """Read coefficient sets keyed by model name (bundled file by default)."""
    if path is None:
        text = resources.files("lnchip.data").joinpath("sellmeier.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    doc = json.loads(text)
    return {
        name: SellmeierModel(
            name=name,
            a=tuple(entry["a"]),
            b=tuple(entry["b"]),
            wavelength_range_nm=tuple(entry["wavelength_range_nm"]),
            temperature_range_c=tuple(entry["temperature_range_c"]),
            description=entry.get("description", ""),
        )
        for name, entry in doc.items()
    }


def get_model(name: str = DEFAULT_MODEL) -> SellmeierModel:
    models = load_sellmeier_models()
    try:
        return models[name]
    except KeyError:
        raise PhaseMatchError(f"unknown Sellmeier model {name!r}; have {sorted(models)}") from None


@dataclass(frozen=True)
class QpmGrating:
    poling_period_um: float
    length_mm: float = 10.0
    temperature_c: float = 25.5

    def __post_init__(self):
        if not (self.poling_period_um > 0 and self.length_mm > 0):
            raise PhaseMatchError("poling period and length must be positive")


def _index_raw(model: SellmeierModel, wavelength_nm, temperature_c: float):
    a1, a2, a3, a4, a5, a6 = model.a
    b1, b2, b3, b4 = model.b
    lam = np.asarray(wavelength_nm, dtype=float) * 1e-3
    f = (temperature_c - 24.5) * (temperature_c + 570.82)
    lam2 = lam * lam
    n2 = (
        a1 + b1 * f
        + (a2 + b2 * f) / (lam2 - (a3 + b3 * f) ** 2)
        + (a4 + b4 * f) / (lam2 - a5 ** 2)
        - a6 * lam2
    )
    return np.sqrt(n2)


def refractive_index(model: SellmeierModel, wavelength_nm, temperature_c: float):
    """Extraordinary index n_e(lambda, T); scalar in, float out."""
    model.check(wavelength_nm, temperature_c)
    n = _index_raw(model, wavelength_nm, temperature_c)
    return float(n) if np.ndim(n) == 0 else n


def wavenumber(model: SellmeierModel, wavelength_nm, temperature_c: float):
    """k = 2 pi n / lambda in rad/um."""
    n = refractive_index(model, wavelength_nm, temperature_c)
    return 2 * np.pi * n / (np.asarray(wavelength_nm, dtype=float) * 1e-3)


def qpm_mismatch(
    model: SellmeierModel,
    grating: QpmGrating,
    fundamental_nm: float,
    offset_nm: float = 0.0,
) -> float:
    """SHG / degenerate-SPDC mismatch k(lambda/2) - 2 k(lambda) - 2 pi / period, rad/um."""
    lam = fundamental_nm - offset_nm
    temp = grating.temperature_c
    k_sh = wavenumber(model, lam / 2, temp)
    k_f = wavenumber(model, lam, temp)
    return float(k_sh - 2 * k_f - 2 * np.pi / grating.poling_period_um)


def shg_wavelength(
    model: SellmeierModel,
    grating: QpmGrating,
    offset_nm: float = 0.0,
    bracket_nm: Sequence[float] = DEFAULT_BRACKET_NM,
) -> float:
    """Phase-matched fundamental wavelength in nm, by bisection inside ``bracket_nm``."""
    lo, hi = float(bracket_nm[0]), float(bracket_nm[1])
    f_lo = qpm_mismatch(model, grating, lo, offset_nm)
    f_hi = qpm_mismatch(model, grating, hi, offset_nm)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise PhaseMatchError(
            f"no phase-matching root in {lo}-{hi} nm for period {grating.poling_period_um} um"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = qpm_mismatch(model, grating, mid, offset_nm)
        if f_mid == 0.0 or hi - lo < ROOT_TOL_NM:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_offset(
    model: SellmeierModel,
    period_um: float = 15.32,
    temperature_c: float = 25.5,
    target_nm: float = 1560.0,
) -> float:
    """Wavelength offset that puts ``period_um`` on ``target_nm`` at ``temperature_c``."""
    raw = shg_wavelength(model, QpmGrating(period_um, temperature_c=temperature_c),
                         bracket_nm=(1000.0, 2000.0))
    return target_nm - raw


@dataclass(frozen=True)
class ChannelRow:
    channel: int
    period_um: float
    shg_wavelength_nm: float


def channel_table(
    model: SellmeierModel,
    periods_um: Sequence[float] = DEFAULT_PERIODS_UM,
    temperature_c: float = 25.5,
    offset_nm: float = 0.0,
    length_mm: float = 10.0,
) -> list[ChannelRow]:
    """One row per poling period, channels numbered from 1 in input order."""
    if len(periods_um) == 0:
        raise PhaseMatchError("need at least one poling period")
    return [
        ChannelRow(
            i + 1, float(p),
            shg_wavelength(model, QpmGrating(float(p), length_mm, temperature_c), offset_nm),
        )
        for i, p in enumerate(periods_um)
    ]


def temperature_tuning_slope(
    model: SellmeierModel, grating: QpmGrating, offset_nm: float = 0.0, dt: float = 0.5
) -> float:
    """d(lambda_SHG)/dT in nm/K by central difference."""
    hot = QpmGrating(grating.poling_period_um, grating.length_mm, grating.temperature_c + dt)
    cold = QpmGrating(grating.poling_period_um, grating.length_mm, grating.temperature_c - dt)
    return (shg_wavelength(model, hot, offset_nm) - shg_wavelength(model, cold, offset_nm)) / (2 * dt)


def omega_from_nm(wavelength_nm):
    return 2 * np.pi * C_NM_PER_PS / np.asarray(wavelength_nm, dtype=float)


def nm_from_omega(omega):
    return 2 * np.pi * C_NM_PER_PS / np.asarray(omega, dtype=float)


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass interference filter placed on each photon."""

    center_nm: float = 1560.0
    bandwidth_nm: float = 14.0
    shape: str = "gaussian"

    def __post_init__(self):
        if self.shape not in ("gaussian", "tophat"):
            raise PhaseMatchError(f"unknown filter shape {self.shape!r}")
        if self.bandwidth_nm <= 0:
            raise PhaseMatchError("filter bandwidth must be positive")

    def transmission(self, omega):
        """Power transmission versus angular frequency (rad/ps); FWHM = bandwidth."""
        w0 = omega_from_nm(self.center_nm)
        dw = 2 * np.pi * C_NM_PER_PS * self.bandwidth_nm / self.center_nm ** 2
        x = (np.asarray(omega) - w0) / dw
        if self.shape == "gaussian":
            return np.exp(-4 * np.log(2) * x ** 2)
        return (np.abs(x) <= 0.5).astype(float)

    @property
    def bandwidth_rad_per_ps(self) -> float:
        return 2 * np.pi * C_NM_PER_PS * self.bandwidth_nm / self.center_nm ** 2


@dataclass(frozen=True)
class SpdcSpectrum:
    """Normalized pair density over signal detuning nu (rad/ps) from degeneracy.

    The signal sits at omega_p/2 + nu and the idler at omega_p/2 - nu.
    """

    detuning: np.ndarray
    density: np.ndarray
    phase_matching: np.ndarray
    filter_product: np.ndarray
    pump_nm: float
    signal_nm: np.ndarray = field(repr=False)
    idler_nm: np.ndarray = field(repr=False)

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.detuning))

    def filter_overlap(self) -> float:
        """Fraction of the filter passband that is phase-matched."""
        return float(np.trapezoid(self.phase_matching * self.filter_product, self.detuning)
                     / np.trapezoid(self.filter_product, self.detuning))


def pair_mismatch(
    model: SellmeierModel,
    grating: QpmGrating,
    pump_nm: float,
    detuning,
    offset_nm: float = 0.0,
):
    """k_p - k_s - k_i - 2 pi / period for signal/idler at +-detuning (rad/um)."""
    temp = grating.temperature_c
    raw_pump = pump_nm - offset_nm / 2
    w_p = omega_from_nm(raw_pump)
    nu = np.asarray(detuning, dtype=float)
    k_p = wavenumber(model, raw_pump, temp)
    k_s = wavenumber(model, nm_from_omega(w_p / 2 + nu), temp)
    k_i = wavenumber(model, nm_from_omega(w_p / 2 - nu), temp)
    return k_p - k_s - k_i - 2 * np.pi / grating.poling_period_um


def _pm_curve(model, grating, pump_nm, detuning, offset_nm):
    dk = pair_mismatch(model, grating, pump_nm, detuning, offset_nm)
    length_um = grating.length_mm * 1e3
    return np.sinc(dk * length_um / (2 * np.pi)) ** 2


def spdc_spectrum(
    model: SellmeierModel,
    grating: QpmGrating,
    pump_nm: float = 780.0,
    filt: FilterSpec | None = None,
    offset_nm: float = 0.0,
    detuning=None,
) -> SpdcSpectrum:
    """Filtered degenerate SPDC density for a CW pump.

    density(nu) ~ sinc^2(dk(nu) L / 2) F(omega_s) F(omega_i), normalized to unit
    integral over the detuning grid (default: +-4 filter widths, 2001 points).
    """
    filt = filt or FilterSpec()
    if detuning is None:
        half = 4.0 * filt.bandwidth_rad_per_ps
        detuning = np.linspace(-half, half, 2001)
    nu = np.asarray(detuning, dtype=float)
    w_p = omega_from_nm(pump_nm)
    signal_nm = nm_from_omega(w_p / 2 + nu)
    idler_nm = nm_from_omega(w_p / 2 - nu)
    pm = _pm_curve(model, grating, pump_nm, nu, offset_nm)
    fp = filt.transmission(w_p / 2 + nu) * filt.transmission(w_p / 2 - nu)
    raw = pm * fp
    total = np.trapezoid(raw, nu)
    if not total > 0:
        raise PhaseMatchError("filtered SPDC spectrum has zero integral")
    return SpdcSpectrum(nu, raw / total, pm, fp, float(pump_nm), signal_nm, idler_nm)


def phase_matching_fwhm(
    model: SellmeierModel,
    grating: QpmGrating,
    pump_nm: float = 780.0,
    offset_nm: float = 0.0,
    step: float = 0.5,
) -> float:
    """Full width (rad/ps) of the unfiltered sinc^2 around degeneracy."""
    pm0 = _pm_curve(model, grating, pump_nm, 0.0, offset_nm)
    if pm0 < 0.5:
        raise PhaseMatchError("pump is not phase-matched at degeneracy")
    nu = 0.0
    while True:
        nxt = nu + step
        if _pm_curve(model, grating, pump_nm, nxt, offset_nm) < 0.5:
            break
        nu = nxt
    lo, hi = nu, nu + step
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _pm_curve(model, grating, pump_nm, mid, offset_nm) >= 0.5:
            lo = mid
        else:
            hi = mid
    return 2 * 0.5 * (lo + hi)
