"""End-to-end pipelines: chip -> counts -> accidental subtraction -> fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import DipFit, FitError, NoDipError, fit_fringe, fit_hom_dip, subtract_accidentals
from .chip import half_wave_voltage, pattern_probabilities
from .config import ChipConfig
from .detection import (
    PAIRS, CountRecord, expected_counts, hom_curve, hom_rates, rates_for_pattern, simulate_counts,
)
from .phasematch import FilterSpec, QpmGrating, SpdcSpectrum, channel_table, get_model, spdc_spectrum


@dataclass
class ScanResult:
    x: np.ndarray
    records: list[CountRecord]
    fits: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def rows(self) -> list[tuple]:
        return [
            (float(x), r.coincidences["r1r4"], r.coincidences["r1r1"], r.coincidences["r4r4"],
             r.singles["r1"], r.singles["r4"], float(r.estimated_accidentals["r1r4"]))
            for x, r in zip(self.x, self.records)
        ]

    def corrected(self, pair: str) -> tuple[np.ndarray, np.ndarray]:
        corr = [subtract_accidentals(r)[pair] for r in self.records]
        return np.array([c.value for c in corr]), np.array([c.sigma for c in corr])


def _record(rates, duration, seed, index, window, noiseless):
    if noiseless:
        return expected_counts(rates, duration, window)
    return simulate_counts(rates, duration, seed, index, window)


def fringe_scan(
    config: ChipConfig, voltages, duration: float = 1.0, seed: int = 0, noiseless: bool = False,
) -> ScanResult:
    """Simulate R1&R4, R1&R1, R4&R4 counts over a bias grid and fit each fringe."""
    x = np.asarray(voltages, dtype=float)
    det = config.detector
    records = []
    for i, u in enumerate(x):
        rates = rates_for_pattern(pattern_probabilities(config, float(u)), config.pair_rate, det)
        records.append(_record(rates, duration, seed, i, det.coincidence_window, noiseless))
    result = ScanResult(x, records)
    for pair in PAIRS:
        y, s = result.corrected(pair)
        try:
            result.fits[pair] = fit_fringe(x, y, np.maximum(s, 1.0))
        except (FitError, ValueError) as exc:
            result.failures[pair] = str(exc)
    return result


def fringe_report(config: ChipConfig, result: ScanResult) -> dict:
    channels = {}
    for pair in PAIRS:
        if pair in result.fits:
            channels[pair] = result.fits[pair].report()
        else:
            channels[pair] = {"error": result.failures[pair]}
    main = result.fits.get("r1r4")
    summary = {
        "visibilities": {p: result.fits[p].visibility for p in PAIRS if p in result.fits},
        "two_v_pi_fitted": main.period if main else None,
        "two_v_pi_model": 2 * half_wave_voltage(config.electrode),
        "u_offset": main.u_offset if main else None,
    }
    return {"channels": channels, "summary": summary}


def config_spectrum(config: ChipConfig) -> SpdcSpectrum:
    grating = QpmGrating(config.poling_period, config.crystal_length, config.temperature)
    filt = FilterSpec(config.filter.center, config.filter.bandwidth, config.filter.shape)
    return spdc_spectrum(get_model(config.sellmeier_model), grating, config.electrode.pump_wavelength,
                         filt, config.wavelength_offset)


@dataclass
class HomResult(ScanResult):
    dip: DipFit | None = None
    no_dip: bool = False
    p_separated: float = 0.0
    p_bunched: float = 0.0


def hom_experiment(
    config: ChipConfig, voltage: float, delays, duration: float = 1.0, seed: int = 0,
    noiseless: bool = False,
) -> HomResult:
    """Chip at ``voltage`` feeding an external 50:50 splitter with a delay line."""
    tau = np.asarray(delays, dtype=float)
    probs = pattern_probabilities(config, voltage)
    spectrum = config_spectrum(config)
    curve = hom_curve(probs.separated, probs.bunched, spectrum, tau, config.hom_mode_overlap)
    det = config.detector
    records = []
    for i, c in enumerate(curve):
        rates = hom_rates(float(c), probs.success_probability, config.pair_rate, det)
        records.append(_record(rates, duration, seed, i, det.coincidence_window, noiseless))
    result = HomResult(tau, records, p_separated=probs.separated, p_bunched=probs.bunched)
    y, s = result.corrected("r1r4")
    try:
        result.dip = fit_hom_dip(tau, y, np.maximum(s, 1.0), spectrum=spectrum)
    except NoDipError as exc:
        result.no_dip = True
        result.failures["r1r4"] = str(exc)
    except (FitError, ValueError) as exc:
        result.failures["r1r4"] = str(exc)
    return result


def hom_report(result: HomResult) -> dict:
    if result.dip is not None:
        fit = result.dip.report()
    elif result.no_dip:
        fit = {"model": "no dip", "params": {"visibility": 0.0}, "no_dip": True,
               "detail": result.failures["r1r4"]}
    else:
        fit = {"error": result.failures["r1r4"]}
    return {
        "dip": fit,
        "summary": {
            "visibility": result.dip.visibility if result.dip else 0.0,
            "p_separated": result.p_separated,
            "p_bunched": result.p_bunched,
            "expected_visibility_from_bunching": (1 - result.p_bunched) / (1 + result.p_bunched),
        },
    }


def channels(config: ChipConfig, periods=None, temperature: float | None = None):
    kwargs = {}
    if periods is not None:
        kwargs["periods_um"] = periods
    return channel_table(
        get_model(config.sellmeier_model),
        temperature_c=config.temperature if temperature is None else temperature,
        offset_nm=config.wavelength_offset,
        length_mm=config.crystal_length,
        **kwargs,
    )
