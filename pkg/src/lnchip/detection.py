"""Pattern probabilities -> count rates, Poisson count records, HOM delay scans.

Same-port doubles (R1&R1, R4&R4) assume each output is split by a 50:50 tap
onto two detectors of the port's efficiency: a two-photon event registers with
probability eta^2 / 2, and each tap detector sees half the port's singles.
Accidentals are S_a * S_b * tau_w from independent singles (CW, low flux).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chip import BUNCHED_R1, BUNCHED_R4, SEPARATED, PatternProbabilities
from .config import DetectorModel
from .fock import StateVector, pattern_probability
from .phasematch import SpdcSpectrum

PAIRS = ("r1r4", "r1r1", "r4r4")
DETECTORS = ("r1", "r4")


class DetectionError(ValueError):
    pass


@dataclass(frozen=True)
class ExpectedRates:
    """Mean rates in Hz. ``coincidences`` are true (correlated) events only."""

    coincidences: dict
    singles: dict
    accidentals: dict

    def total_coincidences(self) -> dict:
        return {k: self.coincidences[k] + self.accidentals[k] for k in PAIRS}


@dataclass(frozen=True)
class CountRecord:
    duration: float
    singles: dict
    coincidences: dict
    estimated_accidentals: dict
    seed: int
    index: int = 0
    extra: dict = field(default_factory=dict)


def rates_from_probabilities(
    p11: float, p20: float, p02: float, success: float, pair_rate: float, det: DetectorModel
) -> ExpectedRates:
    if pair_rate < 0:
        raise DetectionError("pair rate must be non-negative")
    e1, e4 = det.efficiency
    n = pair_rate * success
    coinc = {
        "r1r4": n * p11 * e1 * e4,
        "r1r1": n * p20 * 0.5 * e1 ** 2,
        "r4r4": n * p02 * 0.5 * e4 ** 2,
    }
    singles = {
        "r1": n * (p11 * e1 + p20 * (1 - (1 - e1) ** 2)) + det.dark_rate,
        "r4": n * (p11 * e4 + p02 * (1 - (1 - e4) ** 2)) + det.dark_rate,
    }
    return ExpectedRates(coinc, singles, accidental_rates(singles, det.coincidence_window))


def accidental_rates(singles: dict, window_ns: float) -> dict:
    tau = window_ns * 1e-9
    return {
        "r1r4": singles["r1"] * singles["r4"] * tau,
        "r1r1": (singles["r1"] / 2) ** 2 * tau,
        "r4r4": (singles["r4"] / 2) ** 2 * tau,
    }


def coincidence_rates(state: StateVector, pair_rate: float, det: DetectorModel) -> ExpectedRates:
    """Expected rates for a two-mode (R1, R4) output state."""
    if state.modes != 2:
        raise DetectionError(f"expected a state on (R1, R4), got {state.modes} modes")
    return rates_from_probabilities(
        pattern_probability(state, SEPARATED),
        pattern_probability(state, BUNCHED_R1),
        pattern_probability(state, BUNCHED_R4),
        state.success_probability, pair_rate, det,
    )


def rates_for_pattern(probs: PatternProbabilities, pair_rate: float, det: DetectorModel) -> ExpectedRates:
    return rates_from_probabilities(probs.separated, probs.bunched_r1, probs.bunched_r4,
                                    probs.success_probability, pair_rate, det)


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Substream for sweep point ``index``: SeedSequence(seed, spawn_key=(index,))."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def estimate_accidentals(singles_counts: dict, duration: float, window_ns: float) -> dict:
    """Accidental counts implied by measured singles counts over ``duration``."""
    rates = {k: v / duration for k, v in singles_counts.items()}
    return {k: v * duration for k, v in accidental_rates(rates, window_ns).items()}


def simulate_counts(
    rates: ExpectedRates, duration: float, seed: int, index: int = 0, window_ns: float = 1.0
) -> CountRecord:
    """Poisson-sample one sweep point. Deterministic in (seed, index)."""
    if duration <= 0:
        raise DetectionError("duration must be positive")
    rng = point_rng(seed, index)
    singles = {k: int(rng.poisson(rates.singles[k] * duration)) for k in DETECTORS}
    total = rates.total_coincidences()
    coinc = {k: int(rng.poisson(total[k] * duration)) for k in PAIRS}
    est = estimate_accidentals(singles, duration, window_ns)
    return CountRecord(duration, singles, coinc, est, int(seed), int(index))


def expected_counts(rates: ExpectedRates, duration: float, window_ns: float = 1.0) -> CountRecord:
    """Noiseless record holding mean counts (floats) instead of samples."""
    singles = {k: rates.singles[k] * duration for k in DETECTORS}
    total = rates.total_coincidences()
    coinc = {k: total[k] * duration for k in PAIRS}
    return CountRecord(duration, singles, coinc, estimate_accidentals(singles, duration, window_ns), -1)


def dip_kernel(spectrum: SpdcSpectrum, delays_ps) -> np.ndarray:
    """Two-photon interference term  integral rho(nu) cos(2 nu tau) d nu."""
    tau = np.atleast_1d(np.asarray(delays_ps, dtype=float))
    nu = spectrum.detuning
    phase = np.cos(2.0 * np.outer(tau, nu))
    return np.trapezoid(phase * spectrum.density, nu, axis=1)


def _check_spectrum(spectrum: SpdcSpectrum):
    if abs(spectrum.integral() - 1.0) > 1e-6:
        raise DetectionError("spectral density is not normalized")
    if not np.allclose(spectrum.density, spectrum.density[::-1], rtol=1e-9, atol=1e-12 * spectrum.density.max()):
        raise DetectionError("spectral density is not symmetric in detuning")


def hom_curve(
    p_separated: float, p_bunched: float, spectrum: SpdcSpectrum, delays_ps, mode_overlap: float = 1.0
) -> np.ndarray:
    """Coincidence probability behind a 50:50 splitter versus delay.

    The separated part dips as (1 - m K(tau)) / 2; bunched inputs give a flat 1/2.
    Inputs are mixed incoherently by pattern probability.
    """
    _check_spectrum(spectrum)
    k = dip_kernel(spectrum, delays_ps)
    return p_separated * 0.5 * (1 - mode_overlap * k) + p_bunched * 0.5


def hom_scan(state: StateVector, spectrum: SpdcSpectrum, delays_ps, mode_overlap: float = 1.0) -> np.ndarray:
    if state.modes != 2:
        raise DetectionError("HOM scan needs a state on (R1, R4)")
    p11 = pattern_probability(state, SEPARATED)
    pb = pattern_probability(state, BUNCHED_R1) + pattern_probability(state, BUNCHED_R4)
    return hom_curve(p11, pb, spectrum, delays_ps, mode_overlap)


def hom_rates(
    coincidence_probability: float, success: float, pair_rate: float, det: DetectorModel
) -> ExpectedRates:
    """Rates behind the external splitter; ports a/b take the r1/r4 slots.

    Every pair delivers on average one photon per output port, so singles are
    n * eta + dark. Same-port doubles use the tap convention.
    """
    e1, e4 = det.efficiency
    n = pair_rate * success
    c = coincidence_probability
    coinc = {
        "r1r4": n * c * e1 * e4,
        "r1r1": n * (1 - c) / 2 * 0.5 * e1 ** 2,
        "r4r4": n * (1 - c) / 2 * 0.5 * e4 ** 2,
    }
    singles = {"r1": n * e1 + det.dark_rate, "r4": n * e4 + det.dark_rate}
    return ExpectedRates(coinc, singles, accidental_rates(singles, det.coincidence_window))


def pair_brightness(pair_rate: float, coupled_pump_power_mw: float, bandwidth_nm: float) -> float:
    """Pairs per second per nm of bandwidth per mW of coupled pump."""
    if coupled_pump_power_mw <= 0:
        raise DetectionError("pump power must be positive")
    if bandwidth_nm <= 0:
        raise DetectionError("bandwidth must be positive")
    return pair_rate / (coupled_pump_power_mw * bandwidth_nm)
