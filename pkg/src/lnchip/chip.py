"""Chip model: pump split and electro-optic phase, twin pair sources, C1, C2 filters.

Mode 0 is waveguide 2 (routed to R1), mode 1 is waveguide 3 (routed to R4).
With the symmetric coupler convention the ideal output is

    i e^{i dphi/2} [cos(dphi/2) |1,1> - sin(dphi/2) (|2,0> - |0,2>)/sqrt 2]

i.e. the bunched term carries the opposite sign to the textbook form; all
detection probabilities are unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ChipConfig, ElectrodeGeometry
from .fock import StateVector, apply_mode_transform, attenuator, coupler

SEPARATED = (1, 1)
BUNCHED_R1 = (2, 0)
BUNCHED_R4 = (0, 2)

_NOISE_NODES = 24


def eo_phase(geometry: ElectrodeGeometry, voltage: float) -> float:
    """Electro-optic pump phase difference for bias ``voltage`` (rad).

    Units cancel as given: pm/V * mm / (nm * um) is dimensionless per volt.
    """
    g = geometry
    return (2 * math.pi * g.fill_factor * g.eo_coefficient * g.pump_index ** 3
            * g.electrode_length * voltage / (g.pump_wavelength * g.electrode_gap))


def half_wave_voltage(geometry: ElectrodeGeometry) -> float:
    g = geometry
    return (g.pump_wavelength * g.electrode_gap
            / (2 * g.fill_factor * g.eo_coefficient * g.pump_index ** 3 * g.electrode_length))


def offset_for_voltage(geometry: ElectrodeGeometry, u_offset: float) -> float:
    """phase_offset that makes ``u_offset`` the separated-state bias."""
    return -eo_phase(geometry, u_offset)


def total_phase(config: ChipConfig, voltage: float) -> float:
    return eo_phase(config.electrode, voltage) + config.phase_offset


def source_state(config: ChipConfig, voltage: float, extra_phase: float = 0.0) -> StateVector:
    """Pair state right after the poled section.

    The pump phase difference is imprinted once on the pair amplitude (one pump
    photon per pair), not once per signal/idler photon.
    """
    alpha, beta = config.arm_amplitudes
    phi = total_phase(config, voltage) + extra_phase
    return StateVector.from_dict({(2, 0): alpha, (0, 2): beta * np.exp(1j * phi)}, modes=2)


def _propagate(config: ChipConfig, src: StateVector, cross_ratio: float) -> StateVector:
    out = apply_mode_transform(src, coupler(cross_ratio))
    eta = config.filter_c2_efficiency
    if eta < 1.0:
        out = apply_mode_transform(out, attenuator([eta, eta]))
    return out


def run_chip(config: ChipConfig, voltage: float) -> StateVector:
    """Noise-free two-photon state on (R1, R4) at bias ``voltage``."""
    return _propagate(config, source_state(config, voltage), config.coupler_c1_ratio)


@dataclass(frozen=True)
class PatternProbabilities:
    """Post-selected pattern probabilities plus the unconditional success factor."""

    separated: float
    bunched_r1: float
    bunched_r4: float
    success_probability: float

    @property
    def bunched(self) -> float:
        return self.bunched_r1 + self.bunched_r4

    def unconditional(self) -> tuple[float, float, float]:
        s = self.success_probability
        return self.separated * s, self.bunched_r1 * s, self.bunched_r4 * s


def _nodes(sigma: float):
    if sigma == 0.0:
        return np.array([0.0]), np.array([1.0])
    x, w = np.polynomial.hermite_e.hermegauss(_NOISE_NODES)
    return sigma * x, w / w.sum()


def pattern_probabilities(config: ChipConfig, voltage: float) -> PatternProbabilities:
    """Detection-pattern probabilities, averaged over the configured noise.

    Pump-phase jitter and C1 coupling-angle jitter are Gaussian and averaged by
    Gauss-Hermite quadrature; with both zero this is exactly ``run_chip``.
    """
    theta0 = math.asin(math.sqrt(config.coupler_c1_ratio))
    dphis, wphi = _nodes(config.phase_noise)
    dthetas, wtheta = _nodes(config.coupler_angle_noise)
    acc = np.zeros(3)
    success = 0.0
    for dphi, wp in zip(dphis, wphi):
        src = source_state(config, voltage, dphi)
        for dth, wt in zip(dthetas, wtheta):
            ratio = math.sin(theta0 + dth) ** 2
            out = _propagate(config, src, ratio)
            probs = out.probabilities()
            w = wp * wt
            acc += w * np.array([probs.get(SEPARATED, 0.0), probs.get(BUNCHED_R1, 0.0),
                                 probs.get(BUNCHED_R4, 0.0)])
            success += w * out.success_probability
    return PatternProbabilities(float(acc[0]), float(acc[1]), float(acc[2]), float(success))


@dataclass(frozen=True)
class MorphRow:
    voltage: float
    p_separated: float
    p_bunched_r1: float
    p_bunched_r4: float


def morph_curve(config: ChipConfig, voltages: Sequence[float]) -> list[MorphRow]:
    """Unconditional pattern probabilities across a bias grid (row order = grid order)."""
    if len(voltages) == 0:
        raise ValueError("voltage grid is empty")
    rows = []
    for u in voltages:
        sep, b1, b4 = pattern_probabilities(config, float(u)).unconditional()
        rows.append(MorphRow(float(u), sep, b1, b4))
    return rows


def analytic_visibilities(config: ChipConfig) -> tuple[float, float, float]:
    """Fringe visibilities of (R1&R4, R1&R1, R4&R4) from the noise-averaged model.

    Every channel is a pure first harmonic in the total phase, so two
    evaluations half a period apart give its extremes.
    """
    vpi = half_wave_voltage(config.electrode)
    alpha, beta = config.arm_amplitudes
    rel = np.angle(beta / alpha) if alpha != 0 and beta != 0 else 0.0
    u0 = -(config.phase_offset + rel) / math.pi * vpi
    a = pattern_probabilities(config, u0)
    b = pattern_probabilities(config, u0 + vpi)
    out = []
    for x, y in ((a.separated, b.separated), (a.bunched_r1, b.bunched_r1), (a.bunched_r4, b.bunched_r4)):
        hi, lo = max(x, y), min(x, y)
        out.append((hi - lo) / (hi + lo) if hi + lo > 0 else 0.0)
    return tuple(out)
