"""One-off calibration of the chip model against reported summary numbers.

The C1 cross-coupling is held fixed. Two parameters are fitted to the three
fringe visibilities: the arm amplitude ratio |alpha/beta| and the rms jitter
of the C1 coupling angle (the splitting ratio wanders across the pair
bandwidth). The HOM mode overlap is then solved so the separated state gives
the reported dip visibility. Run ``python -m lnchip.calibration`` to
regenerate ``data/calibrated_chip.json``.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .chip import analytic_visibilities, offset_for_voltage, pattern_probabilities
from .config import ChipConfig, dump_config
from .phasematch import calibrate_offset, get_model

TARGET_VISIBILITIES = (0.989, 0.975, 0.884)
TARGET_HOM_VISIBILITY = 0.929
C1_RATIO = 0.54
U_OFFSET = 2.3


def _with(config: ChipConfig, **changes) -> ChipConfig:
    return ChipConfig.model_validate({**config.model_dump(mode="json"), **changes})


def fit_arm_ratio_and_jitter(base: ChipConfig, targets=TARGET_VISIBILITIES):
    """Least-squares (|alpha/beta|, coupler-angle jitter) against fringe visibilities."""

    def model(params):
        ratio, jitter = params
        cfg = _with(base, arm_amplitudes=[ratio, 1.0], coupler_angle_noise=abs(jitter))
        return np.array(analytic_visibilities(cfg))

    res = least_squares(lambda p: model(p) - np.asarray(targets), x0=[1.2, 0.05],
                        bounds=([0.2, 0.0], [5.0, 0.5]), xtol=1e-12, ftol=1e-12)
    ratio, jitter = res.x
    return float(ratio), float(jitter), model(res.x)


def hom_overlap_for(p_separated: float, target: float = TARGET_HOM_VISIBILITY) -> float:
    """Mode overlap m giving ratio-convention dip visibility ``target``.

    Dip floor C(0) = (1 - p m)/2 against wings 1/2 gives V = p m / (2 - p m).
    """
    m = 2 * target / ((1 + target) * p_separated)
    return min(m, 1.0)


def calibrated_config() -> ChipConfig:
    base = ChipConfig(coupler_c1_ratio=C1_RATIO)
    phase_offset = offset_for_voltage(base.electrode, U_OFFSET)
    base = _with(base, phase_offset=phase_offset,
                 wavelength_offset=calibrate_offset(get_model(base.sellmeier_model),
                                                    base.poling_period, base.temperature))
    ratio, jitter, _ = fit_arm_ratio_and_jitter(base)
    cfg = _with(base, arm_amplitudes=[ratio, 1.0], coupler_angle_noise=jitter)
    p_sep = pattern_probabilities(cfg, U_OFFSET).separated
    return _with(cfg, hom_mode_overlap=hom_overlap_for(p_sep))


def ideal_config() -> ChipConfig:
    base = ChipConfig()
    return _with(base, wavelength_offset=calibrate_offset(get_model(base.sellmeier_model),
                                                          base.poling_period, base.temperature),
                 detector={"efficiency": [1.0, 1.0], "dark_rate": 0.0, "coincidence_window": 1.0})


def main():
    data = Path(str(resources.files("lnchip.data")))
    cal = calibrated_config()
    (data / "calibrated_chip.json").write_text(dump_config(cal))
    (data / "ideal_chip.json").write_text(dump_config(ideal_config()))
    vis = analytic_visibilities(cal)
    print("arm ratio |alpha/beta| = %.6f" % abs(cal.arm_amplitudes[0] / cal.arm_amplitudes[1]))
    print("coupler angle jitter   = %.6f rad" % cal.coupler_angle_noise)
    print("visibilities           = " + ", ".join("%.4f" % v for v in vis))
    print("hom mode overlap       = %.6f" % cal.hom_mode_overlap)
    print("phase offset           = %.6f rad" % cal.phase_offset)
    print("wavelength offset      = %.6f nm" % cal.wavelength_offset)


if __name__ == "__main__":
    main()
