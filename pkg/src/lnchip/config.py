"""JSON chip configuration.

Units are fixed per field (see ``Field`` descriptions); unknown keys are
rejected. Complex amplitudes are written as ``[re, im]`` pairs or plain reals.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ElectrodeGeometry(_Strict):
    fill_factor: float = Field(0.5, gt=0, le=1, description="field/mode overlap Gamma, dimensionless")
    eo_coefficient: float = Field(30.8, gt=0, description="gamma_33 in pm/V")
    pump_index: float = Field(2.178, gt=0, description="extraordinary pump index n_p")
    electrode_length: float = Field(5.0, gt=0, description="electrode length L in mm")
    electrode_gap: float = Field(10.0, gt=0, description="electrode separation d in um")
    pump_wavelength: float = Field(780.0, gt=0, description="pump wavelength in nm")


class DetectorModel(_Strict):
    efficiency: tuple[float, float] = Field((0.1, 0.1), description="R1 and R4 detector efficiencies")
    dark_rate: float = Field(100.0, ge=0, description="dark counts per detector, Hz")
    coincidence_window: float = Field(1.0, gt=0, description="coincidence window tau_w, ns")

    @field_validator("efficiency")
    @classmethod
    def _bounded(cls, v):
        if not all(0.0 <= e <= 1.0 for e in v):
            raise ValueError("detector efficiency must lie in [0, 1]")
        return v


class FilterConfig(_Strict):
    center: float = Field(1560.0, gt=0, description="filter center wavelength, nm")
    bandwidth: float = Field(14.0, gt=0, description="filter FWHM, nm")
    shape: Literal["gaussian", "tophat"] = "gaussian"


def _to_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError("complex values are written as [re, im]")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(v)


class ChipConfig(_Strict):
    """Full chip parameterization. Defaults describe an ideal chip."""

    electrode: ElectrodeGeometry = ElectrodeGeometry()
    coupler_c1_ratio: float = Field(0.5, ge=0, le=1, description="C1 power cross-coupling T")
    filter_c2_efficiency: float = Field(1.0, ge=0, le=1, description="C2/C2' per-photon transfer efficiency")
    arm_amplitudes: tuple[complex, complex] = Field(
        (2 ** -0.5, 2 ** -0.5), description="pair amplitudes (alpha, beta) of waveguides 2 and 3"
    )
    phase_offset: float = Field(0.0, description="static path phase phi_0, rad")
    poling_period: float = Field(15.32, gt=0, description="poling period, um")
    crystal_length: float = Field(10.0, gt=0, description="poled section length, mm")
    temperature: float = Field(25.5, description="chip temperature, C")
    pump_power_in_fiber: float = Field(39.0, ge=0, description="pump power in the input fiber, uW")
    fiber_coupling_efficiency: float = Field(0.8, ge=0, le=1, description="fiber-to-chip pump coupling")

    phase_noise: float = Field(0.0, ge=0, description="rms pump-phase jitter between arms, rad")
    coupler_angle_noise: float = Field(0.0, ge=0, description="rms jitter of the C1 coupling angle, rad")
    sellmeier_model: str = "jundt1997_congruent_e"
    wavelength_offset: float = Field(143.47639843441357, description="bulk-to-waveguide SHG wavelength shift, nm")
    brightness: float = Field(1.4e7, ge=0, description="pair brightness, Hz nm^-1 mW^-1")
    hom_mode_overlap: float = Field(1.0, ge=0, le=1, description="mode overlap on the external HOM splitter")
    detector: DetectorModel = DetectorModel()
    filter: FilterConfig = FilterConfig()

    @field_validator("arm_amplitudes", mode="before")
    @classmethod
    def _parse_amplitudes(cls, v):
        if len(v) != 2:
            raise ValueError("arm_amplitudes needs exactly two entries")
        alpha, beta = (_to_complex(x) for x in v)
        norm = (abs(alpha) ** 2 + abs(beta) ** 2) ** 0.5
        if norm == 0:
            raise ValueError("arm amplitudes cannot both be zero")
        return (alpha / norm, beta / norm)

    @field_serializer("arm_amplitudes")
    def _dump_amplitudes(self, v):
        return [[c.real, c.imag] for c in v]

    @model_validator(mode="after")
    def _temperature_in_range(self):
        from .phasematch import get_model

        model = get_model(self.sellmeier_model)
        lo, hi = model.temperature_range_c
        if not lo <= self.temperature <= hi:
            raise ValueError(f"temperature {self.temperature} C outside {model.name} range {lo}-{hi} C")
        return self

    @property
    def coupled_pump_power_mw(self) -> float:
        return self.pump_power_in_fiber * self.fiber_coupling_efficiency * 1e-3

    @property
    def pair_rate(self) -> float:
        """Generated pair rate inside the filter band, Hz."""
        return self.brightness * self.coupled_pump_power_mw * self.filter.bandwidth


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> ChipConfig:
    try:
        text = Path(path).read_text()
        return ChipConfig.model_validate_json(text)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def builtin_config_text(name: str) -> str:
    return resources.files("lnchip.data").joinpath(f"{name}_chip.json").read_text()


def builtin_config(name: str = "calibrated") -> ChipConfig:
    return ChipConfig.model_validate_json(builtin_config_text(name))


def dump_config(config: ChipConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()
