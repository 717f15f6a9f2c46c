"""Scenario parameters and unit helpers.

Everything is stored in linear SI units (W, Hz, m); dB values only appear
for antenna-pattern parameters, which are naturally specified in dB.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(w):
    return 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and algorithmic parameters of one HAPS deployment.

    Defaults reproduce the reference setup: 60 UEs over 10 RBs, a HAPS at
    20 km covering a 2 km disk at 2.545 GHz with an 8x8 UPA, 55 dBm total
    power and -100 dBm noise.  ``bandwidth`` defaults to 1 Hz so that rates
    read directly as spectral efficiency in b/s/Hz.
    """

    num_ues: int = 60
    num_rbs: int = 10
    haps_altitude: float = 20_000.0
    coverage_radius: float = 2_000.0
    carrier_freq: float = 2.545e9
    bandwidth: float = 1.0
    noise_power: float = float(dbm_to_watt(-100.0))
    total_power: float = float(dbm_to_watt(55.0))
    array_nx: int = 8
    array_ny: int = 8
    element_spacing: float = 0.5  # wavelengths
    element_gain_max: float = 8.0  # dBi
    beamwidth_3db: float = 65.0  # degrees, full width
    front_to_back: float = 30.0  # dB
    sla_v: float = 30.0  # dB
    sca_max_iters: int = 20
    sca_tol: float = 1e-3
    rng_seed: int = 0
    kmeans_max_iters: int = 100
    steer_resolution_deg: float = 0.05
    steer_padding_deg: float = 0.5

    def __post_init__(self):
        if self.num_ues < 1 or self.num_rbs < 1:
            raise ConfigError("num_ues and num_rbs must be >= 1")
        for name in ("haps_altitude", "carrier_freq", "bandwidth", "noise_power", "total_power"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.coverage_radius < 0:
            raise ConfigError("coverage_radius must be non-negative")
        if self.array_nx < 1 or self.array_ny < 1:
            raise ConfigError("array dimensions must be >= 1")
        if self.element_spacing <= 0 or self.front_to_back <= 0 or self.sla_v <= 0:
            raise ConfigError("element_spacing, front_to_back and sla_v must be positive")
        if self.beamwidth_3db <= 0:
            raise ConfigError("beamwidth_3db must be positive")
        if self.sca_max_iters < 1 or self.sca_tol < 0:
            raise ConfigError("invalid SCA stopping parameters")
        if self.steer_resolution_deg <= 0 or self.steer_padding_deg < 0:
            raise ConfigError("invalid steering grid parameters")

    @property
    def num_clusters(self):
        return -(-self.num_ues // self.num_rbs)

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_freq

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


def _coerce(f: dataclasses.Field, raw: str):
    value = float(raw)
    if f.type is int:
        if not value.is_integer():
            raise ValueError("expected an integer")
        return int(value)
    return value


def load_config(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read ``key = value`` overrides from a file.

    Keys are ScenarioConfig field names; ``#`` and ``;`` start comments.
    An optional ``[scenario]`` section header is accepted.
    """
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[scenario]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string(text)
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    overrides = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                overrides[key] = _coerce(fields[key], raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return dataclasses.replace(base or ScenarioConfig(), **overrides)
