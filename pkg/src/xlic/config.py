"""Run configuration: JSON schema, defaults, validation and seed derivation.

A run config is a plain JSON document with a ``schema_version`` field and
three sections (``scenario``, ``canceller``, ``training``) mirrored by the
dataclasses below. Defaults reproduce the reference simulation setup
(4x4 antennas, 47 dBm transmit / -52.1 dBm received interference power,
-90 dBm AWGN, 12-bit ADC, OFDM at 120 MHz sample rate, 50000 samples,
80/20 split, PA memory 2, 7 multipath components, canceller order 3,
Adam with batch 32 and learning rate 2e-4).

All randomness in a run flows from the single root ``seed``: per-purpose
generators are derived with ``derive_rng(root, label, ...)``, which seeds
``numpy.random.SeedSequence`` with ``(root, crc32(label), ...)``. The
purpose labels used by the pipeline are "waveform", "channel", "noise",
"init" and "shuffle" (the last two salted with the canceller id).
"""

from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .channel import AdcConfig, NoiseModel, PathLossModel
from .rf_chain import IqImbalance, PaModel
from .waveform import OfdmConfig

SCHEMA_VERSION = 1

DEFAULT_PA_TAPS = [
    [[1.0, 0.0], [0.05, 0.0], [0.01, 0.0]],
    [[-0.06, -0.015], [-0.0075, 0.0], [-0.00375, 0.0]],
]


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


def _rescale_pa(pa: PaModel, drive_rms: float) -> PaModel:
    """Move PA taps from their unit-power design point to the operating drive.

    Order-p taps scale by ``drive_rms**(1-p)``: linear taps are untouched
    and the branch output ratios at the operating point match the ratios
    of the design point.
    """
    scale = np.array([drive_rms ** (1 - p) for p in pa.branch_orders])
    return PaModel(order=pa.order, memory=pa.memory, taps=pa.taps * scale[:, None])


def derive_rng(root_seed: int, *labels) -> np.random.Generator:
    """Derive a per-purpose generator from the root seed.

    Entropy is ``(root_seed, crc32(label_0), crc32(label_1), ...)`` fed to
    ``SeedSequence``; stable across platforms and runs. Integer labels are
    used as-is.
    """
    keys = [int(root_seed)]
    for label in labels:
        keys.append(label if isinstance(label, int) else zlib.crc32(str(label).encode()))
    return np.random.default_rng(np.random.SeedSequence(keys))


@dataclass
class IqSettings:
    gain: float = 1.05
    phase_rad: float = 0.05

    def build(self) -> IqImbalance:
        return IqImbalance(gain=self.gain, phase_rad=self.phase_rad)


@dataclass
class PaSettings:
    order: int = 3
    memory: int = 2
    # complex taps as [re, im] pairs: taps[branch][lag]
    taps: list = field(default_factory=lambda: [list(b) for b in DEFAULT_PA_TAPS])

    def build(self) -> PaModel:
        taps = np.array(
            [[complex(re, im) for re, im in branch] for branch in self.taps]
        )
        return PaModel(order=self.order, memory=self.memory, taps=taps)


@dataclass
class OfdmSettings:
    fft_size: int = 1024
    occupied_subcarriers: int = 111
    cp_len: int = 72
    qam_order: int = 16
    sample_rate_hz: float = 120e6
    bandwidth_hz: float = 13e6

    def build(self) -> OfdmConfig:
        return OfdmConfig(**dataclasses.asdict(self))


@dataclass
class ScenarioSettings:
    n_rx: int = 4
    n_tx: int = 4
    n_paths: int = 7
    n_samples: int = 50000
    train_fraction: float = 0.8
    tx_power_dbm: float = 47.0
    # None disables the received-power calibration of the channel.
    target_rx_power_dbm: float | None = -52.1
    # When true, the target counts the power summed over rx antennas
    # instead of the per-antenna mean.
    target_rx_power_total: bool = False
    awgn_power_dbm: float = -90.0
    noise_enabled: bool = True
    adc_enabled: bool = True
    adc_bits: int = 12
    # None: derived at generation time as adc_headroom * peak rail amplitude.
    adc_full_scale: float | None = None
    adc_headroom: float = 1.2
    pathloss_distance_m: float = 1.0
    pathloss_exponent: float = 0.0
    # PA taps are specified for a unit-average-power drive; when true, the
    # order-p taps are rescaled by drive_rms**(1-p) so the distortion-to-
    # signal ratio is independent of the absolute transmit level.
    pa_taps_at_unit_power: bool = True
    # Single entry shared by all antennas, or one entry per tx antenna.
    iq: IqSettings | list = field(default_factory=IqSettings)
    pa: PaSettings | list = field(default_factory=PaSettings)
    ofdm: OfdmSettings = field(default_factory=OfdmSettings)

    def __post_init__(self):
        for name in ("n_rx", "n_tx", "n_paths", "n_samples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"scenario.{name}: must be >= 1")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError("scenario.train_fraction: must be in (0, 1)")
        if self.adc_headroom < 1.0:
            raise ConfigError("scenario.adc_headroom: must be >= 1")

    def iq_models(self) -> list[IqImbalance]:
        items = self.iq if isinstance(self.iq, list) else [self.iq] * self.n_tx
        if len(items) != self.n_tx:
            raise ConfigError(
                f"scenario.iq: expected 1 or {self.n_tx} entries, got {len(items)}"
            )
        return [item.build() for item in items]

    def pa_models(self) -> list[PaModel]:
        items = self.pa if isinstance(self.pa, list) else [self.pa] * self.n_tx
        if len(items) != self.n_tx:
            raise ConfigError(
                f"scenario.pa: expected 1 or {self.n_tx} entries, got {len(items)}"
            )
        models = [item.build() for item in items]
        if self.pa_taps_at_unit_power:
            drive_rms = np.sqrt(10.0 ** ((self.tx_power_dbm - 30.0) / 10.0))
            models = [_rescale_pa(m, drive_rms) for m in models]
        return models

    def pathloss(self) -> PathLossModel:
        return PathLossModel(self.pathloss_distance_m, self.pathloss_exponent)

    def noise(self) -> NoiseModel:
        return NoiseModel(self.awgn_power_dbm if self.noise_enabled else -np.inf)

    def adc(self, full_scale: float) -> AdcConfig:
        return AdcConfig(bits=self.adc_bits, full_scale=full_scale)

    @property
    def max_pa_memory(self) -> int:
        items = self.pa if isinstance(self.pa, list) else [self.pa]
        return max(item.memory for item in items)

    @property
    def window_depth(self) -> int:
        """Regressor depth: PA memory plus multipath count."""
        return self.max_pa_memory + self.n_paths


@dataclass
class CancellerSettings:
    order: int = 3  # polynomial canceller nonlinearity order
    nnc_hidden: int = 300
    hc_hidden: int = 200


@dataclass
class TrainSettings:
    batch_size: int = 32
    learning_rate: float = 2e-4
    epochs: int = 60
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int | None = None  # None: derived from the run's root seed

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("training.batch_size: must be >= 1")
        # lr = 0 is allowed: it freezes the model (useful as a null check)
        if not (self.learning_rate >= 0):
            raise ConfigError("training.learning_rate: must be >= 0")
        if self.epochs < 1:
            raise ConfigError("training.epochs: must be >= 1")


@dataclass
class RunConfig:
    seed: int = 1
    scenario: ScenarioSettings = field(default_factory=ScenarioSettings)
    canceller: CancellerSettings = field(default_factory=CancellerSettings)
    training: TrainSettings = field(default_factory=TrainSettings)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        out.update(dataclasses.asdict(self))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root: expected a JSON object")
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version: {version} not supported (expected {SCHEMA_VERSION})"
            )
        return cls(
            seed=_expect_int(data, "seed", default=1),
            scenario=_build(ScenarioSettings, data.pop("scenario", {}), "scenario"),
            canceller=_build(CancellerSettings, data.pop("canceller", {}), "canceller"),
            training=_build(TrainSettings, data.pop("training", {}), "training"),
            **_reject_unknown(data, "config"),
        )


def _reject_unknown(data: dict, where: str) -> dict:
    if data:
        raise ConfigError(f"{where}: unknown field '{sorted(data)[0]}'")
    return {}


def _expect_int(data: dict, key: str, default: int) -> int:
    value = data.pop(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _build(cls, data, where: str):
    """Construct a settings dataclass from a dict, naming bad fields."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    data = dict(data)
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data.pop(f.name)
        if f.name in ("iq", "pa"):
            sub = IqSettings if f.name == "iq" else PaSettings
            if isinstance(value, list) and value and isinstance(value[0], dict):
                value = [_build(sub, v, f"{where}.{f.name}[{i}]") for i, v in enumerate(value)]
            elif isinstance(value, dict):
                value = _build(sub, value, f"{where}.{f.name}")
            else:
                raise ConfigError(f"{where}.{f.name}: expected an object or list of objects")
        elif f.name == "ofdm":
            value = _build(OfdmSettings, value, f"{where}.ofdm")
        kwargs[f.name] = value
    _reject_unknown(data, where)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
