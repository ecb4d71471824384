"""BS-to-BS multipath MIMO channel, noise, ADC quantization and power helpers.

The channel between the interfering and the interfered base station is a
bank of FIR filters, one per (rx, tx) antenna pair, with Rayleigh
(circularly-symmetric complex Gaussian) taps and optional path-loss
scaling. The receive side adds AWGN at a configured power and quantizes
each rail with a mid-rise ADC. Power values are in dBm throughout, with
the linear unit treated as watts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PathLossModel:
    """Deterministic large-scale scaling ``distance**(-exponent/2)`` per tap.

    ``distance`` may be a scalar (shared by all paths) or a length-L
    sequence of per-path distances in meters.
    """

    distance: float | tuple[float, ...] = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        dist = np.atleast_1d(np.asarray(self.distance, dtype=float))
        if np.any(dist <= 0):
            raise ValueError("path distances must be > 0")
        if self.exponent < 0:
            raise ValueError("path-loss exponent must be >= 0")

    def amplitude_scale(self, n_paths: int) -> np.ndarray:
        dist = np.atleast_1d(np.asarray(self.distance, dtype=float))
        if dist.size == 1:
            dist = np.full(n_paths, dist[0])
        elif dist.size != n_paths:
            raise ValueError(f"{dist.size} distances for {n_paths} paths")
        return dist ** (-self.exponent / 2.0)


@dataclass(frozen=True)
class NoiseModel:
    """AWGN at a fixed total power in dBm; ``-inf`` disables the noise."""

    power_dbm: float = -90.0

    def __post_init__(self):
        if np.isnan(self.power_dbm) or self.power_dbm == np.inf:
            raise ValueError("noise power must be finite or -inf")


@dataclass(frozen=True)
class AdcConfig:
    """Uniform mid-rise quantizer: ``2**bits`` levels over +/- full_scale."""

    bits: int = 12
    full_scale: float = 1.0

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError(f"ADC bits must be >= 1, got {self.bits}")
        if not (self.full_scale > 0):
            raise ValueError(f"ADC full_scale must be > 0, got {self.full_scale}")

    @property
    def step(self) -> float:
        return 2.0 * self.full_scale / (2**self.bits)


@dataclass(frozen=True)
class MultipathChannel:
    """FIR MIMO channel: ``taps[rx, tx, lag]`` complex gains."""

    taps: np.ndarray = field(repr=False)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 3:
            raise ValueError(f"channel taps must be 3-D (rx, tx, lag), got {taps.ndim}-D")
        if not np.all(np.isfinite(taps)):
            raise ValueError("channel taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def n_rx(self) -> int:
        return self.taps.shape[0]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[1]

    @property
    def n_paths(self) -> int:
        return self.taps.shape[2]

    def scaled(self, factor: float) -> "MultipathChannel":
        return MultipathChannel(self.taps * factor)


def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


def watts_to_dbm(power_watts: float) -> float:
    if power_watts <= 0:
        return -np.inf
    return 10.0 * np.log10(power_watts) + 30.0


def measure_power_dbm(x: np.ndarray) -> float:
    """Mean-square power of ``x`` in dBm (linear unit = watts).

    For a multi-antenna array this is the per-antenna average, since every
    antenna contributes the same number of samples.
    """
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("cannot measure power of an empty sequence")
    return watts_to_dbm(float(np.mean(np.abs(x) ** 2)))


def draw_channel(
    seed,
    n_rx: int,
    n_tx: int,
    n_paths: int,
    pathloss: PathLossModel | None = None,
) -> MultipathChannel:
    """Draw i.i.d. Rayleigh taps ``CN(0, 1)`` scaled by the path-loss model.

    ``seed`` may be an int or a ``numpy.random.Generator``; an int gives a
    reproducible draw.
    """
    if n_rx < 1 or n_tx < 1 or n_paths < 1:
        raise ValueError(
            f"channel dimensions must be >= 1, got ({n_rx}, {n_tx}, {n_paths})"
        )
    rng = np.random.default_rng(seed)
    fading = (
        rng.standard_normal((n_rx, n_tx, n_paths))
        + 1j * rng.standard_normal((n_rx, n_tx, n_paths))
    ) / np.sqrt(2.0)
    scale = (pathloss or PathLossModel()).amplitude_scale(n_paths)
    return MultipathChannel(fading * scale)


def propagate(tx: np.ndarray, channel: MultipathChannel) -> np.ndarray:
    """Convolve per-antenna transmit streams through the FIR MIMO channel.

    ``tx`` has shape ``(n_tx, n)``; returns ``(n_rx, n)`` with zero-padded
    pre-history (output index n sums taps over lags l <= n).
    """
    tx = np.atleast_2d(np.asarray(tx, dtype=np.complex128))
    if tx.shape[0] != channel.n_tx:
        raise ValueError(
            f"tx has {tx.shape[0]} antenna streams, channel expects {channel.n_tx}"
        )
    n = tx.shape[1]
    rx = np.zeros((channel.n_rx, n), dtype=np.complex128)
    for i in range(channel.n_rx):
        for a in range(channel.n_tx):
            rx[i] += np.convolve(tx[a], channel.taps[i, a])[:n]
    return rx


def add_awgn(x: np.ndarray, noise: NoiseModel, seed) -> np.ndarray:
    """Add circularly-symmetric complex AWGN with the configured total power."""
    x = np.asarray(x, dtype=np.complex128)
    if noise.power_dbm == -np.inf:
        return x.copy()
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(dbm_to_watts(noise.power_dbm) / 2.0)
    w = sigma * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    return x + w


def quantize_adc(x: np.ndarray, adc: AdcConfig) -> np.ndarray:
    """Quantize I and Q rails with a uniform mid-rise quantizer.

    Levels sit at odd multiples of ``step/2`` inside +/- full_scale;
    inputs beyond full scale saturate at the outermost level. There is no
    zero level: a zero input lands on ``+step/2`` on each rail.
    """
    x = np.asarray(x, dtype=np.complex128)
    step = adc.step
    top = adc.full_scale - step / 2.0

    def rail(u):
        q = (np.floor(u / step) + 0.5) * step
        return np.clip(q, -top, top)

    return rail(x.real) + 1j * rail(x.imag)


def calibrate_channel_gain(
    channel: MultipathChannel,
    probe_tx: np.ndarray,
    target_rx_power_dbm: float,
) -> tuple[MultipathChannel, float]:
    """Scale the channel so the probe's mean received power hits the target.

    ``probe_tx`` is the transmit-chain output (per-antenna streams) used
    to measure the received power; one global real factor is applied to
    every tap. Returns ``(scaled_channel, factor)``. The closed loop
    ``measure_power_dbm(propagate(probe_tx, scaled))`` lands on the target
    to float precision, well inside the +/-0.05 dB contract.
    """
    probe_tx = np.atleast_2d(np.asarray(probe_tx, dtype=np.complex128))
    if not np.any(probe_tx):
        raise ValueError("calibration probe has zero energy")
    measured = measure_power_dbm(propagate(probe_tx, channel))
    factor = 10.0 ** ((target_rx_power_dbm - measured) / 20.0)
    return channel.scaled(factor), factor
