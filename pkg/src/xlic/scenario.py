"""End-to-end dataset factory for canceller training and evaluation.

Composes waveform -> RF chain -> channel (-> AWGN -> ADC) into aligned
(transmit data, received interference) records, with max-abs
normalization constants computed on the training partition, an 80/20
train/test split, and bit-exact persistence in the shared container
format.

Alignment convention: ``rx[:, n]`` depends on ``tx[:, n - m]`` for
``m in [0, window_depth)`` where ``window_depth = pa_memory + n_paths``.
Generation simulates ``window_depth - 1`` extra leading samples and drops
them from both streams, so no stored label depends on zero pre-history.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import container
from .channel import draw_channel, propagate, add_awgn, quantize_adc, calibrate_channel_gain
from .channel import MultipathChannel
from .config import ScenarioSettings, derive_rng
from .rf_chain import transmit_chain
from .waveform import generate_ofdm

DATASET_KIND = "dataset"


@dataclass(frozen=True)
class CliDataset:
    """Aligned cross-link-interference records.

    Attributes
    ----------
    tx : np.ndarray
        Transmit baseband data, shape ``(n_tx, n)`` (backhaul-shared, not
        quantized).
    rx : np.ndarray
        Received interference labels, shape ``(n_rx, n)`` (measured through
        the victim receiver: AWGN and ADC applied when enabled).
    input_scale : float
        Max |tx| over the training partition (normalizer for canceller
        inputs).
    label_scale : float
        Max |rx| over the training partition (normalizer for canceller
        labels).
    split_index : int
        First test sample index (``floor(train_fraction * n)``).
    window_depth : int
        Memory depth of the generating chain (PA memory + path count);
        regressor windows use this many taps per antenna.
    meta : dict
        Generating config, seed, and derived calibration values.
    """

    tx: np.ndarray = field(repr=False)
    rx: np.ndarray = field(repr=False)
    input_scale: float
    label_scale: float
    split_index: int
    window_depth: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tx.ndim != 2 or self.rx.ndim != 2:
            raise ValueError("tx and rx must be 2-D (antenna, sample) arrays")
        if self.tx.shape[1] != self.rx.shape[1]:
            raise ValueError(
                f"tx and rx lengths differ: {self.tx.shape[1]} vs {self.rx.shape[1]}"
            )
        if not (0 < self.split_index < self.tx.shape[1]):
            raise ValueError(f"split_index {self.split_index} out of range")
        if not (self.input_scale > 0 and self.label_scale > 0):
            raise ValueError("normalization constants must be > 0")

    @property
    def n_tx(self) -> int:
        return self.tx.shape[0]

    @property
    def n_rx(self) -> int:
        return self.rx.shape[0]

    @property
    def n_samples(self) -> int:
        return self.tx.shape[1]


def generate_dataset(
    scenario: ScenarioSettings,
    seed: int,
    channel: MultipathChannel | None = None,
) -> CliDataset:
    """Simulate one clean-period capture and package it as a dataset.

    Deterministic given ``seed``. ``channel`` overrides the random draw
    (used for controlled tests and ablations); when provided it is still
    calibrated to the target received power unless calibration is
    disabled.
    """
    depth = scenario.window_depth
    n_transient = depth - 1
    n_raw = scenario.n_samples + n_transient
    if scenario.n_samples <= depth:
        raise ValueError(
            f"n_samples ({scenario.n_samples}) must exceed the window depth ({depth})"
        )

    tx = generate_ofdm(
        scenario.ofdm.build(),
        scenario.n_tx,
        n_raw,
        scenario.tx_power_dbm,
        derive_rng(seed, "waveform"),
    )
    amplified = transmit_chain(tx, scenario.iq_models(), scenario.pa_models())

    if channel is None:
        channel = draw_channel(
            derive_rng(seed, "channel"),
            scenario.n_rx,
            scenario.n_tx,
            scenario.n_paths,
            scenario.pathloss(),
        )
    elif (channel.n_rx, channel.n_tx) != (scenario.n_rx, scenario.n_tx):
        raise ValueError(
            f"injected channel is {channel.n_rx}x{channel.n_tx}, "
            f"scenario expects {scenario.n_rx}x{scenario.n_tx}"
        )
    channel_scale = 1.0
    if scenario.target_rx_power_dbm is not None:
        target = scenario.target_rx_power_dbm
        if scenario.target_rx_power_total:
            target -= 10.0 * np.log10(scenario.n_rx)
        channel, channel_scale = calibrate_channel_gain(channel, amplified, target)

    rx = propagate(amplified, channel)
    rx = add_awgn(rx, scenario.noise(), derive_rng(seed, "noise"))

    full_scale = scenario.adc_full_scale
    if scenario.adc_enabled:
        if full_scale is None:
            peak = max(np.abs(rx.real).max(), np.abs(rx.imag).max())
            full_scale = scenario.adc_headroom * float(peak)
        rx = quantize_adc(rx, scenario.adc(full_scale))

    tx = tx[:, n_transient:]
    rx = rx[:, n_transient:]
    split = int(np.floor(scenario.train_fraction * tx.shape[1]))

    return CliDataset(
        tx=tx,
        rx=rx,
        input_scale=float(np.abs(tx[:, :split]).max()),
        label_scale=float(np.abs(rx[:, :split]).max()),
        split_index=split,
        window_depth=depth,
        meta={
            "seed": seed,
            "scenario": dataclasses.asdict(scenario),
            "channel_scale": channel_scale,
            "adc_full_scale": full_scale,
        },
    )


def build_regressors(tx: np.ndarray, depth: int) -> np.ndarray:
    """Stack per-antenna delay lines into real regressor windows.

    One window per sample index ``n >= depth - 1``; window ``w`` (for
    sample ``n = w + depth - 1``) is laid out antenna-major:

        [Re(d_a[n]), Im(d_a[n]), Re(d_a[n-1]), Im(d_a[n-1]), ...,
         Re(d_a[n-depth+1]), Im(d_a[n-depth+1])]   for a = 0 .. n_tx-1

    Returns shape ``(n - depth + 1, 2 * n_tx * depth)`` float64.
    """
    tx = np.atleast_2d(np.asarray(tx, dtype=np.complex128))
    n_tx, n = tx.shape
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if depth > n:
        raise ValueError(f"depth {depth} exceeds stream length {n}")
    n_windows = n - depth + 1
    out = np.empty((n_windows, 2 * n_tx * depth))
    for a in range(n_tx):
        for m in range(depth):
            seg = tx[a, depth - 1 - m : n - m]
            base = 2 * (a * depth + m)
            out[:, base] = seg.real
            out[:, base + 1] = seg.imag
    return out


def normalize(x: np.ndarray, scale: float) -> np.ndarray:
    """Divide by a positive max-abs constant (no clipping)."""
    if not (scale > 0):
        raise ValueError(f"normalization constant must be > 0, got {scale}")
    return np.asarray(x) / scale


def denormalize(y: np.ndarray, scale: float) -> np.ndarray:
    """Inverse of :func:`normalize`."""
    if not (scale > 0):
        raise ValueError(f"normalization constant must be > 0, got {scale}")
    return np.asarray(y) * scale


def save_dataset(ds: CliDataset, path) -> None:
    meta = {
        "input_scale": ds.input_scale,
        "label_scale": ds.label_scale,
        "split_index": ds.split_index,
        "window_depth": ds.window_depth,
        "meta": ds.meta,
    }
    container.write_container(path, DATASET_KIND, meta, {"tx": ds.tx, "rx": ds.rx})


def load_dataset(path) -> CliDataset:
    _, meta, arrays = container.read_container(path, expected_kind=DATASET_KIND)
    return CliDataset(
        tx=arrays["tx"],
        rx=arrays["rx"],
        input_scale=meta["input_scale"],
        label_scale=meta["label_scale"],
        split_index=meta["split_index"],
        window_depth=meta["window_depth"],
        meta=meta["meta"],
    )
