"""Canceller orchestration: fit/train on a dataset, score on its test split.

Four cancellers share one evaluation protocol: estimate on the training
partition, reconstruct the interference over the test partition, report
the cancellation ratio

    C_dB = 10 log10( sum |s|^2 / sum |s - s_hat|^2 )

summed over rx antennas and the whole test window, together with the
residual power in dBm and the canceller's parameter/complexity counts.

    tc   linear FIR identification (CSI-style reconstruction)
    pc   full conjugate-monomial basis of the configured order
    nnc  feedforward network mapping regressor windows to I/Q outputs
    hc   tc first, then a network trained on the stage-1 residual

A perfectly cancelled window (zero residual) is reported as "above
measurable range" (infinite ratio) rather than a number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import measure_power_dbm
from .config import TrainSettings, derive_rng
from .fnn import FnnModel, forward, nnc_complexity, nnc_param_count, train
from .polynomial import (
    BasisSpec,
    apply_basis,
    build_basis_matrix,
    ls_fit,
    pc_complexity,
    pc_param_count,
    tc_complexity,
    tc_param_count,
)
from .scenario import CliDataset, build_regressors

CANCELLERS = ("tc", "pc", "nnc", "hc")


def cancellation_db(s: np.ndarray, s_hat: np.ndarray) -> float:
    """Interference-to-residual power ratio in dB over a common window.

    Returns ``inf`` for an exactly zero residual ("above measurable
    range"). Requires nonzero interference power.
    """
    s = np.asarray(s)
    s_hat = np.asarray(s_hat)
    if s.shape != s_hat.shape:
        raise ValueError(f"shape mismatch: {s.shape} vs {s_hat.shape}")
    signal = float(np.sum(np.abs(s) ** 2))
    if signal == 0.0:
        raise ValueError("interference power is zero over the window")
    residual = float(np.sum(np.abs(s - s_hat) ** 2))
    if residual == 0.0:
        return np.inf
    return 10.0 * np.log10(signal / residual)


def residual_power_dbm(s: np.ndarray, s_hat: np.ndarray) -> float:
    """Power of the post-cancellation residual, in dBm."""
    return measure_power_dbm(np.asarray(s) - np.asarray(s_hat))


def hc_param_count(n_rx: int, n_tx: int, memory: int, n_paths: int, n_hidden: int) -> int:
    """Real parameters of the hybrid canceller (FIR stage plus network)."""
    return 2 * n_rx * n_tx * (memory + n_paths) + nnc_param_count(
        n_rx, n_tx, memory, n_paths, n_hidden
    )


def hc_complexity(n_rx: int, n_tx: int, memory: int, n_paths: int, n_hidden: int) -> int:
    """Real operations for one hybrid-canceller reconstruction."""
    return (
        8 * n_rx * n_tx * (memory + n_paths)
        - 2 * n_rx
        + nnc_complexity(n_rx, n_tx, memory, n_paths, n_hidden)
    )


@dataclass
class CancellerResult:
    """Score card for one canceller on one dataset."""

    canceller: str
    seed: int | None
    n_params: int
    complexity: int
    c_db: float | None = None
    residual_power_dbm: float | None = None
    rx_power_dbm: float | None = None
    noise_floor_dbm: float | None = None
    epochs: int | None = None
    best_epoch: int | None = None
    setting: int | None = None  # swept value (order or hidden width)
    train_losses: list[float] | None = field(default=None, repr=False)
    test_losses: list[float] | None = field(default=None, repr=False)
    c_db_history: list[float] | None = field(default=None, repr=False)
    artifacts: dict = field(default_factory=dict, repr=False)  # fitted objects

    @property
    def above_measurable_range(self) -> bool:
        return self.c_db is not None and np.isinf(self.c_db)


def _aligned_labels(ds: CliDataset) -> tuple[np.ndarray, int]:
    """Labels aligned with regressor/basis rows and the first test row."""
    labels = ds.rx[:, ds.window_depth - 1 :]
    split_row = ds.split_index - (ds.window_depth - 1)
    if split_row < 1 or split_row >= labels.shape[1]:
        raise ValueError("dataset split leaves an empty train or test partition")
    return labels, split_row


def interleave_iq(s: np.ndarray) -> np.ndarray:
    """Complex ``(n_rx, n)`` to real ``(n, 2*n_rx)``, I/Q interleaved."""
    s = np.atleast_2d(np.asarray(s, dtype=np.complex128))
    out = np.empty((s.shape[1], 2 * s.shape[0]))
    out[:, 0::2] = s.real.T
    out[:, 1::2] = s.imag.T
    return out


def deinterleave_iq(y: np.ndarray) -> np.ndarray:
    """Inverse of :func:`interleave_iq`."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    return (y[:, 0::2] + 1j * y[:, 1::2]).T


def _scenario_meta(ds: CliDataset) -> dict:
    return ds.meta.get("scenario", {}) if isinstance(ds.meta, dict) else {}


def _noise_floor(ds: CliDataset) -> float:
    meta = _scenario_meta(ds)
    if meta.get("noise_enabled", False):
        return float(meta.get("awgn_power_dbm", -np.inf))
    return -np.inf


def _score(
    canceller: str,
    ds: CliDataset,
    s_test: np.ndarray,
    s_hat: np.ndarray,
    n_params: int,
    complexity: int,
    **extra,
) -> CancellerResult:
    return CancellerResult(
        canceller=canceller,
        seed=ds.meta.get("seed") if isinstance(ds.meta, dict) else None,
        n_params=n_params,
        complexity=complexity,
        c_db=cancellation_db(s_test, s_hat),
        residual_power_dbm=residual_power_dbm(s_test, s_hat),
        rx_power_dbm=measure_power_dbm(s_test),
        noise_floor_dbm=_noise_floor(ds),
        **extra,
    )


def run_tc(ds: CliDataset, ridge: float = 0.0) -> CancellerResult:
    """Fit and score the linear (CSI-style) canceller."""
    labels, split_row = _aligned_labels(ds)
    spec = BasisSpec.linear(ds.n_tx, ds.window_depth)
    basis = build_basis_matrix(ds.tx, spec)
    coeffs = ls_fit(basis[:split_row], labels[:, :split_row], spec, ridge=ridge)
    s_hat = apply_basis(coeffs, basis[split_row:])
    # Only the sum memory+paths enters the counting formulas.
    return _score(
        "tc",
        ds,
        labels[:, split_row:],
        s_hat,
        tc_param_count(ds.n_rx, ds.n_tx, 0, ds.window_depth),
        tc_complexity(ds.n_rx, ds.n_tx, 0, ds.window_depth),
        artifacts={"coefficients": coeffs},
    )


def run_pc(ds: CliDataset, order: int = 3, ridge: float = 0.0) -> CancellerResult:
    """Fit and score the polynomial canceller of the given odd order."""
    labels, split_row = _aligned_labels(ds)
    spec = BasisSpec(n_tx=ds.n_tx, depth=ds.window_depth, order=order)
    basis = build_basis_matrix(ds.tx, spec)
    coeffs = ls_fit(basis[:split_row], labels[:, :split_row], spec, ridge=ridge)
    s_hat = apply_basis(coeffs, basis[split_row:])
    return _score(
        "pc",
        ds,
        labels[:, split_row:],
        s_hat,
        pc_param_count(ds.n_rx, ds.n_tx, 0, ds.window_depth, order),
        pc_complexity(ds.n_rx, ds.n_tx, 0, ds.window_depth, order),
        setting=order,
        artifacts={"coefficients": coeffs},
    )


def _train_seed(ds: CliDataset, canceller: str, cfg: TrainSettings, purpose: str):
    root = cfg.seed
    if root is None:
        root = ds.meta.get("seed", 0) if isinstance(ds.meta, dict) else 0
    return derive_rng(root, purpose, canceller)


def _c_db_history(signal_power: float, test_losses, scale: float, n_test: int):
    denom = np.asarray(test_losses) * n_test * scale**2
    with np.errstate(divide="ignore"):
        return list(10.0 * np.log10(signal_power / denom))


def run_nnc(ds: CliDataset, n_hidden: int, cfg: TrainSettings) -> CancellerResult:
    """Train and score the network canceller."""
    labels, split_row = _aligned_labels(ds)
    x = build_regressors(ds.tx, ds.window_depth) / ds.input_scale
    y = interleave_iq(labels) / ds.label_scale
    model = FnnModel.initialize(
        x.shape[1], n_hidden, y.shape[1], _train_seed(ds, "nnc", cfg, "init")
    )
    fit = train(
        model,
        x[:split_row],
        y[:split_row],
        x[split_row:],
        y[split_row:],
        cfg,
        shuffle_seed=_train_seed(ds, "nnc", cfg, "shuffle"),
    )
    s_test = labels[:, split_row:]
    pred = forward(fit.model, x[split_row:]) * ds.label_scale
    s_hat = deinterleave_iq(pred)
    signal_power = float(np.sum(np.abs(s_test) ** 2))
    return _score(
        "nnc",
        ds,
        s_test,
        s_hat,
        nnc_param_count(ds.n_rx, ds.n_tx, 0, ds.window_depth, n_hidden),
        nnc_complexity(ds.n_rx, ds.n_tx, 0, ds.window_depth, n_hidden),
        epochs=fit.epochs,
        best_epoch=fit.best_epoch,
        setting=n_hidden,
        train_losses=fit.train_losses,
        test_losses=fit.test_losses,
        c_db_history=_c_db_history(
            signal_power, fit.test_losses, ds.label_scale, s_test.shape[1]
        ),
        artifacts={
            "model": fit.model,
            "input_scale": ds.input_scale,
            "label_scale": ds.label_scale,
        },
    )


def run_hc(ds: CliDataset, n_hidden: int, cfg: TrainSettings) -> CancellerResult:
    """Train and score the hybrid canceller.

    Stage 1 is the linear fit of :func:`run_tc`; stage 2 trains the
    network on the stage-1 residual, normalized by the training-partition
    residual peak, and the final estimate is the sum of both stages.
    """
    labels, split_row = _aligned_labels(ds)
    spec = BasisSpec.linear(ds.n_tx, ds.window_depth)
    basis = build_basis_matrix(ds.tx, spec)
    coeffs = ls_fit(basis[:split_row], labels[:, :split_row], spec)
    s_lin = apply_basis(coeffs, basis)

    residual = labels - s_lin
    residual_scale = float(np.abs(residual[:, :split_row]).max())
    x = build_regressors(ds.tx, ds.window_depth) / ds.input_scale
    y = interleave_iq(residual) / residual_scale
    model = FnnModel.initialize(
        x.shape[1], n_hidden, y.shape[1], _train_seed(ds, "hc", cfg, "init")
    )
    fit = train(
        model,
        x[:split_row],
        y[:split_row],
        x[split_row:],
        y[split_row:],
        cfg,
        shuffle_seed=_train_seed(ds, "hc", cfg, "shuffle"),
    )
    s_test = labels[:, split_row:]
    pred = forward(fit.model, x[split_row:]) * residual_scale
    s_hat = s_lin[:, split_row:] + deinterleave_iq(pred)
    signal_power = float(np.sum(np.abs(s_test) ** 2))
    return _score(
        "hc",
        ds,
        s_test,
        s_hat,
        hc_param_count(ds.n_rx, ds.n_tx, 0, ds.window_depth, n_hidden),
        hc_complexity(ds.n_rx, ds.n_tx, 0, ds.window_depth, n_hidden),
        epochs=fit.epochs,
        best_epoch=fit.best_epoch,
        setting=n_hidden,
        train_losses=fit.train_losses,
        test_losses=fit.test_losses,
        c_db_history=_c_db_history(
            signal_power, fit.test_losses, residual_scale, s_test.shape[1]
        ),
        artifacts={
            "model": fit.model,
            "stage1": coeffs,
            "input_scale": ds.input_scale,
            "residual_scale": residual_scale,
        },
    )


def run_canceller(
    ds: CliDataset,
    canceller: str,
    order: int = 3,
    n_hidden: int = 300,
    train_cfg: TrainSettings | None = None,
) -> CancellerResult:
    """Dispatch by canceller id ("tc", "pc", "nnc" or "hc")."""
    if canceller == "tc":
        return run_tc(ds)
    if canceller == "pc":
        return run_pc(ds, order=order)
    if canceller in ("nnc", "hc"):
        cfg = train_cfg or TrainSettings()
        runner = run_nnc if canceller == "nnc" else run_hc
        return runner(ds, n_hidden, cfg)
    raise ValueError(f"unknown canceller '{canceller}' (expected one of {CANCELLERS})")


def _count_only(canceller, ds, n_params, complexity, setting) -> CancellerResult:
    return CancellerResult(
        canceller=canceller,
        seed=ds.meta.get("seed") if isinstance(ds.meta, dict) else None,
        n_params=n_params,
        complexity=complexity,
        setting=setting,
    )


def sweep(
    ds: CliDataset,
    axis: str,
    values,
    train_cfg: TrainSettings | None = None,
    with_performance: bool = True,
) -> list[CancellerResult]:
    """Parameter/complexity/performance table along one axis.

    ``axis="P"`` sweeps the polynomial canceller order (odd values);
    ``axis="nh"`` sweeps the hidden width of both network-based
    cancellers. With ``with_performance=False`` only the counting columns
    are filled (no fitting or training).
    """
    depth = ds.window_depth
    rows: list[CancellerResult] = []
    if axis == "P":
        for order in values:
            if with_performance:
                rows.append(run_pc(ds, order=order))
            else:
                rows.append(
                    _count_only(
                        "pc",
                        ds,
                        pc_param_count(ds.n_rx, ds.n_tx, 0, depth, order),
                        pc_complexity(ds.n_rx, ds.n_tx, 0, depth, order),
                        order,
                    )
                )
    elif axis == "nh":
        cfg = train_cfg or TrainSettings()
        for n_hidden in values:
            if with_performance:
                rows.append(run_nnc(ds, n_hidden, cfg))
                rows.append(run_hc(ds, n_hidden, cfg))
            else:
                rows.append(
                    _count_only(
                        "nnc",
                        ds,
                        nnc_param_count(ds.n_rx, ds.n_tx, 0, depth, n_hidden),
                        nnc_complexity(ds.n_rx, ds.n_tx, 0, depth, n_hidden),
                        n_hidden,
                    )
                )
                rows.append(
                    _count_only(
                        "hc",
                        ds,
                        hc_param_count(ds.n_rx, ds.n_tx, 0, depth, n_hidden),
                        hc_complexity(ds.n_rx, ds.n_tx, 0, depth, n_hidden),
                        n_hidden,
                    )
                )
    else:
        raise ValueError(f"unknown sweep axis '{axis}' (expected 'P' or 'nh')")
    return rows
