"""Command-line front end: generate / run / sweep / report.

Subcommands:

    generate  simulate a dataset from a JSON run config
    run       fit or train one canceller on a dataset, append a result row
    sweep     tabulate counts (and optionally performance) along P or N_h
    report    summarize a results CSV into plot-ready files

All randomness flows from the config's root seed, outputs are written
atomically, and reruns with the same inputs produce byte-identical files
(no timestamps). Every error path exits nonzero with a single
``error: <where>: <what>`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .container import ContainerError
from .fnn import save_model
from .harness import CANCELLERS, CancellerResult, run_canceller, sweep
from .polynomial import save_coefficients
from .scenario import generate_dataset, load_dataset, save_dataset

RESULT_FIELDS = [
    "canceller",
    "seed",
    "setting",
    "c_db",
    "residual_dbm",
    "rx_power_dbm",
    "noise_floor_dbm",
    "n_params",
    "complexity",
    "epochs",
]
EPOCH_FIELDS = ["canceller", "seed", "epoch", "train_loss", "test_loss", "test_c_db"]

ABOVE_RANGE = "above-range"
OUT_DIR_ENV = "XLIC_OUT_DIR"


class CliError(Exception):
    """User-facing failure; message is printed as the diagnostic."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isposinf(value):
            return ABOVE_RANGE
        if np.isneginf(value):
            return "-inf"
        return repr(value)
    return str(value)


def _result_row(res: CancellerResult) -> dict:
    return {
        "canceller": res.canceller,
        "seed": _fmt(res.seed),
        "setting": _fmt(res.setting),
        "c_db": _fmt(res.c_db),
        "residual_dbm": _fmt(res.residual_power_dbm),
        "rx_power_dbm": _fmt(res.rx_power_dbm),
        "noise_floor_dbm": _fmt(res.noise_floor_dbm),
        "n_params": _fmt(res.n_params),
        "complexity": _fmt(res.complexity),
        "epochs": _fmt(res.epochs),
    }


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    tmp = os.path.join(directory, f".tmp-{os.path.basename(path)}")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, fields: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _atomic_write_text(path, buf.getvalue())


def _append_csv(path: str, fields: list[str], rows: list[dict]) -> None:
    existing: list[dict] = []
    if os.path.exists(path):
        existing = _read_csv(path, fields)
    _write_csv(path, fields, existing + rows)


def _read_csv(path: str, required_fields: list[str]) -> list[dict]:
    if not os.path.exists(path):
        raise CliError(f"input: file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [f for f in required_fields if f not in header]
        if missing:
            raise CliError(f"schema: {path} is missing column '{missing[0]}'")
        return list(reader)


def _check_overwrite(path: str, force: bool) -> None:
    if os.path.exists(path) and not force:
        raise CliError(f"output: {path} exists (use --force to overwrite)")


def _out_path(args_out: str | None, default_name: str) -> str:
    if args_out:
        return args_out
    return os.path.join(os.environ.get(OUT_DIR_ENV, "."), default_name)


def _load_run_config(path: str, seed_override: int | None) -> RunConfig:
    if not os.path.exists(path):
        raise CliError(f"config: file not found: {path}")
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        raise CliError(f"config: {exc}") from exc
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg


def cmd_generate(args) -> int:
    cfg = _load_run_config(args.config, args.seed)
    out = _out_path(args.out, "dataset.bin")
    _check_overwrite(out, args.force)
    ds = generate_dataset(cfg.scenario, cfg.seed)
    save_dataset(ds, out)
    print(
        f"dataset: {out} samples={ds.n_samples} split={ds.split_index} "
        f"tx={ds.n_tx} rx={ds.n_rx} seed={cfg.seed}"
    )
    return 0


def _epoch_rows(res: CancellerResult) -> list[dict]:
    rows = []
    if res.test_losses is None:
        return rows
    for i in range(len(res.test_losses)):
        rows.append(
            {
                "canceller": res.canceller,
                "seed": _fmt(res.seed),
                "epoch": str(i + 1),
                "train_loss": _fmt(res.train_losses[i]),
                "test_loss": _fmt(res.test_losses[i]),
                "test_c_db": _fmt(res.c_db_history[i]),
            }
        )
    return rows


def _epochs_path(results_path: str) -> str:
    stem, ext = os.path.splitext(results_path)
    return f"{stem}_epochs{ext or '.csv'}"


def _save_artifacts(res: CancellerResult, models_dir: str) -> None:
    """Persist fitted coefficients / trained weights next to the results."""
    os.makedirs(models_dir, exist_ok=True)
    scales = {
        k: res.artifacts[k]
        for k in ("input_scale", "label_scale", "residual_scale")
        if k in res.artifacts
    }
    if "model" in res.artifacts:
        save_model(
            res.artifacts["model"],
            os.path.join(models_dir, f"{res.canceller}_model.bin"),
            extra_meta={**scales, "canceller": res.canceller},
        )
    if "stage1" in res.artifacts:
        save_coefficients(
            res.artifacts["stage1"],
            os.path.join(models_dir, f"{res.canceller}_stage1_coeffs.bin"),
            extra_meta={"canceller": res.canceller},
        )
    if "coefficients" in res.artifacts:
        save_coefficients(
            res.artifacts["coefficients"],
            os.path.join(models_dir, f"{res.canceller}_coeffs.bin"),
            extra_meta={"canceller": res.canceller},
        )


def cmd_run(args) -> int:
    cfg = _load_run_config(args.config, args.seed)
    if args.canceller not in CANCELLERS:
        raise CliError(
            f"usage: unknown canceller '{args.canceller}' "
            f"(expected one of {', '.join(CANCELLERS)})"
        )
    try:
        ds = load_dataset(args.dataset)
    except (ContainerError, FileNotFoundError) as exc:
        raise CliError(f"dataset: {exc}") from exc
    n_hidden = cfg.canceller.nnc_hidden if args.canceller == "nnc" else cfg.canceller.hc_hidden
    res = run_canceller(
        ds,
        args.canceller,
        order=cfg.canceller.order,
        n_hidden=n_hidden,
        train_cfg=cfg.training,
    )
    out = _out_path(args.out, "results.csv")
    _append_csv(out, RESULT_FIELDS, [_result_row(res)])
    epoch_rows = _epoch_rows(res)
    if epoch_rows:
        _append_csv(_epochs_path(out), EPOCH_FIELDS, epoch_rows)
    _save_artifacts(res, args.models_dir or os.path.dirname(os.path.abspath(out)))
    print(
        f"{res.canceller}: c_db={_fmt(res.c_db)} residual={_fmt(res.residual_power_dbm)} dBm "
        f"params={res.n_params} complexity={res.complexity}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_run_config(args.config, args.seed)
    if args.axis not in ("P", "nh"):
        raise CliError(f"usage: unknown axis '{args.axis}' (expected 'P' or 'nh')")
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"usage: --values must be comma-separated integers: {exc}")
    out = _out_path(args.out, "sweep.csv")
    _check_overwrite(out, args.force)
    try:
        ds = load_dataset(args.dataset)
    except (ContainerError, FileNotFoundError) as exc:
        raise CliError(f"dataset: {exc}") from exc
    rows = sweep(
        ds,
        args.axis,
        values,
        train_cfg=cfg.training,
        with_performance=not args.no_train,
    )
    _write_csv(out, RESULT_FIELDS, [_result_row(r) for r in rows])
    print(f"sweep: {out} rows={len(rows)}")
    return 0


def _c_db_sort_key(row: dict) -> float:
    raw = row.get("c_db", "")
    if raw == ABOVE_RANGE:
        return np.inf
    try:
        return float(raw)
    except ValueError:
        return -np.inf


def cmd_report(args) -> int:
    rows = _read_csv(args.results, RESULT_FIELDS)
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV, ".")
    os.makedirs(out_dir, exist_ok=True)

    ranked = sorted(rows, key=_c_db_sort_key, reverse=True)
    _write_csv(os.path.join(out_dir, "summary.csv"), RESULT_FIELDS, ranked)

    # Residual-power bar data: received power reference, noise floor, then
    # one bar per canceller row.
    bars = []
    if rows:
        bars.append({"label": "received_cli", "power_dbm": rows[0]["rx_power_dbm"]})
        noise = rows[0].get("noise_floor_dbm", "")
        if noise not in ("", "-inf"):
            bars.append({"label": "noise_floor", "power_dbm": noise})
    for row in ranked:
        if row["residual_dbm"]:
            bars.append(
                {"label": row["canceller"], "power_dbm": row["residual_dbm"]}
            )
    _write_csv(os.path.join(out_dir, "residual_bars.csv"), ["label", "power_dbm"], bars)

    epochs_src = args.epochs or _epochs_path(args.results)
    if os.path.exists(epochs_src):
        epoch_rows = _read_csv(epochs_src, EPOCH_FIELDS)
        _write_csv(os.path.join(out_dir, "epoch_curves.csv"), EPOCH_FIELDS, epoch_rows)

    for row in ranked:
        print(
            f"{row['canceller']:>4}  c_db={row['c_db'] or 'n/a':>18}  "
            f"residual={row['residual_dbm'] or 'n/a'} dBm  "
            f"params={row['n_params']}  complexity={row['complexity']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlic",
        description="Cross-link interference cancellation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="simulate a dataset from a run config")
    gen.add_argument("--config", required=True, help="JSON run config")
    gen.add_argument("--seed", type=int, default=None, help="override the config seed")
    gen.add_argument("--out", default=None, help="output dataset file")
    gen.add_argument("--force", action="store_true", help="overwrite existing output")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="fit/train one canceller on a dataset")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--dataset", required=True, help="dataset file from 'generate'")
    run.add_argument("--canceller", required=True, help="tc, pc, nnc or hc")
    run.add_argument("--out", default=None, help="results CSV (rows are appended)")
    run.add_argument(
        "--models-dir", default=None, help="where to save fitted models/coefficients"
    )
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="tabulate counts/performance along an axis")
    sw.add_argument("--config", required=True)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--dataset", required=True)
    sw.add_argument("--axis", required=True, help="'P' or 'nh'")
    sw.add_argument("--values", required=True, help="comma-separated axis values")
    sw.add_argument("--out", default=None)
    sw.add_argument("--force", action="store_true")
    sw.add_argument(
        "--no-train",
        action="store_true",
        help="emit parameter/complexity counts only (skip fitting and training)",
    )
    sw.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="summarize a results CSV")
    rep.add_argument("--results", required=True, help="results CSV from 'run'")
    rep.add_argument("--epochs", default=None, help="epochs CSV (default: sibling file)")
    rep.add_argument("--out-dir", default=None)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ContainerError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
