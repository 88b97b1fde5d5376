"""Command line front end.

Five subcommands: ``preprocess`` writes a conditioned copy of a subject
directory, ``train`` fits a model and saves it with its run report,
``evaluate`` replays a saved model against data, ``gradcheck`` compares the
hand-written gradients to finite differences, and ``grid`` runs the whole
benchmark table.

Exit codes: 0 on success, 2 for usage or validation problems, 3 for
numerical failures (unstable filter, diverged training, failed gradient
check). Every run that writes artifacts also writes a ``manifest.json``
beside them recording the resolved settings, so a run can be repeated from
the manifest alone. The data root defaults to the ``PPGSTRESS_DATA``
environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dataset import ClassMap, ClassMode, load_subject, split_40_60
from .dsp import PreprocessSettings, design_to_text, preprocess_record
from .experiment import (
    DEFAULT_HOP,
    DataRecipe,
    build_frames,
    resolve_subjects,
    run_grid,
    subject_dir_name,
)
from .metrics import DEFAULT_GRID, evaluate, parse_rows_text, render_grid
from .network import (
    Network,
    NetworkConfig,
    gradient_check,
    load_model,
    save_model,
)
from .training import TrainConfig, train

DATA_ENV_VAR = "PPGSTRESS_DATA"

#: every recognized --config key with its default
CONFIG_DEFAULTS = {
    "n_cnn": 3,
    "n_mlp": 3,
    "frame": 64,
    "filter": 16,
    "ss": 2,
    "stride": 4,
    "filtered": True,
    "lr": 0.01,
    "momentum": 0.9,
    "max_iter": 200,
    "min_error": 0.01,
    "ma_window": 5,
    "conv_width": 8,
    "mlp_width": 5,
    "activation": "tanh",
    "undersample": False,
}

_INT_KEYS = {"n_cnn", "n_mlp", "frame", "filter", "ss", "stride", "max_iter",
             "ma_window", "conv_width", "mlp_width"}
_FLOAT_KEYS = {"lr", "momentum", "min_error"}
_BOOL_KEYS = {"filtered", "undersample"}


def parse_config(pairs: list[str] | None) -> dict:
    """Resolve ``KEY=VAL`` tokens against the defaults table."""
    resolved = dict(CONFIG_DEFAULTS)
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"config token '{pair}' is not KEY=VAL")
        key, _, value = pair.partition("=")
        if key not in CONFIG_DEFAULTS:
            raise ValueError(f"unknown config key '{key}'")
        try:
            if key in _INT_KEYS:
                resolved[key] = int(value)
            elif key in _FLOAT_KEYS:
                resolved[key] = float(value)
            elif key in _BOOL_KEYS:
                if value in ("yes", "true", "1"):
                    resolved[key] = True
                elif value in ("no", "false", "0"):
                    resolved[key] = False
                else:
                    raise ValueError("expected yes or no")
            else:
                resolved[key] = value
        except ValueError as exc:
            raise ValueError(f"config key '{key}': bad value '{value}' ({exc})") from None
    if resolved["activation"] != "tanh":
        raise ValueError(
            f"config key 'activation': only tanh is implemented, got '{resolved['activation']}'"
        )
    return resolved


def parse_subject_list(text: str):
    """``all``, or ids joined by ``,`` or ``+``."""
    text = text.strip()
    if text.lower() == "all":
        return "all"
    parts = [p for p in re.split(r"[,+]", text) if p.strip()]
    if not parts:
        raise ValueError("empty subject list")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"bad subject list '{text}'") from None


def _data_root(args) -> Path:
    if args.data:
        return Path(args.data)
    env = os.environ.get(DATA_ENV_VAR)
    if env:
        return Path(env)
    raise ValueError(f"no --data given and {DATA_ENV_VAR} is not set")


def _write_manifest(out_dir: Path, command: str, config: dict, seeds: dict,
                    inputs: list[str], outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": inputs,
        "outputs": outputs,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- subcommands --------------------------------------------------------------


def cmd_preprocess(args) -> int:
    data_root = _data_root(args)
    src = data_root / subject_dir_name(args.subject)
    record = load_subject(src)
    settings = PreprocessSettings(filtered=not args.no_filter)
    conditioned, design = preprocess_record(record, settings)
    out = Path(args.out) if args.out else Path(f"{subject_dir_name(args.subject)}_conditioned")
    out.mkdir(parents=True, exist_ok=True)
    (out / "ppg.csv").write_text("".join(repr(float(v)) + "\n" for v in conditioned.ppg))
    (out / "labels.csv").write_bytes((src / "labels.csv").read_bytes())
    (out / "meta.txt").write_bytes((src / "meta.txt").read_bytes())
    outputs = ["ppg.csv", "labels.csv", "meta.txt"]
    if design is not None:
        (out / "filter.txt").write_text(design_to_text(design))
        outputs.append("filter.txt")
    _write_manifest(
        out,
        "preprocess",
        {"filtered": not args.no_filter, "smooth_window": settings.smooth_window},
        {},
        [str(src)],
        outputs,
    )
    print(f"wrote {len(conditioned.ppg)} conditioned samples to {out}")
    return 0


def _recipe_from_config(cfg: dict, mode: ClassMode) -> DataRecipe:
    return DataRecipe(
        class_map=ClassMap.for_mode(mode),
        frame_size=cfg["frame"],
        hop=cfg["stride"],
        filtered=cfg["filtered"],
        preprocess=PreprocessSettings(
            filtered=cfg["filtered"], smooth_window=cfg["ma_window"]
        ),
    )


def cmd_train(args) -> int:
    cfg = parse_config(args.config)
    subjects = parse_subject_list(args.subjects)
    mode = ClassMode(args.classes)
    data_root = _data_root(args)
    if cfg["n_cnn"] < 2:
        raise ValueError(
            f"n_cnn counts the input stage too, so it must be >= 2, got {cfg['n_cnn']}"
        )
    records = resolve_subjects(data_root, subjects)
    split = split_40_60(build_frames(records, _recipe_from_config(cfg, mode)))
    # n_cnn includes the input stage (lineage convention), hence the -1
    net_config = NetworkConfig(
        n_conv=cfg["n_cnn"] - 1,
        n_mlp=cfg["n_mlp"],
        n_classes=mode.value,
        frame_size=cfg["frame"],
        kernel_size=cfg["filter"],
        pool_factor=cfg["ss"],
        conv_width=cfg["conv_width"],
        mlp_width=cfg["mlp_width"],
    )
    net = Network(net_config, rng=np.random.default_rng(args.seed))
    train_config = TrainConfig(
        learning_rate=cfg["lr"],
        momentum=cfg["momentum"],
        max_iterations=cfg["max_iter"],
        min_train_error=cfg["min_error"],
        shuffle_seed=args.seed,
        undersample=cfg["undersample"],
    )
    report = train(net, split.train, train_config, test_frames=split.test)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    extra = {
        "classes": mode.value,
        "filtered": cfg["filtered"],
        "stride": cfg["stride"],
        "ma_window": cfg["ma_window"],
        "subjects": list(records[i].subject_id for i in range(len(records))),
        "seed": args.seed,
    }
    save_model(out / "model.bin", net, extra)
    (out / "report.txt").write_text(report.to_text())
    _write_manifest(
        out, "train", cfg, {"seed": args.seed},
        [str(data_root)], ["model.bin", "report.txt"],
    )
    test_text = (
        "none" if report.final_test_accuracy is None
        else f"{report.final_test_accuracy * 100:.1f}%"
    )
    print(
        f"trained {report.epochs_run} epochs ({report.stop_reason}); "
        f"train acc {report.final_train_accuracy * 100:.1f}%, test acc {test_text}"
    )
    print(f"model and report written to {out}")
    return 0


def cmd_evaluate(args) -> int:
    net, extra = load_model(args.model)
    if args.classes is not None and args.classes != net.config.n_classes:
        raise ValueError(
            f"model was trained for {net.config.n_classes} classes, "
            f"--classes asked for {args.classes}"
        )
    mode = ClassMode(net.config.n_classes)
    subjects = parse_subject_list(args.subjects)
    data_root = _data_root(args)
    records = resolve_subjects(data_root, subjects)
    recipe = DataRecipe(
        class_map=ClassMap.for_mode(mode),
        frame_size=net.config.frame_size,
        hop=int(extra.get("stride", DEFAULT_HOP)),
        filtered=bool(extra.get("filtered", True)),
        preprocess=PreprocessSettings(
            filtered=bool(extra.get("filtered", True)),
            smooth_window=int(extra.get("ma_window", 5)),
        ),
    )
    frames = build_frames(records, recipe)
    if args.split != "all":
        split = split_40_60(frames)
        frames = split.test if args.split == "test" else split.train
    result = evaluate(net, frames)
    text = (
        f"frames\t{result.n_frames}\n"
        f"accuracy\t{repr(result.accuracy)}\n\n"
        + result.confusion.to_text() + "\n"
    )
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.txt").write_text(text)
        _write_manifest(
            out, "evaluate",
            {"split": args.split, "model": str(args.model)},
            {}, [str(data_root)], ["eval.txt"],
        )
    return 0


GRADCHECK_BATTERY = (
    ("2 conv + 2 dense, 2 classes", 2, 2, 2),
    ("2 conv + 3 dense, 2 classes", 2, 3, 2),
    ("3 conv + 2 dense, 2 classes", 3, 2, 2),
    ("3 conv + 3 dense, 2 classes", 3, 3, 2),
    ("3 conv + 3 dense, 3 classes", 3, 3, 3),
)


def run_gradcheck_battery(seed: int = 0, frame_size: int = 32):
    """Worst finite-difference disagreement for each battery entry."""
    rng = np.random.default_rng(seed)
    results = []
    for label, n_conv, n_mlp, n_classes in GRADCHECK_BATTERY:
        config = NetworkConfig(
            n_conv=n_conv,
            n_mlp=n_mlp,
            n_classes=n_classes,
            frame_size=frame_size,
            kernel_size=5,
            pool_factor=2,
        )
        net = Network(config, rng=rng)
        frame = rng.uniform(-1.0, 1.0, size=frame_size)
        cls = int(rng.integers(n_classes))
        results.append((label, gradient_check(net, frame, cls)))
    return results


def cmd_gradcheck(args) -> int:
    results = run_gradcheck_battery(args.seed)
    worst = max(err for _, err in results)
    for label, err in results:
        verdict = "ok" if err <= args.tolerance else "FAIL"
        print(f"{label}: worst relative error {err:.3e}  {verdict}")
    if worst > args.tolerance:
        print(
            f"gradient check failed: {worst:.3e} > tolerance {args.tolerance:g}",
            file=sys.stderr,
        )
        return 3
    print(f"all {len(results)} configurations within {args.tolerance:g}")
    return 0


def cmd_grid(args) -> int:
    rows = DEFAULT_GRID
    if args.rows:
        rows = parse_rows_text(Path(args.rows).read_text())
    data_root = _data_root(args)
    train_config = TrainConfig(shuffle_seed=args.seed)
    results = run_grid(data_root, rows, train_config, seed=args.seed)
    text = render_grid(results) + "\n"
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "grid.txt").write_text(text)
        _write_manifest(
            out, "grid",
            {"rows": str(args.rows) if args.rows else "builtin", "n_rows": len(rows)},
            {"seed": args.seed}, [str(data_root)], ["grid.txt"],
        )
    failures = [r for r in results if r.error]
    if failures:
        print(f"{len(failures)} of {len(results)} rows failed", file=sys.stderr)
        return 3
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppgstress",
        description="train and evaluate length-adaptive 1-d conv nets on wrist pulse signals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="write a conditioned copy of a subject directory")
    p.add_argument("--data", help=f"data root (default ${DATA_ENV_VAR})")
    p.add_argument("--subject", type=int, required=True)
    p.add_argument("--no-filter", action="store_true", help="normalize only")
    p.add_argument("--out", help="output directory (default ./S<N>_conditioned)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="fit a model and save it with its report")
    p.add_argument("--data", help=f"data root (default ${DATA_ENV_VAR})")
    p.add_argument("--subjects", required=True, help="ids joined by , or +, or 'all'")
    p.add_argument("--classes", type=int, choices=(2, 3, 5), required=True)
    p.add_argument("--config", nargs="*", metavar="KEY=VAL",
                   help="overrides: " + ", ".join(CONFIG_DEFAULTS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="replay a saved model against data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help=f"data root (default ${DATA_ENV_VAR})")
    p.add_argument("--subjects", required=True)
    p.add_argument("--classes", type=int, default=None,
                   help="assert the model's class count")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="compare gradients to finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("grid", help="run the benchmark table")
    p.add_argument("--data", help=f"data root (default ${DATA_ENV_VAR})")
    p.add_argument("--rows", help="row file (default: built-in table)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid)
    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse and dispatch; returns the exit code instead of raising."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
