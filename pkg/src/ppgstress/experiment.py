"""Wiring: turn subject directories plus a grid row into a trained model.

This is the only module that knows the whole story: it loads records,
conditions them, cuts and splits frames, builds a network sized for the row,
trains it, and evaluates both sides. `run_grid` walks the full benchmark and
keeps going past individual failures so one bad row cannot hide the rest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    ClassMap,
    DataFormatError,
    FrameSet,
    Split,
    SubjectRecord,
    cut_frames,
    load_subject,
    pool_subjects,
    split_40_60,
)
from .dsp import PreprocessSettings, preprocess_record
from .metrics import DEFAULT_GRID, GridResult, GridRow
from .network import Network, NetworkConfig
from .training import TrainConfig, TrainReport, train

DEFAULT_HOP = 4
DEFAULT_POOL_FACTOR = 2

_SUBJECT_DIR = re.compile(r"^S(\d+)$")


def subject_dir_name(subject_id: int) -> str:
    return f"S{subject_id}"


def resolve_subjects(data_root: str | Path, subjects) -> list[SubjectRecord]:
    """Load subject directories under ``data_root``.

    ``subjects`` is either an iterable of ids or the string ``"all"``, which
    takes every directory named like ``S<number>`` (sorted by id).
    """
    data_root = Path(data_root)
    if not data_root.is_dir():
        raise DataFormatError(f"data root is not a directory: {data_root}")
    if subjects == "all":
        found = sorted(
            int(m.group(1))
            for d in data_root.iterdir()
            if d.is_dir() and (m := _SUBJECT_DIR.match(d.name))
        )
        if not found:
            raise DataFormatError(f"no S<number> directories under {data_root}")
        subjects = found
    records = [load_subject(data_root / subject_dir_name(int(s))) for s in subjects]
    if not records:
        raise DataFormatError("no subjects requested")
    return records


@dataclass(frozen=True)
class DataRecipe:
    """How to go from raw records to a train/test split."""

    class_map: ClassMap
    frame_size: int
    hop: int = DEFAULT_HOP
    filtered: bool = True
    preprocess: PreprocessSettings | None = None

    def settings(self) -> PreprocessSettings:
        if self.preprocess is not None:
            return self.preprocess
        return PreprocessSettings(filtered=self.filtered)


def build_frames(records: list[SubjectRecord], recipe: DataRecipe) -> FrameSet:
    """Condition each record, then window: one subject plain, several pooled."""
    conditioned = [preprocess_record(r, recipe.settings())[0] for r in records]
    if len(conditioned) == 1:
        return cut_frames(conditioned[0], recipe.class_map, recipe.frame_size, recipe.hop)
    return pool_subjects(conditioned, recipe.class_map, recipe.frame_size, recipe.hop)


def build_split(records: list[SubjectRecord], recipe: DataRecipe) -> Split:
    return split_40_60(build_frames(records, recipe))


def network_for_row(
    row: GridRow, pool_factor: int = DEFAULT_POOL_FACTOR, seed: int = 0
) -> Network:
    # row counts follow the lineage convention: n_cnn includes the input
    # stage, so the network gets n_cnn - 1 actual conv layers
    config = NetworkConfig(
        n_conv=row.n_cnn - 1,
        n_mlp=row.n_mlp,
        n_classes=row.mode.value,
        frame_size=row.frame_size,
        kernel_size=row.kernel_size,
        pool_factor=pool_factor,
    )
    return Network(config, rng=np.random.default_rng(seed))


def run_row(
    data_root: str | Path,
    row: GridRow,
    train_config: TrainConfig = TrainConfig(),
    hop: int = DEFAULT_HOP,
    pool_factor: int = DEFAULT_POOL_FACTOR,
    seed: int = 0,
) -> tuple[GridResult, Network | None, TrainReport | None]:
    """One benchmark row end to end. Failures land in the result, not raised."""
    result = GridResult(row=row)
    try:
        records = resolve_subjects(data_root, row.subjects)
        recipe = DataRecipe(
            class_map=ClassMap.for_mode(row.mode),
            frame_size=row.frame_size,
            hop=hop,
            filtered=row.filtered,
        )
        split = build_split(records, recipe)
        net = network_for_row(row, pool_factor, seed)
        report = train(net, split.train, train_config, test_frames=split.test)
        result.train_accuracy = report.final_train_accuracy
        result.test_accuracy = report.final_test_accuracy
        result.n_train = report.n_train
        result.n_test = report.n_test
        result.epochs_run = report.epochs_run
        result.stop_reason = report.stop_reason
        return result, net, report
    except Exception as exc:  # noqa: BLE001 - the grid must keep moving
        result.error = f"{type(exc).__name__}: {exc}"
        return result, None, None


def run_grid(
    data_root: str | Path,
    rows: tuple[GridRow, ...] = DEFAULT_GRID,
    train_config: TrainConfig = TrainConfig(),
    hop: int = DEFAULT_HOP,
    pool_factor: int = DEFAULT_POOL_FACTOR,
    seed: int = 0,
) -> list[GridResult]:
    return [
        run_row(data_root, row, train_config, hop, pool_factor, seed)[0]
        for row in rows
    ]
