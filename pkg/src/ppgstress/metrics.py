"""Evaluation: confusion matrices, accuracy, and text rendering of results.

Also defines the benchmark grid: the fixed list of model/data configurations
the `grid` command walks through, spanning task granularity (2/3/5 classes),
frame lengths, kernel sizes, one subject vs. pooled subjects, and conditioned
vs. raw signals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ClassMode, FrameSet
from .network import Network


@dataclass
class ConfusionMatrix:
    """Counts of (true class, predicted class) pairs."""

    class_names: tuple[str, ...]
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.class_names)
        if self.counts is None:
            self.counts = np.zeros((n, n), dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != (n, n):
                raise ValueError(
                    f"counts shape {self.counts.shape} does not match {n} classes"
                )

    def update(self, true_class: int, predicted_class: int) -> None:
        self.counts[true_class, predicted_class] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        if self.total == 0:
            raise ValueError("empty confusion matrix has no accuracy")
        return float(np.trace(self.counts)) / self.total

    def per_class_recall(self) -> dict[str, float]:
        out = {}
        for i, name in enumerate(self.class_names):
            row = self.counts[i].sum()
            out[name] = float(self.counts[i, i]) / row if row else float("nan")
        return out

    def to_text(self) -> str:
        """Fixed-width table, rows = true class, columns = predicted."""
        width = max(len(n) for n in self.class_names)
        width = max(width, len(str(int(self.counts.max(initial=0)))), 5)
        head = " " * (width + 2) + "  ".join(n.rjust(width) for n in self.class_names)
        lines = [head]
        for i, name in enumerate(self.class_names):
            cells = "  ".join(str(int(c)).rjust(width) for c in self.counts[i])
            lines.append(f"{name.rjust(width)}  {cells}")
        return "\n".join(lines)


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    confusion: ConfusionMatrix
    n_frames: int


def evaluate(net: Network, frames: FrameSet) -> EvalResult:
    """Argmax decisions over a frame set, tallied against true classes."""
    if len(frames) == 0:
        raise ValueError("cannot evaluate on an empty frame set")
    if net.config.n_classes != frames.class_map.n_classes:
        raise ValueError(
            f"model has {net.config.n_classes} outputs but the frames carry "
            f"{frames.class_map.n_classes} classes"
        )
    cm = ConfusionMatrix(frames.class_map.class_names)
    for f in frames.frames:
        cm.update(f.class_index, net.predict(f.samples))
    return EvalResult(cm.accuracy(), cm, len(frames))


@dataclass(frozen=True)
class GridRow:
    """One line of the benchmark grid.

    ``n_cnn`` and ``n_mlp`` follow the lineage's counting convention:
    ``n_cnn`` includes the signal input stage (so ``n_cnn=3`` means two
    convolutional stages) and ``n_mlp`` includes the class read-out.
    ``subjects`` is a tuple of subject ids, or ``"all"`` for every usable
    subject found under the data root. ``kernel_assumed`` marks rows whose
    kernel size is a best guess rather than a hard setting; the report
    flags them so readers know.
    """

    row: int
    subjects: tuple[int, ...] | str
    mode: ClassMode
    n_cnn: int
    n_mlp: int
    frame_size: int
    kernel_size: int
    filtered: bool
    kernel_assumed: bool = False

    def __post_init__(self):
        if self.n_cnn < 2:
            raise ValueError(
                f"n_cnn counts the input stage too, so it must be >= 2, got {self.n_cnn}"
            )


#: The full benchmark: rows 1-6 single subject, raw then conditioned;
#: rows 7-9 a two-subject pool; rows 10-11 every usable subject. Rows 2 and 3
#: carry an assumed 16-tap kernel: the obvious carry-forward of 32 cannot
#: shape-trace at frame 64, and 16 matches the neighboring rows.
DEFAULT_GRID: tuple[GridRow, ...] = (
    GridRow(1, (2,), ClassMode.TWO, 2, 3, 128, 32, filtered=False),
    GridRow(2, (2,), ClassMode.THREE, 3, 2, 64, 16, filtered=False, kernel_assumed=True),
    GridRow(3, (2,), ClassMode.FIVE, 3, 3, 64, 16, filtered=False, kernel_assumed=True),
    GridRow(4, (2,), ClassMode.TWO, 3, 3, 64, 16, filtered=True),
    GridRow(5, (2,), ClassMode.THREE, 2, 3, 64, 16, filtered=True),
    GridRow(6, (2,), ClassMode.FIVE, 3, 3, 64, 16, filtered=True),
    GridRow(7, (8, 15), ClassMode.TWO, 2, 3, 128, 32, filtered=False),
    GridRow(8, (8, 15), ClassMode.THREE, 3, 3, 64, 16, filtered=False),
    GridRow(9, (8, 15), ClassMode.FIVE, 3, 3, 64, 16, filtered=False),
    GridRow(10, "all", ClassMode.TWO, 2, 3, 128, 32, filtered=True),
    GridRow(11, "all", ClassMode.FIVE, 3, 3, 64, 16, filtered=True),
)


def rows_to_text(rows: tuple[GridRow, ...] = DEFAULT_GRID) -> str:
    """Grid rows as an editable text file, one row per line."""
    lines = ["# row file: key=value tokens, one benchmark row per line"]
    for r in rows:
        tokens = [
            f"row={r.row}",
            "subjects=" + (r.subjects if r.subjects == "all" else "+".join(map(str, r.subjects))),
            f"classes={r.mode.value}",
            f"n_cnn={r.n_cnn}",
            f"n_mlp={r.n_mlp}",
            f"frame={r.frame_size}",
            f"filter={r.kernel_size}",
            "filtered=" + ("yes" if r.filtered else "no"),
        ]
        if r.kernel_assumed:
            tokens.append("kernel_assumed=yes")
        lines.append(" ".join(tokens))
    return "\n".join(lines) + "\n"


def _parse_bool(value: str, key: str) -> bool:
    if value in ("yes", "true", "1"):
        return True
    if value in ("no", "false", "0"):
        return False
    raise ValueError(f"{key} must be yes or no, got '{value}'")


def parse_rows_text(text: str) -> tuple[GridRow, ...]:
    """Inverse of :func:`rows_to_text`; raises ValueError on malformed lines."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kv: dict[str, str] = {}
        for token in line.split():
            if "=" not in token:
                raise ValueError(f"row file line {lineno}: bad token '{token}'")
            key, _, value = token.partition("=")
            kv[key] = value
        required = ("row", "subjects", "classes", "n_cnn", "n_mlp", "frame", "filter", "filtered")
        for key in required:
            if key not in kv:
                raise ValueError(f"row file line {lineno}: missing key '{key}'")
        unknown = set(kv) - set(required) - {"kernel_assumed"}
        if unknown:
            raise ValueError(
                f"row file line {lineno}: unknown key '{sorted(unknown)[0]}'"
            )
        subjects = kv["subjects"]
        if subjects != "all":
            try:
                subjects = tuple(int(p) for p in subjects.replace(",", "+").split("+"))
            except ValueError:
                raise ValueError(
                    f"row file line {lineno}: bad subjects '{kv['subjects']}'"
                ) from None
        try:
            rows.append(
                GridRow(
                    row=int(kv["row"]),
                    subjects=subjects,
                    mode=ClassMode(int(kv["classes"])),
                    n_cnn=int(kv["n_cnn"]),
                    n_mlp=int(kv["n_mlp"]),
                    frame_size=int(kv["frame"]),
                    kernel_size=int(kv["filter"]),
                    filtered=_parse_bool(kv["filtered"], "filtered"),
                    kernel_assumed=_parse_bool(kv.get("kernel_assumed", "no"), "kernel_assumed"),
                )
            )
        except ValueError as exc:
            raise ValueError(f"row file line {lineno}: {exc}") from None
    if not rows:
        raise ValueError("row file has no rows")
    return tuple(rows)


@dataclass
class GridResult:
    """Outcome of one grid row (or the reason it failed)."""

    row: GridRow
    train_accuracy: float | None = None
    test_accuracy: float | None = None
    n_train: int = 0
    n_test: int = 0
    epochs_run: int = 0
    stop_reason: str = ""
    error: str = ""


def _subjects_text(subjects) -> str:
    if subjects == "all":
        return "all"
    return "+".join(f"S{s}" for s in subjects)


GRID_COLUMNS = (
    "row", "subjects", "classes", "n_cnn", "n_mlp", "frame",
    "filter", "filtered", "train_acc", "test_acc", "epochs", "stop",
)


def render_grid(results: list[GridResult]) -> str:
    """The benchmark table as aligned plain text, one row per result."""
    rows = []
    for r in results:
        gr = r.row
        kernel = f"{gr.kernel_size}*" if gr.kernel_assumed else str(gr.kernel_size)
        if r.error:
            tail = ("-", "-", "-", f"failed: {r.error}")
        else:
            tail = (
                f"{r.train_accuracy * 100:.1f}%",
                f"{r.test_accuracy * 100:.1f}%",
                str(r.epochs_run),
                r.stop_reason,
            )
        rows.append(
            (
                str(gr.row),
                _subjects_text(gr.subjects),
                str(gr.mode.value),
                str(gr.n_cnn),
                str(gr.n_mlp),
                str(gr.frame_size),
                kernel,
                "yes" if gr.filtered else "no",
            )
            + tail
        )
    widths = [
        max(len(GRID_COLUMNS[c]), max((len(row[c]) for row in rows), default=0))
        for c in range(len(GRID_COLUMNS))
    ]
    fmt = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(GRID_COLUMNS), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(row) for row in rows)
    if any(r.row.kernel_assumed for r in results):
        lines.append("")
        lines.append("* kernel size assumed, not part of the fixed recipe")
    return "\n".join(lines)
