"""Subject ingestion, label/PPG rate synchronization, framing, and train/test splits.

A subject directory is plain text: ``ppg.csv`` (one real per line, 64 Hz),
``labels.csv`` (one integer per line, 700 Hz) and ``meta.txt`` with
``subject=``, ``ppg_rate_hz=`` and ``label_rate_hz=`` lines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

PPG_RATE_HZ = 64
LABEL_RATE_HZ = 700

#: raw condition labels carried by the recordings
RAW_LABEL_NAMES = {
    0: "transient",
    1: "baseline",
    2: "stress",
    3: "amusement",
    4: "meditation",
}

#: subjects 1 and 12 were dropped from the recordings for sensor malfunction
USABLE_SUBJECT_IDS = tuple(i for i in range(2, 18) if i != 12)


class DataFormatError(ValueError):
    """A subject directory or one of its files is malformed."""


class SplitError(ValueError):
    """A train/test split could not be formed."""


class ClassMode(Enum):
    """Classification task granularity (value = number of task classes)."""

    TWO = 2
    THREE = 3
    FIVE = 5


@dataclass(frozen=True)
class ClassMap:
    """Mapping from raw condition labels to task class indices.

    ``mapping`` sends each raw label to a class index, or to ``None`` for
    labels the task excludes.
    """

    mode: ClassMode
    mapping: dict[int, int | None]
    class_names: tuple[str, ...]

    @classmethod
    def for_mode(cls, mode: ClassMode | int) -> "ClassMap":
        mode = ClassMode(mode) if not isinstance(mode, ClassMode) else mode
        if mode is ClassMode.FIVE:
            return cls(
                mode,
                {1: 0, 2: 1, 3: 2, 4: 3, 0: 4},
                ("baseline", "stress", "amusement", "meditation", "transient"),
            )
        if mode is ClassMode.TWO:
            return cls(
                mode,
                {2: 1, 1: 0, 3: 0, 4: 0, 0: None},
                ("non-stress", "stress"),
            )
        return cls(
            mode,
            {1: 0, 2: 1, 3: 2, 0: None, 4: None},
            ("baseline", "stress", "amusement"),
        )

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_of(self, raw_label: int) -> int | None:
        return self.mapping[int(raw_label)]


@dataclass(frozen=True)
class SubjectRecord:
    """One subject's raw PPG stream plus its condition-label stream."""

    subject_id: int
    ppg: np.ndarray
    labels: np.ndarray
    ppg_rate_hz: int = PPG_RATE_HZ
    label_rate_hz: int = LABEL_RATE_HZ

    def __post_init__(self):
        object.__setattr__(self, "ppg", np.asarray(self.ppg, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if self.subject_id in (1, 12):
            raise DataFormatError(
                f"subject {self.subject_id} is excluded (known sensor malfunction)"
            )
        if self.subject_id not in USABLE_SUBJECT_IDS:
            raise DataFormatError(
                f"subject id {self.subject_id} outside the usable range 2-17"
            )
        if self.ppg_rate_hz != PPG_RATE_HZ or self.label_rate_hz != LABEL_RATE_HZ:
            raise DataFormatError(
                f"unsupported rates {self.ppg_rate_hz}/{self.label_rate_hz} Hz, "
                f"expected {PPG_RATE_HZ}/{LABEL_RATE_HZ}"
            )
        if self.ppg.size == 0 or self.labels.size == 0:
            raise DataFormatError("empty ppg or label stream")
        bad = np.flatnonzero((self.labels < 0) | (self.labels > 4))
        if bad.size:
            raise DataFormatError(
                f"label out of range at line {bad[0] + 1}: {int(self.labels[bad[0]])}"
            )
        ppg_s = self.ppg.size / self.ppg_rate_hz
        lab_s = self.labels.size / self.label_rate_hz
        if abs(ppg_s - lab_s) > 1.0:
            raise DataFormatError(
                f"stream durations disagree: ppg {ppg_s:.2f} s vs labels {lab_s:.2f} s"
            )

    @property
    def duration_s(self) -> float:
        return self.ppg.size / self.ppg_rate_hz


@dataclass(frozen=True)
class Frame:
    """A fixed-length PPG window carrying a single task class."""

    samples: np.ndarray
    class_index: int
    subject_id: int
    start_index: int

    @property
    def end_index(self) -> int:
        return self.start_index + len(self.samples)


@dataclass
class FrameSet:
    """Windowed, labeled signal frames plus the class mapping that produced them."""

    frames: list[Frame]
    class_map: ClassMap
    frame_size: int
    hop: int
    short_signal: bool = False
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    def class_vector(self) -> np.ndarray:
        return np.array([f.class_index for f in self.frames], dtype=np.int64)

    def samples_matrix(self) -> np.ndarray:
        if not self.frames:
            return np.zeros((0, self.frame_size))
        return np.stack([f.samples for f in self.frames])

    def frame_count_by_class(self) -> dict[str, int]:
        counts = dict.fromkeys(self.class_map.class_names, 0)
        for f in self.frames:
            counts[self.class_map.class_names[f.class_index]] += 1
        return counts

    def missing_classes(self) -> list[str]:
        return [name for name, n in self.frame_count_by_class().items() if n == 0]

    def to_bytes(self) -> bytes:
        """Canonical serialization; identical inputs yield identical bytes."""
        header = json.dumps(
            {
                "mode": self.class_map.mode.value,
                "frame_size": self.frame_size,
                "hop": self.hop,
                "n_frames": len(self.frames),
                "short_signal": self.short_signal,
            },
            sort_keys=True,
        ).encode()
        meta = np.array(
            [[f.class_index, f.subject_id, f.start_index] for f in self.frames],
            dtype=np.int64,
        ).reshape(len(self.frames), 3)
        blob = self.samples_matrix().astype("<f8").tobytes()
        return b"FRAMES1\n" + len(header).to_bytes(8, "little") + header + meta.astype(
            "<i8"
        ).tobytes() + blob


@dataclass
class Split:
    """Disjoint train/test frame sets."""

    train: FrameSet
    test: FrameSet


def _diagnose_bad_line(path: Path, caster, what: str) -> None:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                raise DataFormatError(f"{path.name}: blank line at line {lineno}")
            try:
                caster(text)
            except ValueError:
                raise DataFormatError(
                    f"{path.name}: non-numeric {what} at line {lineno}: {text!r}"
                ) from None


def _read_column(path: Path, dtype, caster, what: str) -> np.ndarray:
    if not path.is_file():
        raise DataFormatError(f"missing file: {path}")
    try:
        return np.loadtxt(path, dtype=dtype, ndmin=1)
    except ValueError:
        _diagnose_bad_line(path, caster, what)
        raise


def load_subject(path: str | Path) -> SubjectRecord:
    """Read and validate one portable subject directory."""
    path = Path(path)
    if not path.is_dir():
        raise DataFormatError(f"not a subject directory: {path}")
    meta_path = path / "meta.txt"
    if not meta_path.is_file():
        raise DataFormatError(f"missing file: {meta_path}")
    meta: dict[str, str] = {}
    for lineno, line in enumerate(meta_path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFormatError(f"meta.txt: malformed line {lineno}: {line!r}")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    for key in ("subject", "ppg_rate_hz", "label_rate_hz"):
        if key not in meta:
            raise DataFormatError(f"meta.txt: missing key '{key}'")
    try:
        subject_id = int(meta["subject"])
        ppg_rate = int(meta["ppg_rate_hz"])
        label_rate = int(meta["label_rate_hz"])
    except ValueError as exc:
        raise DataFormatError(f"meta.txt: non-integer value ({exc})") from None
    if ppg_rate != PPG_RATE_HZ or label_rate != LABEL_RATE_HZ:
        raise DataFormatError(
            f"meta.txt declares rates {ppg_rate}/{label_rate} Hz, "
            f"expected {PPG_RATE_HZ}/{LABEL_RATE_HZ}"
        )
    ppg = _read_column(path / "ppg.csv", np.float64, float, "value")
    labels = _read_column(path / "labels.csv", np.int64, int, "label")
    bad = np.flatnonzero((labels < 0) | (labels > 4))
    if bad.size:
        raise DataFormatError(
            f"labels.csv: label out of range at line {bad[0] + 1}: {int(labels[bad[0]])}"
        )
    return SubjectRecord(subject_id, ppg, labels)


def label_at_ppg_index(record: SubjectRecord, n: int) -> int:
    """Raw label governing PPG sample ``n`` (categorical decimation, no interpolation)."""
    if not 0 <= n < record.ppg.size:
        raise IndexError(f"ppg index {n} out of range [0, {record.ppg.size})")
    idx = (n * record.label_rate_hz) // record.ppg_rate_hz
    if idx >= record.labels.size:
        idx = record.labels.size - 1
    return int(record.labels[idx])


def labels_at_ppg_rate(record: SubjectRecord) -> np.ndarray:
    """Raw label for every PPG sample index, as one vector."""
    idx = (np.arange(record.ppg.size, dtype=np.int64) * record.label_rate_hz) // record.ppg_rate_hz
    np.minimum(idx, record.labels.size - 1, out=idx)
    return record.labels[idx]


def per_raw_label_sample_counts(record: SubjectRecord) -> dict[int, int]:
    """Number of PPG samples (64 Hz domain) governed by each raw label."""
    aligned = labels_at_ppg_rate(record)
    return {raw: int(np.count_nonzero(aligned == raw)) for raw in range(5)}


def cut_frames(
    record: SubjectRecord, class_map: ClassMap, frame_size: int, hop: int
) -> FrameSet:
    """Slide a window over the PPG and keep pure, non-excluded frames.

    A window is emitted only when every covered sample carries the same raw
    label (mixed windows at condition transitions are dropped) and that label
    maps to a task class.
    """
    if frame_size < 2:
        raise ValueError(f"frame_size must be >= 2, got {frame_size}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    n = record.ppg.size
    if frame_size > n:
        return FrameSet(
            [],
            class_map,
            frame_size,
            hop,
            short_signal=True,
            warnings=[f"frame size {frame_size} exceeds signal length {n}"],
        )
    aligned = labels_at_ppg_rate(record)
    # window [s, s+F) is pure iff the label-change count does not move across it
    changes = np.concatenate(([0], np.cumsum(np.diff(aligned) != 0)))
    frames: list[Frame] = []
    for start in range(0, n - frame_size + 1, hop):
        if changes[start + frame_size - 1] != changes[start]:
            continue
        cls = class_map.class_of(int(aligned[start]))
        if cls is None:
            continue
        frames.append(
            Frame(record.ppg[start : start + frame_size].copy(), cls, record.subject_id, start)
        )
    out = FrameSet(frames, class_map, frame_size, hop)
    for name in out.missing_classes():
        out.warnings.append(f"class '{name}' has no frames")
    return out


TRAIN_FRACTION = 0.4


def split_40_60(frames: FrameSet) -> Split:
    """Chronological 40/60 split per (subject, class).

    The boundary sits at 40% of each group's covered sample span; frames
    entirely before it train, frames entirely after it test, and frames
    straddling it are dropped so the two sides never share a sample.
    """
    if not frames.frames:
        raise SplitError("cannot split an empty frame set")
    groups: dict[tuple[int, int], list[Frame]] = {}
    for f in frames.frames:
        groups.setdefault((f.subject_id, f.class_index), []).append(f)
    train_keep: set[int] = set()
    test_keep: set[int] = set()
    index_of = {id(f): i for i, f in enumerate(frames.frames)}
    for group in groups.values():
        lo = min(f.start_index for f in group)
        hi = max(f.end_index for f in group)
        boundary = lo + TRAIN_FRACTION * (hi - lo)
        for f in group:
            if f.end_index <= boundary:
                train_keep.add(index_of[id(f)])
            elif f.start_index >= boundary:
                test_keep.add(index_of[id(f)])
    train = [f for i, f in enumerate(frames.frames) if i in train_keep]
    test = [f for i, f in enumerate(frames.frames) if i in test_keep]
    for name in frames.class_map.class_names:
        cls = frames.class_map.class_names.index(name)
        if any(f.class_index == cls for f in frames.frames):
            if not any(f.class_index == cls for f in test):
                raise SplitError(f"class '{name}' has empty test side")
            if not any(f.class_index == cls for f in train):
                raise SplitError(f"class '{name}' has empty train side")
    make = lambda fs: FrameSet(fs, frames.class_map, frames.frame_size, frames.hop)
    return Split(train=make(train), test=make(test))


def pool_subjects(
    records: list[SubjectRecord], class_map: ClassMap, frame_size: int, hop: int
) -> FrameSet:
    """Merge several subjects' frames, ordered class-major then subject then time."""
    if len(records) < 2:
        raise ValueError("pooling needs at least 2 subjects")
    seen: set[int] = set()
    for r in records:
        if r.subject_id in seen:
            raise ValueError(f"duplicate subject id {r.subject_id}")
        seen.add(r.subject_id)
    frames: list[Frame] = []
    warnings: list[str] = []
    short = False
    for r in records:
        fs = cut_frames(r, class_map, frame_size, hop)
        frames.extend(fs.frames)
        short = short or fs.short_signal
        warnings.extend(w for w in fs.warnings if "has no frames" not in w)
    frames.sort(key=lambda f: (f.class_index, f.subject_id, f.start_index))
    out = FrameSet(frames, class_map, frame_size, hop, short_signal=short, warnings=warnings)
    for name in out.missing_classes():
        out.warnings.append(f"class '{name}' has no frames")
    return out
