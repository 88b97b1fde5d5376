"""Extract the wrist pulse channel from native WESAD subject archives.

The archives are per-subject Python pickles holding every recorded channel.
Exactly two things survive the trip into the portable directory format:
the wrist blood-volume-pulse trace at 64 Hz and the condition labels at
700 Hz. Chest-device channels, the other wrist modalities and the
questionnaire files are out of scope.

No resampling happens anywhere: both vectors are copied at native rate.
The only value-level change is label folding: the recording protocol marks
screening stretches with labels above 4, and those fold into the transient
bucket (label 0) so the output stays within the five condition labels the
portable format carries.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PPG_RATE_HZ = 64
LABEL_RATE_HZ = 700
RAW_LABEL_NAMES = ("transient", "baseline", "stress", "amusement", "meditation")
EXCLUDED_SUBJECT_IDS = (1, 12)
MAX_DURATION_MISMATCH_S = 1.0


class ArchiveError(ValueError):
    """The archive is missing, malformed, or not one we convert."""


# Per-class 64 Hz sample counts previously published for three subjects,
# keyed by subject id, ordered by raw label 0..4. Fresh conversions are
# compared against these as a tripwire for silent dataset or mapping
# changes. The subject 17 amusement figure is suspect: it is roughly ten
# times every other subject's amusement span, which smells like a digit
# slip in the published tally. A mismatch there is reported as expected
# rather than treated as a conversion bug; the measured value always wins.
REFERENCE_CLASS_COUNTS: dict[int, tuple[int, ...]] = {
    2: (195456, 73152, 39296, 23104, 49024),
    3: (213952, 72896, 40896, 23936, 49792),
    17: (174784, 75520, 46208, 237440, 46656),
}
SUSPECT_REFERENCES = {(17, 3)}


@dataclass(frozen=True)
class ConversionSummary:
    """What one conversion produced, in numbers.

    ``class_counts`` are 64 Hz sample tallies per raw label 0..4, computed
    with the same floor(n * 700 / 64) index mapping the downstream loader
    uses, so the two always agree. ``folded_label_count`` says how many
    700 Hz label samples sat above 4 and were folded into label 0.
    """

    subject_id: int
    ppg_sample_count: int
    label_sample_count: int
    class_counts: tuple[int, ...]
    folded_label_count: int = 0

    def __post_init__(self):
        if len(self.class_counts) != len(RAW_LABEL_NAMES):
            raise ValueError(
                f"expected {len(RAW_LABEL_NAMES)} class counts, "
                f"got {len(self.class_counts)}"
            )
        if sum(self.class_counts) != self.ppg_sample_count:
            raise ValueError(
                f"class counts sum to {sum(self.class_counts)} "
                f"but the signal has {self.ppg_sample_count} samples"
            )

    def to_text(self) -> str:
        lines = [
            f"subject {self.subject_id}",
            f"  ppg samples    {self.ppg_sample_count} "
            f"({self.ppg_sample_count / PPG_RATE_HZ:.1f} s at {PPG_RATE_HZ} Hz)",
            f"  label samples  {self.label_sample_count} (at {LABEL_RATE_HZ} Hz)",
        ]
        for name, count in zip(RAW_LABEL_NAMES, self.class_counts):
            lines.append(f"  {name:<12} {count}")
        if self.folded_label_count:
            lines.append(
                f"  folded {self.folded_label_count} screening label samples "
                f"(>4) into transient"
            )
        return "\n".join(lines)


def _parse_subject_id(value) -> int:
    if isinstance(value, bytes):
        value = value.decode("ascii", "replace")
    if isinstance(value, str):
        value = value.strip().lstrip("Ss")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ArchiveError(f"cannot read a subject id out of {value!r}") from None


def read_archive(path: str | Path) -> tuple[int, np.ndarray, np.ndarray]:
    """Pull (subject id, 64 Hz pulse trace, raw 700 Hz labels) from a pickle.

    Labels come back exactly as stored, screening values included; folding
    is the caller's business. Every structural assumption is checked and
    the error names the missing or broken piece.
    """
    path = Path(path)
    if not path.is_file():
        raise ArchiveError(f"no such archive: {path}")
    try:
        with open(path, "rb") as fh:
            data = pickle.load(fh, encoding="latin1")
    except Exception as exc:
        raise ArchiveError(f"{path.name} is not a readable pickle: {exc}") from None
    if not isinstance(data, dict):
        raise ArchiveError(f"{path.name}: expected a dict, got {type(data).__name__}")
    for key in ("signal", "label", "subject"):
        if key not in data:
            raise ArchiveError(f"{path.name}: archive has no '{key}' entry")
    subject_id = _parse_subject_id(data["subject"])
    wrist = data["signal"].get("wrist") if isinstance(data["signal"], dict) else None
    if not isinstance(wrist, dict):
        raise ArchiveError(f"{path.name}: archive has no wrist channel block")
    if "BVP" not in wrist:
        raise ArchiveError(f"{path.name}: wrist block has no BVP channel")
    bvp = np.asarray(wrist["BVP"], dtype=np.float64)
    if bvp.ndim == 2 and bvp.shape[1] == 1:
        bvp = bvp[:, 0]
    if bvp.ndim != 1 or bvp.size == 0:
        raise ArchiveError(
            f"{path.name}: BVP should be a single column, got shape {bvp.shape}"
        )
    bad = np.flatnonzero(~np.isfinite(bvp))
    if bad.size:
        raise ArchiveError(f"{path.name}: non-finite BVP sample at index {bad[0]}")
    labels = np.asarray(data["label"]).ravel()
    if labels.size == 0:
        raise ArchiveError(f"{path.name}: empty label vector")
    if not np.issubdtype(labels.dtype, np.integer):
        rounded = np.rint(labels)
        if not np.allclose(labels, rounded, atol=0.0):
            raise ArchiveError(f"{path.name}: labels are not integers")
        labels = rounded
    labels = labels.astype(np.int64)
    if labels.min() < 0:
        raise ArchiveError(f"{path.name}: negative label {labels.min()}")
    return subject_id, bvp, labels


def fold_labels(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Map screening labels (>4) onto the transient bucket (0)."""
    over = labels > 4
    folded = np.where(over, 0, labels)
    return folded, int(np.count_nonzero(over))


def class_counts_at_ppg_rate(
    n_ppg: int, labels: np.ndarray
) -> tuple[int, ...]:
    """64 Hz sample count per raw label, via the floor(n*700/64) mapping."""
    idx = (np.arange(n_ppg, dtype=np.int64) * LABEL_RATE_HZ) // PPG_RATE_HZ
    aligned = labels[np.minimum(idx, labels.size - 1)]
    return tuple(int(np.count_nonzero(aligned == raw)) for raw in range(5))


def convert_subject(archive_path: str | Path, out_root: str | Path) -> ConversionSummary:
    """Convert one archive into ``out_root/S<id>/`` and summarize it.

    Reconversion is byte-identical: nothing written depends on time, host
    or the archive's location. Subjects 1 and 12 are refused up front; the
    dataset's usable roster excludes them (sensor malfunction during
    recording), so converting them would only poison downstream pools.
    """
    subject_id, bvp, raw_labels = read_archive(archive_path)
    if subject_id in EXCLUDED_SUBJECT_IDS:
        raise ArchiveError(
            f"subject {subject_id} is excluded from the usable roster "
            f"(sensor malfunction during recording); refusing to convert"
        )
    mismatch = abs(bvp.size / PPG_RATE_HZ - raw_labels.size / LABEL_RATE_HZ)
    if mismatch > MAX_DURATION_MISMATCH_S:
        raise ArchiveError(
            f"pulse and label streams disagree on duration by {mismatch:.2f} s"
        )
    labels, n_folded = fold_labels(raw_labels)
    counts = class_counts_at_ppg_rate(bvp.size, labels)

    out_dir = Path(out_root) / f"S{subject_id}"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ppg.csv").write_text("".join(f"{float(v)!r}\n" for v in bvp))
    (out_dir / "labels.csv").write_text("".join(f"{int(v)}\n" for v in labels))
    (out_dir / "meta.txt").write_text(
        f"subject={subject_id}\n"
        f"ppg_rate_hz={PPG_RATE_HZ}\n"
        f"label_rate_hz={LABEL_RATE_HZ}\n"
    )
    return ConversionSummary(
        subject_id=subject_id,
        ppg_sample_count=int(bvp.size),
        label_sample_count=int(labels.size),
        class_counts=counts,
        folded_label_count=n_folded,
    )


def reference_notes(summary: ConversionSummary) -> list[str]:
    """Compare a summary against the published tallies, where we have them.

    Returns one line per disagreement; matching subjects and subjects with
    no reference entry return nothing. Disagreements on entries that are
    themselves suspect say so instead of crying wolf.
    """
    expected = REFERENCE_CLASS_COUNTS.get(summary.subject_id)
    if expected is None:
        return []
    notes = []
    for raw, (name, got, want) in enumerate(
        zip(RAW_LABEL_NAMES, summary.class_counts, expected)
    ):
        if got == want:
            continue
        line = f"{name}: measured {got}, published {want}"
        if (summary.subject_id, raw) in SUSPECT_REFERENCES:
            line += " (published figure is suspect; measured value kept)"
        notes.append(line)
    return notes
