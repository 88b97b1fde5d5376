"""Native WESAD archives in, portable subject directories out."""

from .convert import (
    ArchiveError,
    ConversionSummary,
    EXCLUDED_SUBJECT_IDS,
    LABEL_RATE_HZ,
    PPG_RATE_HZ,
    RAW_LABEL_NAMES,
    REFERENCE_CLASS_COUNTS,
    class_counts_at_ppg_rate,
    convert_subject,
    fold_labels,
    read_archive,
    reference_notes,
)

__version__ = "0.1.0"

__all__ = [
    "ArchiveError",
    "ConversionSummary",
    "EXCLUDED_SUBJECT_IDS",
    "LABEL_RATE_HZ",
    "PPG_RATE_HZ",
    "RAW_LABEL_NAMES",
    "REFERENCE_CLASS_COUNTS",
    "class_counts_at_ppg_rate",
    "convert_subject",
    "fold_labels",
    "read_archive",
    "reference_notes",
]
