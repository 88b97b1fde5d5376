"""Command line front door: `wesad-convert [--out DIR] archive [archive ...]`.

Archives convert independently; a broken one does not stop the rest, it
just turns the exit code to 2 once everything else has been tried.
"""

from __future__ import annotations

import argparse
import sys

from .convert import ArchiveError, convert_subject, reference_notes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wesad-convert",
        description="convert native WESAD subject archives (S<N>.pkl) into "
        "portable S<N>/ directories of ppg.csv, labels.csv and meta.txt",
    )
    parser.add_argument("archives", nargs="+", metavar="archive",
                        help="per-subject pickle files")
    parser.add_argument("--out", default=".",
                        help="directory to create S<N>/ under (default: .)")
    return parser


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    failures = 0
    for archive in args.archives:
        try:
            summary = convert_subject(archive, args.out)
        except (ArchiveError, OSError) as exc:
            print(f"error: {archive}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(summary.to_text())
        for note in reference_notes(summary):
            print(f"note: {note}")
    return 2 if failures else 0


def main() -> None:
    sys.exit(run())
