"""Running benchmark rows end to end against subject directories.

Fakes three subjects on disk in the portable layout (ppg.csv, labels.csv,
meta.txt per S<id> directory), then runs two small grid rows over them and
renders the result table. With real recordings in place of the fakes this
is exactly what `ppgstress grid` does, over the full default row set.
"""

import tempfile
from pathlib import Path

from ppgstress import (
    ClassMode,
    DEFAULT_GRID,
    GridRow,
    TrainConfig,
    make_labeled_record,
    render_grid,
    run_row,
)

SCHEDULE = [
    (1, 25.0), (2, 20.0), (3, 15.0), (4, 15.0),
    (1, 25.0), (2, 20.0), (3, 15.0), (4, 15.0),
]


def fake_subject(root: Path, sid: int) -> None:
    rec = make_labeled_record(sid, SCHEDULE, seed=sid)
    d = root / f"S{sid}"
    d.mkdir()
    (d / "ppg.csv").write_text("".join(f"{float(v)!r}\n" for v in rec.ppg))
    (d / "labels.csv").write_text("".join(f"{int(v)}\n" for v in rec.labels))
    (d / "meta.txt").write_text(
        f"subject={sid}\nppg_rate_hz=64\nlabel_rate_hz=700\n"
    )


rows = (
    GridRow(row=1, subjects=(2,), mode=ClassMode.TWO,
            n_cnn=3, n_mlp=3, frame_size=64, kernel_size=16, filtered=True),
    GridRow(row=2, subjects="all", mode=ClassMode.THREE,
            n_cnn=3, n_mlp=3, frame_size=64, kernel_size=16, filtered=True),
    # a row with an impossible shape, to show failures stay in the table
    GridRow(row=3, subjects=(2,), mode=ClassMode.TWO,
            n_cnn=4, n_mlp=3, frame_size=32, kernel_size=16, filtered=True),
)

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    for sid in (2, 3, 4):
        fake_subject(root, sid)

    results = []
    for row in rows:
        result, net, report = run_row(
            root, row, TrainConfig(max_iterations=40, shuffle_seed=0), seed=0
        )
        results.append(result)
        if result.error:
            print(f"row {row.row}: {result.error}")
        else:
            print(f"row {row.row}: {report.epochs_run} epochs, "
                  f"test {result.test_accuracy:.1%}")

    print()
    print(render_grid(results))

print(f"\nthe default benchmark has {len(DEFAULT_GRID)} rows; "
      f"row 4 for instance is:")
r = DEFAULT_GRID[3]
print(f"  subjects={r.subjects} classes={r.mode.value} n_cnn={r.n_cnn} "
      f"n_mlp={r.n_mlp} frame={r.frame_size} kernel={r.kernel_size}")
