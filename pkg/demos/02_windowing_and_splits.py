"""From labeled recordings to train/test frames.

Shows the windowing rules on a schedule with label changes: windows that
straddle a change are dropped, labels a class map excludes are skipped,
and the chronological 40/60 split keeps train strictly before test inside
every (subject, class) group.
"""

import numpy as np

from ppgstress import (
    ClassMap,
    ClassMode,
    cut_frames,
    make_labeled_record,
    pool_subjects,
    split_40_60,
)

schedule = [
    (1, 20.0),   # baseline
    (0, 3.0),    # transient: its own class in five-class mode, dropped below
    (2, 15.0),   # stress
    (3, 10.0),   # amusement
    (4, 12.0),   # meditation
    (1, 20.0),
    (2, 15.0),
    (3, 10.0),
    (4, 12.0),
]
record = make_labeled_record(2, schedule, seed=3)

cmap = ClassMap.for_mode(ClassMode.FIVE)
frames = cut_frames(record, cmap, frame_size=64, hop=4)
print(f"{len(frames)} pure windows of 64 samples, hop 4")
print("per class:", frames.frame_count_by_class())
for w in frames.warnings:
    print("warning:", w)

# windows are pure: every sample inside carries the window's class
first = frames.frames[0]
print(f"\nfirst window: class {first.class_index} "
      f"({cmap.class_names[first.class_index]}), samples "
      f"[{first.start_index}, {first.end_index})")

# the two-class map keeps stress vs everything-but-transient
two = cut_frames(record, ClassMap.for_mode(ClassMode.TWO), 64, 4)
print("\ntwo-class counts:", two.frame_count_by_class())

# chronological split: first 40% of each (subject, class) span trains,
# the rest tests, windows across the boundary are dropped
split = split_40_60(two)
print(f"\nsplit: {len(split.train)} train / {len(split.test)} test")
for side, fs in (("train", split.train), ("test", split.test)):
    by_class = fs.frame_count_by_class()
    print(f"  {side}: {by_class}")

# no window leaks across the boundary
for ci in range(two.class_map.n_classes):
    train_ends = [f.end_index for f in split.train.frames if f.class_index == ci]
    test_starts = [f.start_index for f in split.test.frames if f.class_index == ci]
    if train_ends and test_starts:
        assert max(train_ends) <= min(test_starts)
        print(f"  class {ci}: last train end {max(train_ends)} <= "
              f"first test start {min(test_starts)}")

# several subjects pool into one chronology-per-subject set
others = [make_labeled_record(s, schedule, seed=s) for s in (3, 4)]
pooled = pool_subjects([record] + others, two.class_map, 64, 4)
print(f"\npooled over subjects 2, 3, 4: {len(pooled)} windows, "
      f"counts {pooled.frame_count_by_class()}")
