"""Seeded synthetic signals for exercising the pipeline without recordings.

Two generators: ready-made labeled frame sets with a clean spectral
separation between the classes (slow sine vs. broadband noise), and whole
fake subject records built from a label schedule so the ingestion, framing
and preprocessing paths run end to end.
"""

from __future__ import annotations

import numpy as np

from .dataset import (
    LABEL_RATE_HZ,
    PPG_RATE_HZ,
    ClassMap,
    ClassMode,
    Frame,
    FrameSet,
    SubjectRecord,
)


def make_sine_vs_noise_frames(
    n_per_class: int = 200,
    frame_size: int = 64,
    seed: int = 0,
    rate_hz: float = float(PPG_RATE_HZ),
) -> FrameSet:
    """A two-class set a small model should separate easily.

    Class 0 frames are slow sines (0.8-1.5 Hz, amplitude 0.6-0.9, random
    phase); class 1 frames are uniform noise of comparable energy. Start
    indices advance frame by frame within each class so the chronological
    splitter applies cleanly.
    """
    rng = np.random.default_rng(seed)
    cmap = ClassMap.for_mode(ClassMode.TWO)
    t = np.arange(frame_size) / rate_hz
    frames: list[Frame] = []
    for i in range(n_per_class):
        f0 = rng.uniform(0.8, 1.5)
        amp = rng.uniform(0.6, 0.9)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        frames.append(
            Frame(amp * np.sin(2.0 * np.pi * f0 * t + phase), 0, 2, i * frame_size)
        )
    for i in range(n_per_class):
        frames.append(
            Frame(rng.uniform(-0.75, 0.75, size=frame_size), 1, 2, i * frame_size)
        )
    return FrameSet(frames, cmap, frame_size, frame_size)


def make_labeled_record(
    subject_id: int,
    schedule: list[tuple[int, float]],
    seed: int = 0,
) -> SubjectRecord:
    """A fake subject whose signal content tracks its label schedule.

    ``schedule`` is a list of (raw label, duration in seconds). Each segment
    gets a sine whose frequency depends on the label (1 + 0.4*label Hz) plus
    mild noise, so downstream models have something to latch onto.
    """
    if not schedule:
        raise ValueError("schedule must have at least one segment")
    rng = np.random.default_rng(seed)
    ppg_parts: list[np.ndarray] = []
    label_parts: list[np.ndarray] = []
    t0 = 0.0
    for raw, seconds in schedule:
        if raw not in range(5):
            raise ValueError(f"raw label {raw} outside 0..4")
        if seconds <= 0:
            raise ValueError(f"segment duration must be positive, got {seconds}")
        n = int(round(seconds * PPG_RATE_HZ))
        t = t0 + np.arange(n) / PPG_RATE_HZ
        freq = 1.0 + 0.4 * raw
        ppg_parts.append(
            np.sin(2.0 * np.pi * freq * t) + 0.1 * rng.standard_normal(n)
        )
        label_parts.append(np.full(int(round(seconds * LABEL_RATE_HZ)), raw, dtype=np.int64))
        t0 += seconds
    return SubjectRecord(
        subject_id, np.concatenate(ppg_parts), np.concatenate(label_parts)
    )
