"""Conditioning a raw wrist pulse signal: scale, band-pass, smooth.

Builds a fake subject record, then walks through the three conditioning
stages one at a time so the numbers are visible. Run it directly:

    python3 demos/01_signal_conditioning.py
"""

import numpy as np

from ppgstress import (
    PreprocessSettings,
    design_bandpass,
    design_to_text,
    make_labeled_record,
    moving_average,
    normalize,
    preprocess_record,
)

# a two minute recording: rest, stress, rest
record = make_labeled_record(2, [(1, 60.0), (2, 30.0), (1, 30.0)], seed=7)
print(f"subject {record.subject_id}: {record.ppg.size} samples at 64 Hz "
      f"({record.ppg.size / 64.0:.0f} s)")
print(f"raw range: [{record.ppg.min():.3f}, {record.ppg.max():.3f}]")

# stage 1: map the raw range onto [-1, 1]
scaled, stats = normalize(record.ppg)
print(f"\nafter scaling: [{scaled.min():.3f}, {scaled.max():.3f}] "
      f"(lo={stats.lo:.3f}, hi={stats.hi:.3f})")

# stage 2: band-pass 0.5-8 Hz. Pulse content lives there; drift and most
# motion junk do not.
design = design_bandpass()
print(f"\nfilter: {len(design.sections)} biquad sections, "
      f"order {design.order}, band {design.passband_hz} Hz")
for i, s in enumerate(design.sections):
    print(f"  section {i}: pole radius {s.pole_radius():.4f}")

probe = np.array([0.01, 0.1, 0.5, 1.2, 4.0, 8.0, 16.0, 31.99])
gains = design.response_db(probe)
print("\nfrequency response:")
for f, g in zip(probe, gains):
    print(f"  {f:6.2f} Hz  {g:8.2f} dB")

# the full text form round-trips through files; this is what the command
# line interface writes next to conditioned recordings
print("\nportable description:")
print(design_to_text(design, coefficients=False))

# stage 3: a short moving average takes the edge off sample noise
smooth = moving_average(scaled, 5)
print(f"smoothing kept the length: {scaled.size} -> {smooth.size}")

# or do all three in one call, the way the pipeline does
conditioned, used = preprocess_record(record, PreprocessSettings())
print(f"one-call pipeline: finite={np.isfinite(conditioned.ppg).all()}, "
      f"range [{conditioned.ppg.min():.3f}, {conditioned.ppg.max():.3f}], "
      f"labels untouched ({conditioned.labels.size} at 700 Hz)")
