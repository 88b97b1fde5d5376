"""Signal conditioning: range normalization, smoothing, and an IIR band-pass
implemented as a cascade of second-order sections.

The band-pass is a Chebyshev type II design. Its stopband attenuation is the
thing being specified: outside the passband the response is guaranteed down by
at least ``atten_db``, while the passband stays monotone (no ripple there).
Sections are ordered by pole radius, least resonant first, so intermediate
signals stay tame.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .dataset import SubjectRecord


class FilterDesignError(ArithmeticError):
    """The requested filter could not be realized as a stable cascade."""


class NonFiniteSignalError(ArithmeticError):
    """A NaN or infinity appeared while filtering."""


@dataclass
class NormalizationStats:
    """Per-record range statistics captured by :func:`normalize`."""

    lo: float
    hi: float
    out_of_range: int = 0

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map further samples with the captured range, counting escapees."""
        x = np.asarray(x, dtype=np.float64)
        self.out_of_range += int(np.count_nonzero((x < self.lo) | (x > self.hi)))
        return 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0


def normalize(x: np.ndarray) -> tuple[np.ndarray, NormalizationStats]:
    """Affine map of ``x`` onto [-1, 1] by its own min/max."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least 2 samples to normalize")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteSignalError(f"non-finite input sample at index {bad}")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise ValueError("constant signal has no range to normalize")
    stats = NormalizationStats(lo=lo, hi=hi)
    return stats.apply(x), stats


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving mean with shrunken windows at the edges.

    ``window`` must be odd so the window centers on a sample. Output length
    equals input length; near the ends the mean is taken over however much of
    the window actually overlaps the signal.
    """
    x = np.asarray(x, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window > x.size:
        raise ValueError(f"window {window} longer than signal ({x.size} samples)")
    if window == 1:
        return x.copy()
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(x.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, x.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


@dataclass(frozen=True)
class BiquadSection:
    """One direct-form-II-transposed second-order section.

    Coefficients follow the usual convention: ``b0,b1,b2`` feed-forward,
    ``a1,a2`` feedback with the leading denominator coefficient already
    normalized to one.
    """

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def __post_init__(self):
        r = self.pole_radius()
        if r >= 1.0:
            raise FilterDesignError(
                f"unstable section: pole modulus {r:.6f} not inside the unit circle"
            )

    def pole_radius(self) -> float:
        roots = np.roots([1.0, self.a1, self.a2])
        return float(np.max(np.abs(roots))) if roots.size else 0.0

    def coefficients(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2, 1.0, self.a1, self.a2])

    def step(self, x: float, state: np.ndarray) -> float:
        """Advance one sample, mutating the 2-element ``state`` vector."""
        y = self.b0 * x + state[0]
        state[0] = self.b1 * x - self.a1 * y + state[1]
        state[1] = self.b2 * x - self.a2 * y
        return y


@dataclass(frozen=True)
class FilterDesign:
    """A realized band-pass: its design parameters and section cascade."""

    passband_hz: tuple[float, float]
    atten_db: float
    order: int
    rate_hz: float
    sections: tuple[BiquadSection, ...]

    def sos(self) -> np.ndarray:
        return np.stack([s.coefficients() for s in self.sections])

    def response_db(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Magnitude response in dB at the given frequencies."""
        w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / self.rate_hz
        _, h = sps.sosfreqz(self.sos(), worN=w)
        mag = np.abs(h)
        return 20.0 * np.log10(np.maximum(mag, 1e-300))


DEFAULT_PASSBAND_HZ = (0.5, 8.0)
DEFAULT_ATTEN_DB = 30.0
DEFAULT_ORDER = 4


def design_bandpass(
    passband_hz: tuple[float, float] = DEFAULT_PASSBAND_HZ,
    atten_db: float = DEFAULT_ATTEN_DB,
    order: int = DEFAULT_ORDER,
    rate_hz: float = 64.0,
) -> FilterDesign:
    """Design the Chebyshev II band-pass as ordered second-order sections.

    ``order`` is the total band-pass order and must be even (each
    second-order section realizes two of it). ``passband_hz`` gives the
    frequencies at which the response has fallen to exactly ``atten_db``;
    outside them it stays at least that far down, inside it rises
    monotonically toward unity at the band center. At low orders the rise is
    gradual, so the flat region is narrower than the stated band.
    """
    lo, hi = float(passband_hz[0]), float(passband_hz[1])
    nyq = rate_hz / 2.0
    if not (0.0 < lo < hi < nyq):
        raise FilterDesignError(
            f"band edges ({lo}, {hi}) Hz must satisfy 0 < lo < hi < {nyq} (Nyquist)"
        )
    if order < 2 or order % 2:
        raise FilterDesignError(f"order must be even and >= 2, got {order}")
    if atten_db <= 0:
        raise FilterDesignError(f"attenuation must be positive dB, got {atten_db}")
    z, p, k = sps.cheby2(
        order // 2, atten_db, (lo, hi), btype="bandpass", fs=rate_hz, output="zpk"
    )
    if np.any(np.abs(p) >= 1.0):
        raise FilterDesignError(
            f"design produced poles on/outside the unit circle "
            f"(max modulus {float(np.max(np.abs(p))):.6f})"
        )
    sos = sps.zpk2sos(z, p, k)
    # normalize each row's a0 to 1 and order sections least-resonant first
    sos = sos / sos[:, 3:4]
    radii = [
        float(np.max(np.abs(np.roots([1.0, row[4], row[5]])))) for row in sos
    ]
    sections = tuple(
        BiquadSection(row[0], row[1], row[2], row[4], row[5])
        for _, row in sorted(zip(radii, sos.tolist()), key=lambda t: t[0])
    )
    return FilterDesign((lo, hi), float(atten_db), order, float(rate_hz), sections)


def apply_filter(design: FilterDesign, x: np.ndarray) -> np.ndarray:
    """Run the cascade over ``x`` section by section, from rest.

    After every section the intermediate signal is scanned for NaN/inf so a
    blow-up is reported with the section and the first offending sample.
    """
    y = np.asarray(x, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"expected a 1-d signal, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise NonFiniteSignalError(f"non-finite input sample at index {bad}")
    for si, sec in enumerate(design.sections):
        y = sps.lfilter([sec.b0, sec.b1, sec.b2], [1.0, sec.a1, sec.a2], y)
        finite = np.isfinite(y)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise NonFiniteSignalError(
                f"section {si} produced a non-finite value at sample {bad}"
            )
    return y


def design_to_text(design: FilterDesign, coefficients: bool = True) -> str:
    """Line-based key=value dump of a design, optionally with its sections.

    Coefficient lines carry ``b0 b1 b2 a1 a2`` at 17 significant digits,
    one section per line, in cascade order.
    """
    lo, hi = design.passband_hz
    lines = [
        "kind=cheby2",
        f"order={design.order}",
        f"band={lo:g},{hi:g}",
        f"atten_db={design.atten_db:g}",
        f"fs={design.rate_hz:g}",
    ]
    if coefficients:
        lines.append("sections=" + str(len(design.sections)))
        for s in design.sections:
            lines.append(
                " ".join(f"{c:.17g}" for c in (s.b0, s.b1, s.b2, s.a1, s.a2))
            )
    return "\n".join(lines) + "\n"


def design_from_text(text: str) -> FilterDesign:
    """Rebuild a design from its key=value dump.

    The design is re-derived from the stated parameters; any coefficient
    lines present are checked for count and close agreement so a stale or
    hand-edited dump fails loudly instead of silently diverging.
    """
    kv: dict[str, str] = {}
    coeff_lines: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
        else:
            coeff_lines.append(line)
    for key in ("kind", "order", "band", "atten_db", "fs"):
        if key not in kv:
            raise FilterDesignError(f"filter text missing key '{key}'")
    if kv["kind"] != "cheby2":
        raise FilterDesignError(f"unknown filter kind '{kv['kind']}'")
    try:
        lo, hi = (float(p) for p in kv["band"].split(","))
        design = design_bandpass(
            (lo, hi), float(kv["atten_db"]), int(kv["order"]), float(kv["fs"])
        )
    except ValueError as exc:
        raise FilterDesignError(f"malformed filter text ({exc})") from None
    if coeff_lines:
        if len(coeff_lines) != len(design.sections):
            raise FilterDesignError(
                f"filter text lists {len(coeff_lines)} sections, "
                f"design has {len(design.sections)}"
            )
        stated = np.array([[float(c) for c in line.split()] for line in coeff_lines])
        own = np.array(
            [[s.b0, s.b1, s.b2, s.a1, s.a2] for s in design.sections]
        )
        if stated.shape != own.shape or not np.allclose(stated, own, atol=1e-12):
            raise FilterDesignError(
                "coefficient lines disagree with the stated design parameters"
            )
    return design


DEFAULT_SMOOTH_WINDOW = 5


@dataclass(frozen=True)
class PreprocessSettings:
    """Knobs for :func:`preprocess_record`."""

    filtered: bool = True
    smooth_window: int = DEFAULT_SMOOTH_WINDOW
    passband_hz: tuple[float, float] = DEFAULT_PASSBAND_HZ
    atten_db: float = DEFAULT_ATTEN_DB
    order: int = DEFAULT_ORDER


def preprocess_record(
    record: SubjectRecord, settings: PreprocessSettings = PreprocessSettings()
) -> tuple[SubjectRecord, FilterDesign | None]:
    """Condition a subject's PPG: normalize, then optionally smooth + band-pass.

    Returns the record with its ``ppg`` replaced and the filter design used
    (``None`` when ``settings.filtered`` is off, in which case only the range
    normalization runs).
    """
    x, _ = normalize(record.ppg)
    design = None
    if settings.filtered:
        x = moving_average(x, settings.smooth_window)
        design = design_bandpass(
            settings.passband_hz, settings.atten_db, settings.order, float(record.ppg_rate_hz)
        )
        x = apply_filter(design, x)
    return dataclasses.replace(record, ppg=x), design
