"""Shared numeric kernels: detrending, Butterworth design, zero-phase
filtering, Welch spectral estimation, band integration, Pearson correlation.

Everything here is pure and reentrant. Filters are represented as cascades
of second-order sections (SOS) so higher orders stay numerically stable.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantInput,
    EmptyBand,
    InvalidCutoff,
    InvalidOrder,
    LengthMismatch,
    SignalTooShort,
)


class FilterKind(enum.Enum):
    LOW_PASS = "low_pass"
    BAND_PASS = "band_pass"


@dataclass(frozen=True)
class FilterDesign:
    """A digital Butterworth filter as a cascade of second-order sections.

    ``sos`` has shape (n_sections, 6): rows are ``b0 b1 b2 1 a1 a2`` with the
    denominator normalized to a leading 1. All poles lie strictly inside the
    unit circle.
    """

    order: int
    kind: FilterKind
    cutoffs_hz: tuple[float, ...]
    sample_rate_hz: float
    sos: np.ndarray

    def poles(self) -> np.ndarray:
        """Denominator roots of every section, concatenated."""
        out = []
        for row in self.sos:
            a1, a2 = row[4], row[5]
            if a2 == 0.0 and a1 == 0.0:
                continue
            if a2 == 0.0:
                out.append(-a1)
            else:
                out.extend(np.roots([1.0, a1, a2]))
        return np.asarray(out, dtype=complex)


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectral density (units: signal^2 / Hz)."""

    freqs_hz: np.ndarray
    power: np.ndarray
    resolution_hz: float


# --- smoothness-priors detrending ---------------------------------------------

def detrend(signal, lam: float = 500.0) -> np.ndarray:
    """Remove the smooth trend from ``signal`` via regularized least squares.

    The trend is the minimizer of ``|z - x|^2 + lam^2 |D2 x|^2`` where D2 is
    the second-difference operator; larger ``lam`` removes only slower
    components. The residual has exactly zero mean (constants are in the
    null space of D2), and any straight line is removed entirely.
    """
    x = np.asarray(signal, dtype=float).ravel()
    n = x.size
    if n < 3:
        raise SignalTooShort(f"detrend needs >= 3 samples, got {n}")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    lam2 = lam * lam
    m = n - 2
    # bands of I + lam^2 * D2'D2 (pentadiagonal, symmetric positive definite)
    d0 = np.zeros(n)
    d0[0:m] += 1.0
    d0[1:m + 1] += 4.0
    d0[2:m + 2] += 1.0
    d1 = np.zeros(n - 1)
    d1[0:m] += -2.0
    d1[1:m + 1] += -2.0
    d2 = np.zeros(n - 2)
    d2[0:m] += 1.0
    d0 = 1.0 + lam2 * d0
    d1 = lam2 * d1
    d2 = lam2 * d2
    trend = _solve_pentadiag_spd(d0, d1, d2, x)
    # one refinement pass: the system is stiff for large lam
    resid = x - _pentadiag_matvec(d0, d1, d2, trend)
    trend = trend + _solve_pentadiag_spd(d0, d1, d2, resid)
    return x - trend


def _pentadiag_matvec(d0, d1, d2, v):
    out = d0 * v
    out[:-1] += d1 * v[1:]
    out[1:] += d1 * v[:-1]
    out[:-2] += d2 * v[2:]
    out[2:] += d2 * v[:-2]
    return out


def _solve_pentadiag_spd(d0, d1, d2, b):
    """Cholesky solve for a pentadiagonal SPD system given its three bands."""
    n = b.size
    l0 = np.empty(n)
    l1 = np.zeros(max(n - 1, 0))
    l2 = np.zeros(max(n - 2, 0))
    for j in range(n):
        v = d0[j]
        if j >= 1:
            v -= l1[j - 1] * l1[j - 1]
        if j >= 2:
            v -= l2[j - 2] * l2[j - 2]
        l0[j] = math.sqrt(v)
        if j + 1 < n:
            w = d1[j]
            if j >= 1:
                w -= l2[j - 1] * l1[j - 1]
            l1[j] = w / l0[j]
        if j + 2 < n:
            l2[j] = d2[j] / l0[j]
    # forward: L y = b
    y = np.empty(n)
    for j in range(n):
        s = b[j]
        if j >= 1:
            s -= l1[j - 1] * y[j - 1]
        if j >= 2:
            s -= l2[j - 2] * y[j - 2]
        y[j] = s / l0[j]
    # backward: L' x = y
    out = np.empty(n)
    for j in range(n - 1, -1, -1):
        s = y[j]
        if j + 1 < n:
            s -= l1[j] * out[j + 1]
        if j + 2 < n:
            s -= l2[j] * out[j + 2]
        out[j] = s / l0[j]
    return out


# --- Butterworth design --------------------------------------------------------

def design_butterworth(order: int, kind: FilterKind, cutoffs_hz,
                       sample_rate_hz: float) -> FilterDesign:
    """Design a digital Butterworth filter via the bilinear transform.

    Cutoffs are pre-warped so the digital magnitude response passes through
    the half-power point (-3.01 dB) exactly at the requested frequencies.
    ``order`` is the analog prototype order; a band-pass design therefore has
    ``2 * order`` poles.
    """
    if not isinstance(order, int) or order < 1:
        raise InvalidOrder(f"order must be a positive integer, got {order!r}")
    fs = float(sample_rate_hz)
    if fs <= 0 or not math.isfinite(fs):
        raise InvalidCutoff("sample rate must be positive and finite")
    cutoffs = tuple(float(c) for c in np.atleast_1d(cutoffs_hz))
    nyq = fs / 2.0
    for c in cutoffs:
        if not (0.0 < c < nyq):
            raise InvalidCutoff(f"cutoff {c} Hz outside (0, {nyq}) Hz")

    proto = [cmath.exp(1j * math.pi * (2 * k + order + 1) / (2 * order))
             for k in range(order)]

    if kind is FilterKind.LOW_PASS:
        if len(cutoffs) != 1:
            raise InvalidCutoff("low-pass takes exactly one cutoff")
        warped = 2.0 * fs * math.tan(math.pi * cutoffs[0] / fs)
        analog = [warped * p for p in proto]
        digital = [_bilinear_pole(p, fs) for p in analog]
        sections = _sections_from_poles(digital, numerator="lowpass")
        ref_omega = 0.0  # normalize at DC
    elif kind is FilterKind.BAND_PASS:
        if len(cutoffs) != 2 or not cutoffs[0] < cutoffs[1]:
            raise InvalidCutoff("band-pass takes (low, high) with low < high")
        w1 = 2.0 * fs * math.tan(math.pi * cutoffs[0] / fs)
        w2 = 2.0 * fs * math.tan(math.pi * cutoffs[1] / fs)
        bw, w0 = w2 - w1, math.sqrt(w1 * w2)
        analog = []
        for p in proto:
            half = p * bw / 2.0
            disc = cmath.sqrt(half * half - w0 * w0)
            analog.extend([half + disc, half - disc])
        digital = [_bilinear_pole(p, fs) for p in analog]
        sections = _sections_from_poles(digital, numerator="bandpass")
        ref_omega = 2.0 * math.atan(w0 / (2.0 * fs))  # center, rad/sample
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown filter kind {kind!r}")

    sos = np.array([_normalize_section(sec, ref_omega) for sec in sections])
    design = FilterDesign(order=order, kind=kind, cutoffs_hz=cutoffs,
                          sample_rate_hz=fs, sos=sos)
    if np.any(np.abs(design.poles()) >= 1.0):
        raise InvalidCutoff("design produced an unstable filter")
    return design


def _bilinear_pole(p: complex, fs: float) -> complex:
    return (2.0 * fs + p) / (2.0 * fs - p)


def _sections_from_poles(poles, numerator: str):
    """Group conjugate pole pairs into (num, den) section tuples.

    Low-pass sections put both zeros at z = -1; band-pass sections put one
    at z = +1 and one at z = -1. A leftover real pole (odd low-pass order)
    becomes a first-order section.
    """
    tol = 1e-9
    complex_poles = sorted((p for p in poles if p.imag > tol),
                           key=lambda p: (p.real, p.imag))
    real_poles = sorted(p.real for p in poles if abs(p.imag) <= tol)

    sections = []

    def add(den, first_order=False):
        if numerator == "lowpass":
            num = [1.0, 1.0, 0.0] if first_order else [1.0, 2.0, 1.0]
        else:
            num = [1.0, 0.0, -1.0]
        sections.append((num, list(den)))

    for p in complex_poles:
        add([1.0, -2.0 * p.real, abs(p) ** 2])
    i = 0
    while i + 1 < len(real_poles):
        r1, r2 = real_poles[i], real_poles[i + 1]
        add([1.0, -(r1 + r2), r1 * r2])
        i += 2
    if i < len(real_poles):
        add([1.0, -real_poles[i], 0.0], first_order=True)
    return sections


def _normalize_section(section, ref_omega: float):
    """Scale the numerator so section gain is exactly 1 at ``ref_omega``."""
    num, den = section
    z1 = cmath.exp(-1j * ref_omega)
    z2 = z1 * z1
    h_num = num[0] + num[1] * z1 + num[2] * z2
    h_den = den[0] + den[1] * z1 + den[2] * z2
    scale = abs(h_den) / abs(h_num)
    return [num[0] * scale, num[1] * scale, num[2] * scale,
            den[0], den[1], den[2]]


def frequency_response(design: FilterDesign, freqs_hz) -> np.ndarray:
    """Complex response of the cascade evaluated on the unit circle."""
    f = np.asarray(freqs_hz, dtype=float)
    z1 = np.exp(-2j * math.pi * f / design.sample_rate_hz)
    z2 = z1 * z1
    h = np.ones_like(z1, dtype=complex)
    for b0, b1, b2, _, a1, a2 in design.sos:
        h *= (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
    return h


# --- zero-phase filtering -------------------------------------------------------

def filtfilt(design: FilterDesign, signal) -> np.ndarray:
    """Forward-backward filtering: squared magnitude response, zero phase.

    Edges are extended with an odd reflection of length ``3 * (2*order + 1)``
    before filtering and trimmed afterwards; each pass starts from the
    steady state of its first sample so constants pass through exactly.
    """
    x = np.asarray(signal, dtype=float).ravel()
    padlen = 3 * (2 * design.order + 1)
    if x.size <= padlen:
        raise SignalTooShort(
            f"filtfilt needs more than {padlen} samples, got {x.size}")
    left = 2.0 * x[0] - x[padlen:0:-1]
    right = 2.0 * x[-1] - x[-2:-padlen - 2:-1]
    ext = np.concatenate([left, x, right])
    y = _sosfilt_steady(design.sos, ext)
    y = _sosfilt_steady(design.sos, y[::-1])[::-1]
    return y[padlen:padlen + x.size]


def _sosfilt_steady(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cascade of direct-form-II-transposed sections, steady-state initialized."""
    data = x.tolist()
    for b0, b1, b2, _, a1, a2 in sos:
        u0 = data[0]
        den_sum = 1.0 + a1 + a2
        gain = (b0 + b1 + b2) / den_sum
        y0 = gain * u0
        s1 = (b1 + b2) * u0 - (a1 + a2) * y0
        s2 = b2 * u0 - a2 * y0
        out = []
        append = out.append
        for xn in data:
            yn = b0 * xn + s1
            s1 = b1 * xn - a1 * yn + s2
            s2 = b2 * xn - a2 * yn
            append(yn)
        data = out
    return np.asarray(data)


# --- Welch power spectral density ------------------------------------------------

def welch_psd(signal, sample_rate_hz: float, segment_len: int | None = None,
              overlap_fraction: float = 0.5,
              demean_segments: bool = True) -> Spectrum:
    """Averaged Hann-windowed periodogram, one-sided, density scaled.

    With per-segment mean removal (the default) the estimate is invariant to
    constant offsets, and the rectangle-rule integral of the density
    approximates the signal variance.
    """
    x = np.asarray(signal, dtype=float).ravel()
    fs = float(sample_rate_hz)
    if fs <= 0:
        raise ValueError("sample rate must be positive")
    if segment_len is None:
        segment_len = min(256, x.size)
    seg = int(segment_len)
    if seg < 8:
        raise SignalTooShort(f"segment length must be >= 8, got {seg}")
    if x.size < seg:
        raise SignalTooShort(
            f"signal shorter than one segment ({x.size} < {seg})")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap fraction must be in [0, 1)")

    step = max(1, int(round(seg * (1.0 - overlap_fraction))))
    starts = np.arange(0, x.size - seg + 1, step)
    window = 0.5 - 0.5 * np.cos(2.0 * math.pi * np.arange(seg) / seg)
    scale = fs * float(np.sum(window * window))

    frames = np.stack([x[s:s + seg] for s in starts])
    if demean_segments:
        frames = frames - frames.mean(axis=1, keepdims=True)
    spec = np.fft.rfft(frames * window, axis=1)
    p = (spec.real ** 2 + spec.imag ** 2) / scale
    power = p.mean(axis=0)
    if seg % 2 == 0:
        power[1:-1] *= 2.0  # all bins except DC and Nyquist
    else:
        power[1:] *= 2.0
    freqs = np.arange(power.size) * fs / seg
    return Spectrum(freqs_hz=freqs, power=power, resolution_hz=fs / seg)


def band_power(spec: Spectrum, lo_hz: float, hi_hz: float) -> float:
    """Trapezoidal integral of the PSD over [lo_hz, hi_hz].

    Band edges falling between bins contribute via linear interpolation, so
    adjacent bands tile exactly. A band with no spectral support returns 0.
    """
    if not hi_hz > lo_hz:
        raise EmptyBand(f"need lo < hi, got [{lo_hz}, {hi_hz}]")
    freqs, power = spec.freqs_hz, spec.power
    lo = max(float(lo_hz), float(freqs[0]))
    hi = min(float(hi_hz), float(freqs[-1]))
    if hi <= lo:
        return 0.0
    inner = (freqs > lo) & (freqs < hi)
    xs = np.concatenate([[lo], freqs[inner], [hi]])
    ys = np.concatenate([[np.interp(lo, freqs, power)],
                         power[inner],
                         [np.interp(hi, freqs, power)]])
    return float(np.trapezoid(ys, xs))


# --- correlation -----------------------------------------------------------------

def pearson_corr(a, b) -> float:
    """Sample Pearson correlation coefficient in [-1, 1].

    Raises :class:`ConstantInput` when either input has zero variance, since
    the coefficient is undefined there; callers decide how to encode that.
    """
    xa = np.asarray(a, dtype=float).ravel()
    xb = np.asarray(b, dtype=float).ravel()
    if xa.size != xb.size:
        raise LengthMismatch(f"lengths differ: {xa.size} vs {xb.size}")
    if xa.size < 2:
        raise SignalTooShort("correlation needs at least 2 samples")
    da = xa - xa.mean()
    db = xb - xb.mean()
    denom = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if denom == 0.0:
        raise ConstantInput("zero-variance input; correlation undefined")
    r = float(np.dot(da, db)) / denom
    return max(-1.0, min(1.0, r))
