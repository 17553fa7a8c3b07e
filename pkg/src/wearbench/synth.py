"""Synthetic labeled sessions with known ground truth.

Waveforms are deliberately minimal: just physiological enough that every
downstream feature has an analytically known target. Generation is a pure
function of (spec, seed); writing a cohort twice with the same seed yields
byte-identical files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .session_io import (
    ChannelKind,
    Label,
    Session,
    SignalChannel,
    write_manifest,
    write_session,
)

BVP_RATE = 64.0
EDA_RATE = 4.0
ACC_RATE = 32.0
TEMP_RATE = 4.0

# bi-exponential SCR shape constants
SCR_RISE_S = 1.0
SCR_DECAY_S = 4.0


@dataclass(frozen=True)
class SynthSpec:
    """Everything needed to generate one session deterministically."""

    seed: int
    duration_s: float = 300.0
    heart_rate_bpm: float = 72.0
    hrv_mod_freq_hz: float = 0.1
    hrv_mod_depth_ms: float = 30.0
    scr_events: tuple[tuple[float, float], ...] = ()  # (onset_s, amplitude_uS)
    acc_dominant_freq_hz: float = 2.0
    acc_amplitude: float = 0.8
    acc_inactive_fraction: float = 0.08
    temp_baseline_c: float = 36.0
    temp_trend_c_per_s: float = 0.0
    temp_noise_c: float = 0.0
    label: Label = Label.UNIPOLAR
    bvp_noise: float = 0.01
    eda_baseline_us: float = 2.0
    eda_noise_us: float = 0.001

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise InvalidSpec("duration must be positive")
        if self.heart_rate_bpm <= 0:
            raise InvalidSpec("heart rate must be positive")
        if self.hrv_mod_depth_ms < 0 or self.acc_amplitude < 0:
            raise InvalidSpec("amplitudes must be non-negative")
        if not 0.0 <= self.acc_inactive_fraction <= 1.0:
            raise InvalidSpec("inactive fraction must be in [0, 1]")
        for onset, amp in self.scr_events:
            if amp < 0:
                raise InvalidSpec("SCR amplitudes must be non-negative")
            if not 0.0 <= onset < self.duration_s:
                raise InvalidSpec(f"SCR onset {onset} outside the session")
        # beat period modulation must never cross zero
        if self.hrv_mod_depth_ms / 1000.0 >= 60.0 / self.heart_rate_bpm:
            raise InvalidSpec("HRV modulation depth exceeds the beat period")


@dataclass(frozen=True)
class GroundTruth:
    """Seeded values downstream recovery tests compare against."""

    heart_rate_bpm: float
    beat_times_s: tuple[float, ...]
    hrv_mod_freq_hz: float
    hrv_mod_depth_ms: float
    scr_onsets_s: tuple[float, ...]
    scr_amplitudes_us: tuple[float, ...]
    acc_dominant_freq_hz: float
    acc_inactive_seconds: float
    temp_baseline_c: float
    temp_trend_c_per_s: float
    label: Label


def _beat_times(spec: SynthSpec) -> np.ndarray:
    base = 60.0 / spec.heart_rate_bpm
    depth = spec.hrv_mod_depth_ms / 1000.0
    times = [0.4]
    while True:
        t = times[-1]
        period = base + depth * math.sin(2.0 * math.pi * spec.hrv_mod_freq_hz * t)
        nxt = t + period
        if nxt >= spec.duration_s - 0.2:
            break
        times.append(nxt)
    return np.asarray(times)


def _bvp_channel(spec: SynthSpec, beats: np.ndarray,
                 rng: np.random.Generator, start_time: int) -> SignalChannel:
    n = int(round(spec.duration_s * BVP_RATE))
    t = np.arange(n) / BVP_RATE
    signal = np.zeros(n)
    width = 0.45 * 60.0 / spec.heart_rate_bpm  # systolic bump width, seconds
    half = width / 2.0
    for tb in beats:
        lo = max(0, int(math.ceil((tb - half) * BVP_RATE)))
        hi = min(n, int(math.floor((tb + half) * BVP_RATE)) + 1)
        tau = t[lo:hi] - tb
        signal[lo:hi] += np.cos(math.pi * tau / width) ** 2
    signal += rng.normal(0.0, spec.bvp_noise, n)
    return SignalChannel(ChannelKind.BVP, start_time, BVP_RATE, signal)


def _scr_bump(t: np.ndarray, onset: float, amplitude: float) -> np.ndarray:
    tau = t - onset
    shape = np.where(
        tau > 0,
        np.exp(-np.clip(tau, 0, None) / SCR_DECAY_S)
        - np.exp(-np.clip(tau, 0, None) / SCR_RISE_S),
        0.0,
    )
    # normalize so the bump peaks exactly at `amplitude`
    t_peak = (SCR_RISE_S * SCR_DECAY_S / (SCR_DECAY_S - SCR_RISE_S)
              * math.log(SCR_DECAY_S / SCR_RISE_S))
    peak = math.exp(-t_peak / SCR_DECAY_S) - math.exp(-t_peak / SCR_RISE_S)
    return amplitude * shape / peak


def _eda_channel(spec: SynthSpec, rng: np.random.Generator,
                 start_time: int) -> SignalChannel:
    n = int(round(spec.duration_s * EDA_RATE))
    t = np.arange(n) / EDA_RATE
    signal = spec.eda_baseline_us + 0.1 * np.sin(2.0 * math.pi * 0.004 * t)
    for onset, amplitude in spec.scr_events:
        signal += _scr_bump(t, onset, amplitude)
    signal += rng.normal(0.0, spec.eda_noise_us, n)
    return SignalChannel(ChannelKind.EDA, start_time, EDA_RATE, signal)


def _acc_channel(spec: SynthSpec, rng: np.random.Generator,
                 start_time: int) -> SignalChannel:
    n = int(round(spec.duration_s * ACC_RATE))
    t = np.arange(n) / ACC_RATE
    active_end = spec.duration_s * (1.0 - spec.acc_inactive_fraction)
    active = t < active_end
    amp = spec.acc_amplitude
    phase = 2.0 * math.pi * spec.acc_dominant_freq_hz * t
    # motion rides on an offset so the magnitude never dips toward zero,
    # with the oscillation kept large relative to the offset so the
    # motion line, not the activity/rest level step, tops the spectrum
    x = np.where(active, amp * (0.65 + 0.35 * np.sin(phase)), 0.0)
    y = np.where(active, 0.25 * amp * (0.65 + 0.35 * np.sin(phase + 0.8)), 0.0)
    noise = rng.normal(0.0, 0.01, (n, 3))
    samples = np.stack([x, y, np.zeros(n)], axis=1) + noise
    return SignalChannel(ChannelKind.ACC, start_time, ACC_RATE, samples)


def _temp_channel(spec: SynthSpec, rng: np.random.Generator,
                  start_time: int) -> SignalChannel:
    n = int(round(spec.duration_s * TEMP_RATE))
    t = np.arange(n) / TEMP_RATE
    signal = spec.temp_baseline_c + spec.temp_trend_c_per_s * t
    if spec.temp_noise_c > 0:
        signal = signal + rng.normal(0.0, spec.temp_noise_c, n)
    return SignalChannel(ChannelKind.TEMP, start_time, TEMP_RATE, signal)


def generate_session(spec: SynthSpec,
                     subject_id: str = "synthetic",
                     start_time: int = 1700000000) -> tuple[Session, GroundTruth]:
    """Build one session; identical (spec, subject_id) always yields
    identical samples."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    beats = _beat_times(spec)
    channels = {
        ChannelKind.BVP: _bvp_channel(spec, beats, rng, start_time),
        ChannelKind.EDA: _eda_channel(spec, rng, start_time),
        ChannelKind.ACC: _acc_channel(spec, rng, start_time),
        ChannelKind.TEMP: _temp_channel(spec, rng, start_time),
    }
    session = Session(subject_id=subject_id, channels=channels, label=spec.label)
    truth = GroundTruth(
        heart_rate_bpm=spec.heart_rate_bpm,
        beat_times_s=tuple(beats.tolist()),
        hrv_mod_freq_hz=spec.hrv_mod_freq_hz,
        hrv_mod_depth_ms=spec.hrv_mod_depth_ms,
        scr_onsets_s=tuple(onset for onset, _ in spec.scr_events),
        scr_amplitudes_us=tuple(amp for _, amp in spec.scr_events),
        acc_dominant_freq_hz=spec.acc_dominant_freq_hz,
        acc_inactive_seconds=spec.duration_s * spec.acc_inactive_fraction,
        temp_baseline_c=spec.temp_baseline_c,
        temp_trend_c_per_s=spec.temp_trend_c_per_s,
        label=spec.label,
    )
    return session, truth


@dataclass(frozen=True)
class CohortOffsets:
    """Additive shifts applied to the bipolar class's parameter means.

    All-zero offsets make the two classes statistically identical, so any
    classifier should score near chance; large offsets make them trivially
    separable.
    """

    acc_dominant_freq_hz: float = 0.0
    temp_trend_c_per_s: float = 0.0
    heart_rate_bpm: float = 0.0
    scr_amplitude_us: float = 0.0
    acc_inactive_fraction: float = 0.0


@dataclass(frozen=True)
class CohortSpec:
    n_unipolar: int = 13
    n_bipolar: int = 18
    seed: int = 0
    duration_s: float = 300.0
    offsets: CohortOffsets = field(default_factory=CohortOffsets)


def _subject_spec(rng: np.random.Generator, cohort: CohortSpec,
                  label: Label) -> SynthSpec:
    off = cohort.offsets if label is Label.BIPOLAR else CohortOffsets()
    duration = cohort.duration_s
    n_scr = int(rng.integers(2, 5))
    base_onsets = np.linspace(0.15 * duration, 0.85 * duration, n_scr)
    onsets = base_onsets + rng.uniform(-4.0, 4.0, n_scr)
    amplitudes = rng.uniform(0.2, 0.7, n_scr) + off.scr_amplitude_us
    return SynthSpec(
        seed=int(rng.integers(0, 2 ** 62)),
        duration_s=duration,
        heart_rate_bpm=float(rng.uniform(66.0, 78.0)) + off.heart_rate_bpm,
        hrv_mod_freq_hz=0.1,
        hrv_mod_depth_ms=float(rng.uniform(20.0, 40.0)),
        scr_events=tuple(
            (float(t), float(a)) for t, a in zip(onsets, amplitudes)),
        acc_dominant_freq_hz=float(rng.uniform(0.8, 1.2))
        + off.acc_dominant_freq_hz,
        acc_amplitude=float(rng.uniform(0.6, 0.9)),
        # short rests keep the rest/motion level step from out-shouting
        # the motion line in the magnitude spectrum
        acc_inactive_fraction=min(0.9, max(0.0, float(
            rng.uniform(0.05, 0.10)) + off.acc_inactive_fraction)),
        temp_baseline_c=float(rng.uniform(35.6, 36.4)),
        temp_trend_c_per_s=float(rng.uniform(-0.001, 0.001))
        + off.temp_trend_c_per_s,
        label=label,
    )


def generate_cohort(root, cohort: CohortSpec) -> Path:
    """Write one session directory per subject plus the label manifest.

    Returns the manifest path. Subjects are named S001.. in manifest order
    (unipolar block first).
    """
    if cohort.n_unipolar < 1 or cohort.n_bipolar < 1:
        raise InvalidSpec("need at least one subject per class")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cohort.seed)
    labels = [Label.UNIPOLAR] * cohort.n_unipolar + \
             [Label.BIPOLAR] * cohort.n_bipolar
    entries = []
    for i, label in enumerate(labels, start=1):
        subject_id = f"S{i:03d}"
        spec = _subject_spec(rng, cohort, label)
        session, _ = generate_session(spec, subject_id=subject_id,
                                      start_time=1700000000 + i)
        write_session(session, root / subject_id)
        entries.append((subject_id, label))
    manifest = root / "manifest.csv"
    write_manifest(entries, manifest)
    return manifest
