"""Session-to-features glue: preprocessing chains and the feature CSV.

One subject in, 59 named scalars out:

* BVP: smoothness-priors detrend -> band-pass -> pulse peaks -> NN series
  -> 23 time-domain + 9 frequency-domain HRV features,
* EDA: clean -> tonic/phasic split -> SCR events -> 10 features,
* ACC: low-pass per axis -> 10 movement features,
* TEMP: 7 summary features.

A feature family that cannot be computed for an otherwise valid session
(for example too few clean beats for a spectrum) is emitted as NaN and
imputed later from each training fold.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import warnings
from pathlib import Path

import numpy as np

from . import actigraphy, dsp, eda, hrv, thermo
from .config import DspConfig, FeatureConfig, ValidationConfig
from .errors import (
    NoPeaksFound,
    SignalTooShort,
    SpanTooShort,
    TooFewIntervals,
    WearbenchError,
)
from .mlbench import FEATURE_GROUPS, SubjectFeatures
from .session_io import (
    ChannelKind,
    Label,
    Session,
    ValidationPolicy,
    ValidationReport,
    ValidationStatus,
    load_manifest,
    load_session,
    validate_session,
)

FEATURE_COLUMNS = FEATURE_GROUPS["all"]


def _nan_family(names) -> dict[str, float]:
    return {name: float("nan") for name in names}


def extract_hrv_features(session: Session, dsp_cfg: DspConfig,
                         feat_cfg: FeatureConfig) -> dict[str, float]:
    bvp = session.channel(ChannelKind.BVP)
    out = {}
    try:
        detrended = dsp.detrend(bvp.samples, dsp_cfg.detrend_lambda)
        band = dsp.design_butterworth(
            dsp_cfg.bvp_filter_order, dsp.FilterKind.BAND_PASS,
            dsp_cfg.bvp_band_hz, bvp.sample_rate)
        filtered = dataclasses.replace(
            bvp, samples=dsp.filtfilt(band, detrended))
        peaks = hrv.detect_pulse_peaks(filtered, hrv.PeakDetectionParams(
            threshold_scale=feat_cfg.peak_threshold_scale,
            rms_window_s=feat_cfg.peak_rms_window_s,
            refractory_s=feat_cfg.peak_refractory_s))
        nn = hrv.peaks_to_nn(peaks, bvp.sample_rate)
    except (SignalTooShort, NoPeaksFound, TooFewIntervals) as exc:
        warnings.warn(f"{session.subject_id}: HRV features unavailable "
                      f"({exc})", RuntimeWarning, stacklevel=2)
        out.update(_nan_family(hrv.HRV_TIME_NAMES))
        out.update(_nan_family(hrv.HRV_FREQ_NAMES))
        return out
    out.update(hrv.hrv_time_features(nn).as_features())
    try:
        out.update(hrv.hrv_freq_features(
            nn, interp_rate_hz=dsp_cfg.nn_interp_rate_hz,
            welch_segment_len=None,
            welch_overlap=dsp_cfg.welch_overlap).as_features())
    except (SpanTooShort, TooFewIntervals) as exc:
        warnings.warn(f"{session.subject_id}: HRV spectrum unavailable "
                      f"({exc})", RuntimeWarning, stacklevel=2)
        out.update(_nan_family(hrv.HRV_FREQ_NAMES))
    return out


def extract_eda_features(session: Session,
                         feat_cfg: FeatureConfig) -> dict[str, float]:
    channel = session.channel(ChannelKind.EDA)
    try:
        decomp = eda.decompose_eda(channel, tonic_cutoff_hz=feat_cfg.eda_tonic_hz,
                                   clean_cutoff_hz=feat_cfg.eda_clean_hz)
    except SignalTooShort as exc:
        warnings.warn(f"{session.subject_id}: EDA features unavailable "
                      f"({exc})", RuntimeWarning, stacklevel=2)
        return _nan_family(eda.EDA_FEATURE_NAMES)
    events = eda.detect_scr(decomp, min_amplitude=feat_cfg.scr_min_amplitude)
    return eda.eda_features(decomp, events)


def extract_acc_features(session: Session,
                         feat_cfg: FeatureConfig) -> dict[str, float]:
    channel = session.channel(ChannelKind.ACC)
    try:
        design = dsp.design_butterworth(
            feat_cfg.acc_lowpass_order, dsp.FilterKind.LOW_PASS,
            (feat_cfg.acc_lowpass_hz,), channel.sample_rate)
        filtered = np.stack(
            [dsp.filtfilt(design, channel.samples[:, i]) for i in range(3)],
            axis=1)
        smoothed = dataclasses.replace(channel, samples=filtered)
        return actigraphy.acc_features(
            smoothed,
            inactivity_threshold=feat_cfg.acc_inactivity_threshold,
        ).as_features()
    except SignalTooShort as exc:
        warnings.warn(f"{session.subject_id}: ACC features unavailable "
                      f"({exc})", RuntimeWarning, stacklevel=2)
        return _nan_family(actigraphy.ACC_FEATURE_NAMES)


def extract_temp_features(session: Session) -> dict[str, float]:
    try:
        return thermo.temp_features(
            session.channel(ChannelKind.TEMP)).as_features()
    except SignalTooShort as exc:
        warnings.warn(f"{session.subject_id}: TEMP features unavailable "
                      f"({exc})", RuntimeWarning, stacklevel=2)
        return _nan_family(thermo.TEMP_FEATURE_NAMES)


def extract_session_features(session: Session, dsp_cfg: DspConfig | None = None,
                             feat_cfg: FeatureConfig | None = None
                             ) -> dict[str, float]:
    """All 59 features for one session, in canonical column order."""
    dsp_cfg = dsp_cfg or DspConfig()
    feat_cfg = feat_cfg or FeatureConfig()
    values = {}
    values.update(extract_hrv_features(session, dsp_cfg, feat_cfg))
    values.update(extract_eda_features(session, feat_cfg))
    values.update(extract_acc_features(session, feat_cfg))
    values.update(extract_temp_features(session))
    return {name: values[name] for name in FEATURE_COLUMNS}


# --- feature CSV ----------------------------------------------------------------


def _format_value(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_features_csv(rows, path) -> None:
    """Header: subject_id, the 59 feature columns, label. NaN -> empty."""
    lines = ["subject_id," + ",".join(FEATURE_COLUMNS) + ",label"]
    for row in rows:
        cells = [row.subject_id]
        cells.extend(_format_value(row.features.get(name, float("nan")))
                     for name in FEATURE_COLUMNS)
        cells.append(row.label.value)
        lines.append(",".join(cells))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_features_csv(path) -> list[SubjectFeatures]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln.strip()]
    header = lines[0].split(",")
    if header[0] != "subject_id" or header[-1] != "label":
        raise WearbenchError(
            f"{path}: expected subject_id ... label columns")
    names = header[1:-1]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise WearbenchError(
                f"{path}:{lineno}: expected {len(header)} cells, "
                f"got {len(cells)}")
        features = {}
        for name, cell in zip(names, cells[1:-1]):
            features[name] = float(cell) if cell != "" else float("nan")
        rows.append(SubjectFeatures(subject_id=cells[0],
                                    label=Label.from_string(cells[-1]),
                                    features=features))
    return rows


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a sibling temp file + rename so readers never see partials."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_validation_json(reports, path) -> None:
    payload = {"subjects": [
        {"subject_id": r.subject_id, "status": r.status.value,
         "reasons": list(r.reasons)} for r in reports]}
    atomic_write_text(Path(path),
                       json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- cohort-level extraction ----------------------------------------------------


def run_extract(data_root, manifest_path, out_dir,
                dsp_cfg: DspConfig | None = None,
                feat_cfg: FeatureConfig | None = None,
                validation_cfg: ValidationConfig | None = None
                ) -> tuple[Path, Path, int]:
    """Validate and extract every manifest subject.

    Writes ``features.csv`` (validated subjects only) and
    ``validation.json`` (everyone, with exclusion reasons) under
    ``out_dir``; returns both paths and the number of included subjects.
    """
    data_root = Path(data_root)
    out_dir = Path(out_dir)
    validation_cfg = validation_cfg or ValidationConfig()
    policy = ValidationPolicy(
        min_duration_seconds=validation_cfg.min_duration_seconds,
        max_duration_skew_seconds=validation_cfg.max_duration_skew_seconds)

    reports: list[ValidationReport] = []
    rows: list[SubjectFeatures] = []
    for subject_id, label in load_manifest(manifest_path):
        try:
            session = load_session(data_root / subject_id, subject_id, label)
        except WearbenchError as exc:
            reports.append(ValidationReport(
                subject_id=subject_id, status=ValidationStatus.EXCLUDED,
                reasons=(f"unreadable session: {exc}",)))
            continue
        report = validate_session(session, policy)
        reports.append(report)
        if report.status is ValidationStatus.OK:
            rows.append(SubjectFeatures(
                subject_id=subject_id, label=label,
                features=extract_session_features(session, dsp_cfg, feat_cfg)))

    features_path = out_dir / "features.csv"
    validation_path = out_dir / "validation.json"
    write_features_csv(rows, features_path)
    write_validation_json(reports, validation_path)
    return features_path, validation_path, len(rows)
