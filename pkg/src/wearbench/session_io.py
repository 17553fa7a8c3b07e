"""Parsing, serialization, and validation of wrist-wearable sessions.

On-disk layout is one directory per subject holding four channel files::

    <root>/<subject_id>/{BVP.csv, EDA.csv, ACC.csv, TEMP.csv}

Each channel file is UTF-8 text (LF or CRLF):

* line 1 -- integer UTC start timestamp (ACC may repeat it per column),
* line 2 -- sample rate in Hz (ACC may repeat it per column),
* lines 3+ -- one comma-separated sample vector per line
  (width 3 for ACC, width 1 otherwise).

Labels live in a separate manifest CSV with header ``subject_id,label`` and
case-insensitive labels ``unipolar`` / ``bipolar``.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyBody,
    MalformedHeader,
    ManifestError,
    MissingChannelFile,
    NonFiniteSample,
    WidthMismatch,
)


class ChannelKind(enum.Enum):
    BVP = "BVP"
    EDA = "EDA"
    ACC = "ACC"
    TEMP = "TEMP"

    @property
    def width(self) -> int:
        return 3 if self is ChannelKind.ACC else 1


class Label(enum.Enum):
    UNIPOLAR = "unipolar"
    BIPOLAR = "bipolar"

    @classmethod
    def from_string(cls, text: str) -> "Label":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ManifestError(f"unknown label {text!r}") from None

    def to_int(self) -> int:
        return 0 if self is Label.UNIPOLAR else 1


ALL_KINDS = (ChannelKind.BVP, ChannelKind.EDA, ChannelKind.ACC, ChannelKind.TEMP)


@dataclass(frozen=True)
class SignalChannel:
    """One uniformly sampled sensor stream.

    ``samples`` is a float array of shape (n,) for single-column kinds and
    (n, 3) for ACC.
    """

    kind: ChannelKind
    start_time: int
    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.size == 0:
            raise ValueError("samples must be non-empty")
        width = samples.shape[1] if samples.ndim == 2 else 1
        if width != self.kind.width:
            raise ValueError(
                f"{self.kind.value} expects width {self.kind.width}, got {width}")

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass(frozen=True)
class Session:
    """The four channels of one subject plus identity and label."""

    subject_id: str
    channels: dict[ChannelKind, SignalChannel]
    label: Label

    def __post_init__(self):
        missing = [k.value for k in ALL_KINDS if k not in self.channels]
        extra = [k for k in self.channels if k not in ALL_KINDS]
        if missing or extra:
            raise ValueError(
                f"session must have exactly the four kinds; missing={missing}")

    def channel(self, kind: ChannelKind) -> SignalChannel:
        return self.channels[kind]


class ValidationStatus(enum.Enum):
    OK = "ok"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class ValidationPolicy:
    min_duration_seconds: float = 60.0
    max_duration_skew_seconds: float = 5.0


@dataclass(frozen=True)
class ValidationReport:
    subject_id: str
    status: ValidationStatus
    reasons: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if (self.status is ValidationStatus.EXCLUDED) != bool(self.reasons):
            raise ValueError("status must be EXCLUDED iff reasons are present")


# --- channel CSV parsing -------------------------------------------------------


def _parse_header_int(line: str, lineno: int) -> int:
    token = line.split(",")[0].strip()
    try:
        value = float(token)
    except ValueError:
        raise MalformedHeader(f"line {lineno}: cannot parse {token!r}") from None
    if not math.isfinite(value) or value != int(value):
        raise MalformedHeader(f"line {lineno}: {token!r} is not an integer")
    return int(value)


def _parse_header_float(line: str, lineno: int) -> float:
    token = line.split(",")[0].strip()
    try:
        value = float(token)
    except ValueError:
        raise MalformedHeader(f"line {lineno}: cannot parse {token!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise MalformedHeader(f"line {lineno}: sample rate must be positive")
    return value


def parse_channel_csv(content: str, kind: ChannelKind) -> SignalChannel:
    """Parse one channel file's text into a :class:`SignalChannel`.

    Raises ``MalformedHeader`` for unparseable metadata lines,
    ``WidthMismatch`` for rows of the wrong width, ``NonFiniteSample`` for
    values that are not finite numbers, and ``EmptyBody`` when no sample
    rows follow the header.
    """
    lines = content.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    lines = [ln for ln in lines if ln.strip() != ""]
    if len(lines) < 2:
        raise MalformedHeader("need two header lines (start time, sample rate)")
    start_time = _parse_header_int(lines[0], 1)
    sample_rate = _parse_header_float(lines[1], 2)
    body = lines[2:]
    if not body:
        raise EmptyBody(f"{kind.value}: no sample rows after header")

    width = kind.width
    rows = np.empty((len(body), width), dtype=float)
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != width:
            raise WidthMismatch(
                f"{kind.value} row {i + 3}: expected {width} columns, "
                f"got {len(parts)}")
        for j, token in enumerate(parts):
            try:
                value = float(token)
            except ValueError:
                raise NonFiniteSample(
                    f"{kind.value} row {i + 3}: bad value {token!r}") from None
            if not math.isfinite(value):
                raise NonFiniteSample(
                    f"{kind.value} row {i + 3}: non-finite value {token!r}")
            rows[i, j] = value
    samples = rows[:, 0] if width == 1 else rows
    return SignalChannel(kind=kind, start_time=start_time,
                         sample_rate=sample_rate, samples=samples)


def serialize_channel_csv(channel: SignalChannel) -> str:
    """Inverse of :func:`parse_channel_csv`; samples written with 6 decimals."""
    width = channel.kind.width
    header1 = ",".join([str(channel.start_time)] * width)
    header2 = ",".join([f"{channel.sample_rate:.6f}"] * width)
    rows = np.atleast_2d(channel.samples.reshape(channel.n_samples, width))
    lines = [header1, header2]
    for row in rows:
        lines.append(",".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"


# --- session directories ----------------------------------------------------------


def load_session(directory, subject_id: str, label: Label) -> Session:
    """Load the four channel files under ``directory`` into a session."""
    directory = Path(directory)
    channels = {}
    for kind in ALL_KINDS:
        path = directory / f"{kind.value}.csv"
        if not path.is_file():
            raise MissingChannelFile(f"{subject_id}: missing {path.name}")
        channels[kind] = parse_channel_csv(path.read_text(encoding="utf-8"), kind)
    return Session(subject_id=subject_id, channels=channels, label=label)


def write_session(session: Session, directory) -> None:
    """Write a session to ``directory`` in the canonical channel-CSV format."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for kind, channel in session.channels.items():
        _atomic_write_text(directory / f"{kind.value}.csv",
                           serialize_channel_csv(channel))


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# --- manifest -----------------------------------------------------------------------


def load_manifest(path) -> list[tuple[str, Label]]:
    """Read the ``subject_id,label`` manifest, preserving row order."""
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip()]
    if not lines:
        raise ManifestError(f"{path}: empty manifest")
    header = [c.strip().lower() for c in lines[0].split(",")]
    if header != ["subject_id", "label"]:
        raise ManifestError(f"{path}: expected header 'subject_id,label'")
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = [c.strip() for c in line.split(",")]
        if len(parts) != 2 or not parts[0]:
            raise ManifestError(f"{path}:{lineno}: expected 'subject_id,label'")
        entries.append((parts[0], Label.from_string(parts[1])))
    return entries


def write_manifest(entries, path) -> None:
    path = Path(path)
    lines = ["subject_id,label"]
    lines.extend(f"{sid},{label.value}" for sid, label in entries)
    _atomic_write_text(path, "\n".join(lines) + "\n")


# --- validation ----------------------------------------------------------------------


def validate_session(session: Session,
                     policy: ValidationPolicy | None = None) -> ValidationReport:
    """Screen one session for corruption; failures become report reasons.

    A session is excluded when any channel is shorter than the policy
    minimum, contains non-finite samples, when the BVP trace is constant
    (zero variance), or when channel durations disagree by more than the
    allowed skew.
    """
    policy = policy or ValidationPolicy()
    reasons: list[str] = []
    durations = []
    for kind in ALL_KINDS:
        channel = session.channels[kind]
        durations.append(channel.duration_seconds)
        if channel.duration_seconds < policy.min_duration_seconds:
            reasons.append(
                f"{kind.value}: channel too short "
                f"({channel.duration_seconds:.1f} s < "
                f"{policy.min_duration_seconds:.0f} s)")
        if not np.all(np.isfinite(channel.samples)):
            reasons.append(f"{kind.value}: non-finite samples")
    bvp = session.channels[ChannelKind.BVP].samples
    if float(np.ptp(bvp)) == 0.0:
        reasons.append("constant BVP (zero variance)")
    skew = max(durations) - min(durations)
    if skew > policy.max_duration_skew_seconds:
        reasons.append(f"channel duration skew {skew:.1f} s exceeds "
                       f"{policy.max_duration_skew_seconds:.0f} s")
    status = ValidationStatus.EXCLUDED if reasons else ValidationStatus.OK
    return ValidationReport(subject_id=session.subject_id, status=status,
                            reasons=tuple(reasons))
