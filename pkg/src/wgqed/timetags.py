"""Time-tag streams and their on-disk formats.

A stream is one detector channel's click record: integer picosecond
timestamps, sorted, together with the acquisition span they were collected
over. Two interchange formats are supported:

* binary ``.ttag``: 16-byte little-endian header (magic ``TTAG``, version
  u16, channel u16, reserved u64) followed by u64 timestamps in ps. The
  reserved word carries the acquisition span in ps; readers treat 0 as
  "infer from the last timestamp".
* CSV: header ``channel,timestamp_ps`` with one row per click; optional
  comment lines ``# span_ps: <channel>=<int>`` carry the spans.

Readers validate ordering and report the first offending byte offset
(binary) or line number (CSV).
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DomainError

MAGIC = b"TTAG"
VERSION = 1

#: Channel-id registry for the binary header.
CHANNEL_CODES = {
    "reflection_psb": 1,
    "transmission": 2,
    "transmission_hbt_a": 3,
    "transmission_hbt_b": 4,
}
CODE_CHANNELS = {v: k for k, v in CHANNEL_CODES.items()}

_HEADER = struct.Struct("<4sHHQ")


@dataclass(frozen=True)
class TimeTagStream:
    """One channel's sorted click timestamps (ps) over a known span (ps)."""

    channel: str
    timestamps_ps: np.ndarray
    span_ps: int

    def __post_init__(self):
        ts = np.asarray(self.timestamps_ps, dtype=np.int64)
        object.__setattr__(self, "timestamps_ps", ts)
        if ts.ndim != 1:
            raise DataFormatError("timestamps must be a 1-d array")
        if self.span_ps <= 0:
            raise DomainError(f"span_ps must be positive, got {self.span_ps}")
        if ts.size:
            bad = np.nonzero(np.diff(ts) < 0)[0]
            if bad.size:
                i = int(bad[0]) + 1
                raise DataFormatError(
                    f"timestamps not sorted at index {i} "
                    f"({ts[i]} after {ts[i - 1]})",
                    index=i,
                )
            if ts[0] < 0:
                raise DataFormatError("timestamps must be nonnegative", index=0)
            if ts[-1] > self.span_ps:
                raise DataFormatError(
                    f"timestamp {ts[-1]} exceeds span {self.span_ps}",
                    index=int(ts.size - 1),
                )

    def __len__(self) -> int:
        return int(self.timestamps_ps.size)

    @property
    def span_s(self) -> float:
        return self.span_ps * 1e-12

    @property
    def rate_hz(self) -> float:
        return len(self) / self.span_s


@dataclass(frozen=True)
class ClickRecord:
    """A single detector click: channel id plus integer ps timestamp."""

    channel: str
    timestamp_ps: int


def ttag_bytes(stream: TimeTagStream) -> bytes:
    """Serialize one stream to the binary tag format (header + u64 tags)."""
    code = CHANNEL_CODES.get(stream.channel)
    if code is None:
        raise DataFormatError(f"channel {stream.channel!r} has no binary channel code")
    return _HEADER.pack(MAGIC, VERSION, code, stream.span_ps) + np.ascontiguousarray(
        stream.timestamps_ps, dtype="<u8"
    ).tobytes()


def write_ttag(path, stream: TimeTagStream) -> None:
    with open(path, "wb") as fh:
        fh.write(ttag_bytes(stream))


def ttag_from_bytes(raw: bytes) -> TimeTagStream:
    """Parse the binary tag format; errors carry the offending byte offset."""
    if len(raw) < _HEADER.size:
        raise DataFormatError(
            f"file too short for TTAG header ({len(raw)} bytes)", offset=0
        )
    magic, version, code, reserved = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise DataFormatError(f"unsupported version {version}", offset=4)
    payload = raw[_HEADER.size:]
    if len(payload) % 8:
        raise DataFormatError(
            "payload is not a whole number of u64 tags",
            offset=_HEADER.size + 8 * (len(payload) // 8),
        )
    ts = np.frombuffer(payload, dtype="<u8")
    if ts.size and int(ts.max()) > np.iinfo(np.int64).max:
        raise DataFormatError(
            "timestamp exceeds signed 64-bit range",
            offset=_HEADER.size + 8 * int(ts.argmax()),
        )
    ts = ts.astype(np.int64)
    bad = np.nonzero(np.diff(ts) < 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise DataFormatError(
            f"timestamps not sorted at tag {i}", offset=_HEADER.size + 8 * i, index=i
        )
    channel = CODE_CHANNELS.get(code, f"channel_{code}")
    span = int(reserved) if reserved else (int(ts[-1]) if ts.size else 1)
    return TimeTagStream(channel=channel, timestamps_ps=ts, span_ps=span)


def read_ttag(path) -> TimeTagStream:
    with open(path, "rb") as fh:
        raw = fh.read()
    return ttag_from_bytes(raw)


def write_timetags_csv(path, streams: list[TimeTagStream]) -> None:
    with open(path, "w") as fh:
        for s in streams:
            fh.write(f"# span_ps: {s.channel}={s.span_ps}\n")
        fh.write("channel,timestamp_ps\n")
        for s in streams:
            for t in s.timestamps_ps:
                fh.write(f"{s.channel},{int(t)}\n")


def read_timetags_csv(path) -> list[TimeTagStream]:
    """Parse a CSV tag file into one stream per channel (first-seen order)."""
    span_re = re.compile(r"#\s*span_ps:\s*(\S+)\s*=\s*(\d+)")
    spans: dict[str, int] = {}
    order: list[str] = []
    tags: dict[str, list[int]] = {}
    last: dict[str, int] = {}
    header_seen = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = span_re.match(line)
                if m:
                    spans[m.group(1)] = int(m.group(2))
                continue
            if not header_seen:
                if line.lower().replace(" ", "") != "channel,timestamp_ps":
                    raise DataFormatError(
                        f"expected header 'channel,timestamp_ps', got {line!r}",
                        index=lineno,
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataFormatError(f"expected 2 columns, got {len(parts)}", index=lineno)
            chan = parts[0].strip()
            try:
                t = int(parts[1])
            except ValueError as exc:
                raise DataFormatError(
                    f"bad timestamp {parts[1]!r} on line {lineno}", index=lineno
                ) from exc
            if chan in last and t < last[chan]:
                raise DataFormatError(
                    f"timestamps for channel {chan!r} not sorted on line {lineno}",
                    index=lineno,
                )
            last[chan] = t
            if chan not in tags:
                tags[chan] = []
                order.append(chan)
            tags[chan].append(t)
    if not header_seen:
        raise DataFormatError("missing 'channel,timestamp_ps' header", index=1)
    out = []
    for chan in order:
        arr = np.asarray(tags[chan], dtype=np.int64)
        span = spans.get(chan, int(arr[-1]) if arr.size else 1)
        out.append(TimeTagStream(channel=chan, timestamps_ps=arr, span_ps=span))
    return out


def read_timetags(path) -> list[TimeTagStream]:
    """Dispatch on extension: .ttag binary, anything else CSV."""
    if str(path).endswith(".ttag"):
        return [read_ttag(path)]
    return read_timetags_csv(path)
