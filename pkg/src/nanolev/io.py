"""Binary time-series container, CSV tables and the run manifest.

Binary layout (little-endian), 64-byte header::

    0   4s   magic b"LVTS"
    4   u16  format version
    6   u16  channel count
    8   f64  sample interval [s]
    16  u64  sample count
    24  u64  seed
    32  f64  transduction gain (NaN if not applicable)
    40  24s  leading hex digits of the run id

followed by ``count * channels`` f64 values, channels interleaved per sample.
"""
import csv
import datetime as _dt
import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

MAGIC = b"LVTS"
FORMAT_VERSION = 1
HEADER_SIZE = 64
_HEADER = struct.Struct("<4sHHdQQd24s")
assert _HEADER.size == HEADER_SIZE


@dataclass
class SeriesHeader:
    channels: int
    dt: float
    count: int
    seed: int = 0
    gain: float = float("nan")
    run_id: str = ""
    version: int = FORMAT_VERSION


def write_series(path, data, dt, seed=0, gain=float("nan"), run_id=""):
    """Write a ``(count, channels)`` (or 1-D) float array as an LVTS file."""
    arr = np.asarray(data, dtype="<f8")
    if arr.ndim == 1:
        arr = arr[:, None]
    count, channels = arr.shape
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, channels, float(dt), count, int(seed), float(gain),
        run_id[:24].encode("ascii").ljust(24, b"\0"),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_series(path):
    """Return ``(SeriesHeader, data)`` with ``data`` shaped ``(count, channels)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_SIZE:
        raise ValueError(f"{path}: truncated header")
    magic, version, channels, dt, count, seed, gain, rid = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not an LVTS file")
    if version > FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    expected = HEADER_SIZE + 8 * channels * count
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE).reshape(count, channels)
    hdr = SeriesHeader(channels, dt, count, seed, gain, rid.rstrip(b"\0").decode("ascii"), version)
    return hdr, data.astype(float)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, meta=None):
    """CSV with ``#``-prefixed ``key: value`` metadata lines and '\\n' line ends."""
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_key_values(path, values, meta=None):
    write_csv(path, ["key", "value"], list(values.items()), meta)


def read_csv(path):
    """Return ``(meta, header, rows)``; rows are lists of strings."""
    meta = {}
    with open(path, newline="") as fh:
        lines = fh.read().split("\n")
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition(":")
            meta[k.strip()] = v.strip()
        elif line:
            body.append(line)
    reader = list(csv.reader(body))
    return meta, reader[0], reader[1:]


def run_id(config_hash, seed, subcommand, tool_version):
    """Deterministic identifier of a run, shared by all of its outputs."""
    blob = json.dumps([config_hash, int(seed), subcommand, tool_version])
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    seed: int
    subcommand: str
    outputs: list = field(default_factory=list)
    timestamp: str = ""

    @property
    def run_id(self):
        return run_id(self.config_hash, self.seed, self.subcommand, self.tool_version)

    def csv_meta(self):
        return {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "subcommand": self.subcommand,
        }

    def write(self, path):
        """Manifest JSON; the only output that carries the wall-clock time."""
        if not self.timestamp:
            self.timestamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        doc = asdict(self)
        doc["run_id"] = self.run_id
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
