"""On-disk formats: raw tracer archives and per-block metric records.

Layout under a store root::

    traces/<block>.{call,prestate,prestate_diff}.gz   raw tracer responses
    metrics/records.jsonl.gz                           one record per block
    reports/*.csv                                      report tables

Records are gzip-compressed JSON lines. Every gzip member is written with a
zero timestamp so identical input gives byte-identical files.
"""

from __future__ import annotations

import gzip
import io
import json
import os
import re
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Iterator

from .errors import RecordFormatError, SchemaVersionError

SCHEMA_VERSION = 1
TRACER_KINDS = ("call", "prestate", "prestate_diff")
GRAPH_KEYS = ("prestate_rw", "prestate_all", "calltracer_rw", "calltracer_all")


def gzip_bytes(data: bytes) -> bytes:
    buf = io.BytesIO()
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
        gz.write(data)
    return buf.getvalue()


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class StoreLayout:
    def __init__(self, root):
        self.root = Path(root)

    def __repr__(self) -> str:
        return f"StoreLayout({str(self.root)!r})"

    @property
    def traces_dir(self) -> Path:
        return self.root / "traces"

    @property
    def metrics_path(self) -> Path:
        return self.root / "metrics" / "records.jsonl.gz"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    def trace_path(self, block: int, kind: str) -> Path:
        if kind not in TRACER_KINDS:
            raise ValueError(f"unknown tracer kind {kind!r}")
        return self.traces_dir / f"{block}.{kind}.gz"


def archive_raw(layout: StoreLayout, block: int, kind: str, body: bytes) -> Path:
    """Store a raw tracer response byte-exactly (gzip-wrapped)."""
    path = layout.trace_path(block, kind)
    _atomic_write(path, gzip_bytes(body))
    return path


_TRACE_NAME = re.compile(r"^(\d+)\.(call|prestate|prestate_diff)\.(gz|json)$")


def load_raw(layout: StoreLayout, block: int, kind: str) -> bytes | None:
    """Raw tracer response for a block, or None if not archived.

    Plain ``<block>.<kind>.json`` files are accepted too, so hand-made
    fixture directories work without compressing them.
    """
    gz = layout.trace_path(block, kind)
    if gz.exists():
        with gzip.open(gz, "rb") as fh:
            return fh.read()
    plain = layout.traces_dir / f"{block}.{kind}.json"
    if plain.exists():
        return plain.read_bytes()
    return None


def archived_blocks(layout: StoreLayout) -> dict[int, set[str]]:
    """Block number -> tracer kinds present in the archive."""
    out: dict[int, set[str]] = {}
    if not layout.traces_dir.is_dir():
        return out
    for p in layout.traces_dir.iterdir():
        m = _TRACE_NAME.match(p.name)
        if m:
            out.setdefault(int(m.group(1)), set()).add(m.group(2))
    return dict(sorted(out.items()))


@dataclass
class BlockMetricsRecord:
    block_number: int
    tx_count: int
    value_transfer_ratio: float | None = None
    tree_means: dict | None = None
    graphs: dict = field(default_factory=dict)
    ww_cause_counts: dict | None = None
    ww_sources: dict | None = None
    errors: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "BlockMetricsRecord":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})

    def metric(self, graph: str, name: str):
        g = self.graphs.get(graph)
        return None if g is None else g.get(name)


def encode_record(rec: BlockMetricsRecord) -> str:
    return json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_records(path, records: Iterable[BlockMetricsRecord], append: bool = True) -> int:
    """Append records as one gzip member; returns the number written."""
    lines = [encode_record(r) + "\n" for r in records]
    if not lines:
        if not append or not Path(path).exists():
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "wb"):
                pass
        return 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = gzip_bytes("".join(lines).encode("utf-8"))
    if append:
        with open(path, "ab") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
    else:
        _atomic_write(path, payload)
    return len(lines)


def read_records(path) -> Iterator[BlockMetricsRecord]:
    """Stream records back. Errors name the 1-based line that failed."""
    lineno = 0
    with gzip.open(path, "rb") as fh:
        while True:
            try:
                raw = fh.readline()
            except (EOFError, gzip.BadGzipFile, zlib.error, OSError) as exc:
                raise RecordFormatError(f"truncated or corrupt compressed stream ({exc})", lineno + 1) from None
            if not raw:
                return
            lineno += 1
            if not raw.endswith(b"\n"):
                raise RecordFormatError("truncated line", lineno)
            if not raw.strip():
                continue
            try:
                doc = json.loads(raw)
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise RecordFormatError(f"invalid JSON ({exc})", lineno) from None
            if not isinstance(doc, dict):
                raise RecordFormatError("record is not an object", lineno)
            version = doc.get("schema_version")
            if version is None:
                raise RecordFormatError("record has no schema_version", lineno)
            if version != SCHEMA_VERSION:
                raise SchemaVersionError(f"line {lineno}: schema_version {version}, reader supports {SCHEMA_VERSION}")
            try:
                yield BlockMetricsRecord.from_dict(doc)
            except TypeError as exc:
                raise RecordFormatError(f"bad record fields ({exc})", lineno) from None
