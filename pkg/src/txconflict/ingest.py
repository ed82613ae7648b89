"""Fetch block traces over JSON-RPC (``debug_traceBlockByNumber``).

Raw responses are archived byte-exactly before anything parses them, so a
parse failure can always be reproduced offline from the archive.
"""

from __future__ import annotations

import json
import logging
import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import count
from pathlib import Path
from typing import Callable, Iterator, Sequence

import requests

from .errors import ConfigurationError, RpcError, TraceParseError, TransportError, TxConflictError
from .store import TRACER_KINDS, StoreLayout, archive_raw, load_raw
from .trace_model import BlockTrace, assemble_block

log = logging.getLogger(__name__)

TRACER_CONFIGS = {
    "call": {"tracer": "callTracer"},
    "prestate": {"tracer": "prestateTracer"},
    "prestate_diff": {"tracer": "prestateTracer", "tracerConfig": {"diffMode": True}},
}

DEFAULT_TIMEOUT = 120.0
DEFAULT_CONCURRENCY = 4
METHOD_NOT_FOUND = -32601

_ids = count(1)


def parse_tracers(spec: str | Sequence[str]) -> tuple[str, ...]:
    """``"all"`` or a comma list of call/prestate/prestate_diff."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    items = [s.strip() for s in items if s.strip()]
    if items == ["all"]:
        return TRACER_KINDS
    bad = [s for s in items if s not in TRACER_KINDS]
    if bad or not items:
        raise ValueError(f"unknown tracer kinds {bad or items}; choose from {', '.join(TRACER_KINDS)} or 'all'")
    return tuple(k for k in TRACER_KINDS if k in items)


def build_request(block_number: int, tracer_kind: str, request_id: int = 1) -> dict:
    return {
        "jsonrpc": "2.0",
        "id": request_id,
        "method": "debug_traceBlockByNumber",
        "params": [hex(block_number), dict(TRACER_CONFIGS[tracer_kind])],
    }


def _is_config_error(code, message: str) -> bool:
    msg = message.lower()
    if code == METHOD_NOT_FOUND:
        return True
    return ("method" in msg and ("not exist" in msg or "not available" in msg or "not found" in msg)) or (
        "tracer" in msg and ("not found" in msg or "not defined" in msg or "unsupported" in msg)
    )


class RpcClient:
    """Minimal JSON-RPC client with exponential-backoff retries on transport errors."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        backoff_factor: float = 2.0,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.session = session or requests.Session()
        self.sleep = sleep

    def _post(self, payload: dict) -> bytes:
        delay = self.backoff_base
        last: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = self.session.post(
                    self.endpoint,
                    data=json.dumps(payload),
                    headers={"content-type": "application/json"},
                    timeout=self.timeout,
                )
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise TransportError(f"HTTP {resp.status_code} from {self.endpoint}")
                if resp.status_code >= 400 and not resp.content:
                    raise TransportError(f"HTTP {resp.status_code} from {self.endpoint}")
                return resp.content
            except (requests.RequestException, TransportError) as exc:
                last = exc
                log.warning("attempt %d/%d for %s failed: %s", attempt, self.max_attempts, payload["method"], exc)
                if attempt < self.max_attempts:
                    self.sleep(delay)
                    delay *= self.backoff_factor
        raise TransportError(f"giving up after {self.max_attempts} attempts: {last}")

    def trace_block_raw(self, block_number: int, tracer_kind: str) -> bytes:
        """Response body for one tracer call, verbatim."""
        body = self._post(build_request(block_number, tracer_kind, next(_ids)))
        try:
            doc = json.loads(body)
        except json.JSONDecodeError:
            raise TransportError(f"non-JSON response for block {block_number}") from None
        err = doc.get("error") if isinstance(doc, dict) else None
        if err is not None:
            code = err.get("code") if isinstance(err, dict) else None
            message = err.get("message", "") if isinstance(err, dict) else str(err)
            if _is_config_error(code, message):
                raise ConfigurationError(f"node at {self.endpoint} cannot trace blocks: {message} (code {code})")
            raise RpcError(code if code is not None else 0, message)
        return body

    def __call__(self, block_number: int, tracer_kind: str) -> bytes:
        return self.trace_block_raw(block_number, tracer_kind)


def trace_block(endpoint: str, block_number: int, tracer_kind: str, **client_kw) -> bytes:
    return RpcClient(endpoint, **client_kw).trace_block_raw(block_number, tracer_kind)


class FixtureMissing(TransportError):
    pass


class FixtureSource:
    """Offline stand-in for :class:`RpcClient` reading a store-layout directory."""

    def __init__(self, root):
        self.layout = StoreLayout(root)

    def __call__(self, block_number: int, tracer_kind: str) -> bytes:
        body = load_raw(self.layout, block_number, tracer_kind)
        if body is None:
            raise FixtureMissing(f"no {tracer_kind} fixture for block {block_number} under {self.layout.root}")
        return body


@dataclass
class FetchJob:
    start: int
    end: int
    tracers: tuple[str, ...]
    out: Path
    checkpoint_path: Path | None = None
    endpoint: str | None = None
    concurrency: int = DEFAULT_CONCURRENCY

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"empty block range [{self.start}, {self.end})")
        if not self.tracers:
            raise ValueError("at least one tracer kind is required")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        self.out = Path(self.out)
        if self.checkpoint_path is None:
            self.checkpoint_path = self.out / "checkpoint.json"
        self.checkpoint_path = Path(self.checkpoint_path)


def read_checkpoint(path: Path) -> int | None:
    if not path.exists():
        return None
    try:
        doc = json.loads(path.read_text())
        return int(doc["next_block"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigurationError(f"invalid checkpoint file {path}: {exc}") from None


def write_checkpoint(path: Path, next_block: int) -> None:
    current = read_checkpoint(path)
    if current is not None and current >= next_block:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps({"next_block": next_block}) + "\n")
    os.replace(tmp, path)


def _log_failure(out: Path, block: int, exc: Exception) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "failures.jsonl", "a") as fh:
        fh.write(json.dumps({"block": block, "error": type(exc).__name__, "message": str(exc)}) + "\n")


def _fetch_all(source, block: int, tracers: Sequence[str]) -> dict[str, bytes]:
    return {kind: source(block, kind) for kind in tracers}


def run_fetch_job(job: FetchJob, source=None) -> Iterator[BlockTrace]:
    """Fetch, archive and yield every block of ``job`` in block order.

    ``source(block, kind) -> bytes`` defaults to an :class:`RpcClient` on
    ``job.endpoint``. Blocks before the checkpoint are skipped. A block that
    still fails after retries goes to ``failures.jsonl`` and is skipped;
    configuration errors abort the job.
    """
    if source is None:
        if not job.endpoint:
            raise ConfigurationError("no RPC endpoint given (use --rpc-url or ETH_RPC_URL)")
        source = RpcClient(job.endpoint)
    layout = StoreLayout(job.out)
    resume = read_checkpoint(job.checkpoint_path)
    first = max(job.start, resume) if resume is not None else job.start
    if first >= job.end:
        log.info("range [%d, %d) already complete", job.start, job.end)
        return
    blocks = iter(range(first, job.end))
    with ThreadPoolExecutor(max_workers=job.concurrency) as pool:
        window: deque = deque()

        def refill():
            while len(window) < job.concurrency:
                b = next(blocks, None)
                if b is None:
                    return
                window.append((b, pool.submit(_fetch_all, source, b, job.tracers)))

        refill()
        while window:
            block, fut = window.popleft()
            try:
                raws = fut.result()
            except ConfigurationError:
                for _, f in window:
                    f.cancel()
                raise
            except TxConflictError as exc:
                log.error("block %d skipped: %s", block, exc)
                _log_failure(job.out, block, exc)
                write_checkpoint(job.checkpoint_path, block + 1)
                refill()
                continue
            for kind, body in raws.items():
                archive_raw(layout, block, kind, body)
            trace = None
            try:
                trace = assemble_block(block, **raws)
            except TraceParseError as exc:
                log.error("block %d archived but failed to parse: %s", block, exc)
                _log_failure(job.out, block, exc)
            write_checkpoint(job.checkpoint_path, block + 1)
            refill()
            if trace is not None:
                yield trace
