"""Tracer output types and parsers for ``debug_traceBlockByNumber`` responses.

Two tracers are understood: ``callTracer`` (nested call frames) and
``prestateTracer`` in both of its modes. Parsed structures are immutable.
Addresses and storage slots are kept as canonical lowercase hex strings, so
plain string ordering is the same as ordering by the underlying bytes.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Iterator, Mapping, Sequence

from .errors import DepthLimitError, ModeMismatchError, TraceParseError, UnknownCallTypeError

log = logging.getLogger(__name__)

# EVM call-stack bound: the deepest sub-call sits this many edges below the root.
MAX_CALL_DEPTH = 1024

Address = str


class CallType(str, enum.Enum):
    CALL = "CALL"
    STATICCALL = "STATICCALL"
    DELEGATECALL = "DELEGATECALL"
    CALLCODE = "CALLCODE"
    CREATE = "CREATE"
    CREATE2 = "CREATE2"
    SELFDESTRUCT = "SELFDESTRUCT"

    @classmethod
    def parse(cls, raw: Any, tx_index: int | None = None) -> "CallType":
        if isinstance(raw, str):
            try:
                return cls(raw.upper())
            except ValueError:
                pass
        raise UnknownCallTypeError(str(raw), tx_index)


def _strip0x(s: str) -> str:
    return s[2:] if s[:2] in ("0x", "0X") else s


def parse_address(raw: Any) -> Address:
    """Normalize a 20-byte hex address to ``0x`` + 40 lowercase hex digits."""
    if not isinstance(raw, str):
        raise TraceParseError(f"address must be a hex string, got {raw!r}")
    body = _strip0x(raw)
    if len(body) != 40:
        raise TraceParseError(f"address {raw!r} is not 20 bytes")
    try:
        bytes.fromhex(body)
    except ValueError:
        raise TraceParseError(f"address {raw!r} is not valid hex") from None
    return "0x" + body.lower()


def parse_quantity(raw: Any) -> int:
    """Decode a numeric field given as hex string, decimal string, or int."""
    if isinstance(raw, bool):
        raise TraceParseError(f"invalid quantity {raw!r}")
    if isinstance(raw, int):
        if raw < 0:
            raise TraceParseError(f"negative quantity {raw!r}")
        return raw
    if isinstance(raw, str):
        s = raw.strip()
        try:
            if s[:2] in ("0x", "0X"):
                return int(s[2:], 16) if len(s) > 2 else 0
            if s.isdigit():
                return int(s)
        except ValueError:
            pass
    raise TraceParseError(f"invalid quantity {raw!r}")


def parse_bytes(raw: Any) -> bytes:
    if raw is None:
        return b""
    if not isinstance(raw, str):
        raise TraceParseError(f"byte string must be hex, got {raw!r}")
    body = _strip0x(raw)
    if len(body) % 2:
        body = "0" + body
    try:
        return bytes.fromhex(body)
    except ValueError:
        raise TraceParseError(f"invalid hex byte string {raw[:80]!r}") from None


def normalize_word(raw: Any) -> str:
    """Canonical 32-byte word: ``0x`` + 64 lowercase hex digits, left-zero-padded."""
    if not isinstance(raw, str):
        raise TraceParseError(f"storage word must be a hex string, got {raw!r}")
    body = _strip0x(raw).lower()
    if len(body) > 64:
        raise TraceParseError(f"storage word {raw!r} exceeds 32 bytes")
    try:
        int(body or "0", 16)
    except ValueError:
        raise TraceParseError(f"invalid storage word {raw!r}") from None
    return "0x" + body.rjust(64, "0")


def _hex(n: int) -> str:
    return hex(n)


@contextmanager
def _deep_json():
    # json recurses once per nesting level; deep call trees need more head room.
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20 * MAX_CALL_DEPTH))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def loads(text: str | bytes) -> Any:
    with _deep_json():
        return json.loads(text)


def dumps(doc: Any) -> str:
    with _deep_json():
        return json.dumps(doc, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Call tracer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CallFrame:
    call_type: CallType
    from_: Address
    to: Address
    value: int = 0
    gas: int = 0
    gas_used: int = 0
    input: bytes = b""
    output: bytes | None = None
    error: str | None = None
    revert_reason: str | None = None
    calls: tuple["CallFrame", ...] = ()
    # True when ``to`` was synthesized for a CREATE frame without a target.
    to_synthetic: bool = False

    def iter_frames(self) -> Iterator["CallFrame"]:
        """Pre-order traversal, iterative so deep trees are safe."""
        stack = [self]
        while stack:
            f = stack.pop()
            yield f
            stack.extend(reversed(f.calls))

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_frames())

    def to_dict(self) -> dict:
        """Render back into the tracer's JSON shape."""
        out_of: dict[int, dict] = {}
        order = []
        stack = [self]
        while stack:
            f = stack.pop()
            order.append(f)
            stack.extend(f.calls)
        for f in reversed(order):
            d: dict[str, Any] = {"type": f.call_type.value, "from": f.from_}
            if not f.to_synthetic:
                d["to"] = f.to
            d["value"] = _hex(f.value)
            d["gas"] = _hex(f.gas)
            d["gasUsed"] = _hex(f.gas_used)
            d["input"] = "0x" + f.input.hex()
            if f.output is not None:
                d["output"] = "0x" + f.output.hex()
            if f.error is not None:
                d["error"] = f.error
            if f.revert_reason is not None:
                d["revertReason"] = f.revert_reason
            if f.calls:
                d["calls"] = [out_of[id(c)] for c in f.calls]
            out_of[id(f)] = d
        return out_of[id(self)]


def synthetic_create_address(from_: Address, path: Sequence[int]) -> Address:
    """Stand-in target for a CREATE frame whose tracer output has no ``to``."""
    tag = ".".join(str(p) for p in path)
    digest = hashlib.sha256(b"create:" + bytes.fromhex(from_[2:]) + b":" + tag.encode()).digest()
    return "0x" + digest[:20].hex()


def parse_frame(raw: Any, tx_index: int | None = None) -> CallFrame:
    """Parse one top-level call frame (and its subtree) from decoded JSON."""
    # Pre-order walk with an explicit stack, then build bottom-up. Depth is
    # the EVM call depth: 0 for the transaction's own frame.
    nodes: list[tuple[dict, int, tuple[int, ...], int]] = []
    stack: list[tuple[Any, int, tuple[int, ...], int]] = [(raw, 0, (), -1)]
    base = () if tx_index is None else (tx_index,)
    while stack:
        r, depth, path, parent = stack.pop()
        if depth > MAX_CALL_DEPTH:
            raise DepthLimitError(f"call depth exceeds {MAX_CALL_DEPTH}", tx_index)
        if not isinstance(r, dict):
            raise TraceParseError(f"call frame at path {path} is not an object", tx_index)
        me = len(nodes)
        nodes.append((r, depth, path, parent))
        children = r.get("calls") or []
        if not isinstance(children, list):
            raise TraceParseError(f"'calls' at path {path} is not a list", tx_index)
        for i in range(len(children) - 1, -1, -1):
            stack.append((children[i], depth + 1, path + (i,), me))

    built: list[CallFrame | None] = [None] * len(nodes)
    kids: list[list[CallFrame]] = [[] for _ in nodes]
    for idx in range(len(nodes) - 1, -1, -1):
        r, _, path, parent = nodes[idx]
        try:
            ctype = CallType.parse(r.get("type"), tx_index)
            from_ = parse_address(r.get("from"))
            to_raw = r.get("to")
            synthetic = False
            if to_raw in (None, "", "0x"):
                if ctype not in (CallType.CREATE, CallType.CREATE2):
                    raise TraceParseError(f"{ctype.value} frame without 'to'")
                to = synthetic_create_address(from_, base + path)
                synthetic = True
            else:
                to = parse_address(to_raw)
            frame = CallFrame(
                call_type=ctype,
                from_=from_,
                to=to,
                value=parse_quantity(r.get("value", 0)),
                gas=parse_quantity(r.get("gas", 0)),
                gas_used=parse_quantity(r.get("gasUsed", 0)),
                input=parse_bytes(r.get("input")),
                output=parse_bytes(r["output"]) if r.get("output") is not None else None,
                error=r.get("error"),
                revert_reason=r.get("revertReason"),
                calls=tuple(reversed(kids[idx])),
                to_synthetic=synthetic,
            )
        except TraceParseError as exc:
            if exc.tx_index is None and tx_index is not None:
                raise type(exc)(*_reargs(exc, tx_index)) from None
            raise
        if frame.gas_used > frame.gas:
            log.debug("frame at path %s: gasUsed %d > gas %d", path, frame.gas_used, frame.gas)
        built[idx] = frame
        if parent >= 0:
            kids[parent].append(frame)
    assert built[0] is not None
    return built[0]


def _reargs(exc: TraceParseError, tx_index: int) -> tuple:
    if isinstance(exc, UnknownCallTypeError):
        return (exc.call_type, tx_index)
    return (str(exc), tx_index)


def _tx_entries(doc: Any) -> list[tuple[str | None, Any]]:
    """Split a block-level tracer document into (tx_hash, result) pairs."""
    if isinstance(doc, dict):
        if "error" in doc and "result" not in doc:
            err = doc["error"]
            msg = err.get("message") if isinstance(err, dict) else err
            raise TraceParseError(f"rpc response carries an error: {msg}")
        if "result" in doc:
            doc = doc["result"]
    if doc is None:
        return []
    if not isinstance(doc, list):
        raise TraceParseError("tracer document must be a list of per-transaction results")
    out = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise TraceParseError("transaction entry is not an object", i)
        if "error" in entry and "result" not in entry and "type" not in entry:
            raise TraceParseError(f"tracer failed: {entry['error']}", i)
        tx_hash = entry.get("txHash")
        if tx_hash is not None:
            tx_hash = normalize_word(tx_hash)
        out.append((tx_hash, entry["result"] if "result" in entry else entry))
    return out


def _decode(text: str | bytes | Any) -> Any:
    if isinstance(text, (str, bytes, bytearray)):
        try:
            return loads(text)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"malformed JSON: {exc}") from None
    return text


def parse_call_trace(text: str | bytes | Any) -> list[CallFrame]:
    """Parse a block's ``callTracer`` response into one root frame per transaction."""
    return [parse_frame(res, i) for i, (_, res) in enumerate(_tx_entries(_decode(text)))]


def tx_hashes_of(text: str | bytes | Any) -> list[str | None]:
    return [h for h, _ in _tx_entries(_decode(text))]


def dump_call_trace(roots: Sequence[CallFrame], tx_hashes: Sequence[str | None] | None = None) -> str:
    entries = []
    for i, root in enumerate(roots):
        e: dict[str, Any] = {}
        if tx_hashes is not None and tx_hashes[i] is not None:
            e["txHash"] = tx_hashes[i]
        e["result"] = root.to_dict()
        entries.append(e)
    return dumps(entries)


# ---------------------------------------------------------------------------
# Prestate tracer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrestateAccount:
    balance: int | None = None
    nonce: int | None = None
    code: bytes | None = None
    storage: Mapping[str, str] | None = None

    def is_empty(self) -> bool:
        return self.balance is None and self.nonce is None and self.code is None and self.storage is None

    @property
    def has_code(self) -> bool:
        return bool(self.code)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {}
        if self.balance is not None:
            d["balance"] = _hex(self.balance)
        if self.nonce is not None:
            d["nonce"] = self.nonce
        if self.code is not None:
            d["code"] = "0x" + self.code.hex()
        if self.storage is not None:
            d["storage"] = dict(self.storage)
        return d


def parse_account(raw: Any, tx_index: int | None = None) -> PrestateAccount:
    if not isinstance(raw, dict):
        raise TraceParseError("prestate account entry is not an object", tx_index)
    try:
        storage = raw.get("storage")
        if storage is not None:
            if not isinstance(storage, dict):
                raise TraceParseError("storage is not an object")
            storage = {normalize_word(k): normalize_word(v) for k, v in storage.items()}
        acct = PrestateAccount(
            balance=parse_quantity(raw["balance"]) if raw.get("balance") is not None else None,
            nonce=parse_quantity(raw["nonce"]) if raw.get("nonce") is not None else None,
            code=parse_bytes(raw["code"]) if raw.get("code") is not None else None,
            storage=storage,
        )
    except TraceParseError as exc:
        if exc.tx_index is None:
            raise TraceParseError(str(exc), tx_index) from None
        raise
    if acct.is_empty():
        log.debug("tx %s: prestate account entry with no fields", tx_index)
    return acct


def _parse_accounts(raw: Any, tx_index: int) -> dict[Address, PrestateAccount]:
    if not isinstance(raw, dict):
        raise TraceParseError("account map is not an object", tx_index)
    out = {}
    for addr, acct in raw.items():
        try:
            key = parse_address(addr)
        except TraceParseError as exc:
            raise TraceParseError(str(exc), tx_index) from None
        out[key] = parse_account(acct, tx_index)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class TxPrestate:
    """Prestate tracer results for one transaction.

    ``accessed`` comes from ``diffMode=false``; ``pre``/``post`` from
    ``diffMode=true``. Either half is ``None`` when that mode was not fetched.
    """

    accessed: Mapping[Address, PrestateAccount] | None = None
    pre: Mapping[Address, PrestateAccount] | None = None
    post: Mapping[Address, PrestateAccount] | None = None

    @property
    def has_diff(self) -> bool:
        return self.pre is not None and self.post is not None

    @property
    def created(self) -> frozenset[Address]:
        if not self.has_diff:
            return frozenset()
        return frozenset(self.post) - frozenset(self.pre)

    def merged(self, other: "TxPrestate") -> "TxPrestate":
        return TxPrestate(
            accessed=self.accessed if self.accessed is not None else other.accessed,
            pre=self.pre if self.pre is not None else other.pre,
            post=self.post if self.post is not None else other.post,
        )


_DIFF_KEYS = {"pre", "post"}


def _is_diff_shape(res: dict) -> bool:
    return bool(res) and set(res) <= _DIFF_KEYS


def parse_prestate(text: str | bytes | Any, diff_mode: bool) -> list[TxPrestate]:
    """Parse a block's ``prestateTracer`` response in the given mode."""
    out = []
    for i, (_, res) in enumerate(_tx_entries(_decode(text))):
        if res is None:
            res = {}
        if not isinstance(res, dict):
            raise TraceParseError("prestate result is not an object", i)
        if diff_mode:
            if res and not _is_diff_shape(res):
                raise ModeMismatchError("expected diffMode=true result with 'pre'/'post' keys", i)
            pre = _parse_accounts(res.get("pre") or {}, i)
            post = _parse_accounts(res.get("post") or {}, i)
            out.append(TxPrestate(pre=pre, post=post))
        else:
            if _is_diff_shape(res):
                raise ModeMismatchError("got a diffMode=true result where diffMode=false was expected", i)
            out.append(TxPrestate(accessed=_parse_accounts(res, i)))
    return out


def dump_prestate(txs: Sequence[TxPrestate], diff_mode: bool, tx_hashes: Sequence[str | None] | None = None) -> str:
    entries = []
    for i, tx in enumerate(txs):
        if diff_mode:
            res = {
                "pre": {a: acct.to_dict() for a, acct in (tx.pre or {}).items()},
                "post": {a: acct.to_dict() for a, acct in (tx.post or {}).items()},
            }
        else:
            res = {a: acct.to_dict() for a, acct in (tx.accessed or {}).items()}
        e: dict[str, Any] = {}
        if tx_hashes is not None and tx_hashes[i] is not None:
            e["txHash"] = tx_hashes[i]
        e["result"] = res
        entries.append(e)
    return dumps(entries)


# ---------------------------------------------------------------------------
# Block
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockTrace:
    """All traces of one block, index-aligned by transaction position.

    ``call_roots`` / ``prestates`` are ``None`` when the tracer was not fetched.
    """

    block_number: int
    tx_hashes: tuple[str | None, ...] = ()
    call_roots: tuple[CallFrame, ...] | None = None
    prestates: tuple[TxPrestate, ...] | None = None

    def __post_init__(self):
        n = len(self.tx_hashes)
        for name in ("call_roots", "prestates"):
            seq = getattr(self, name)
            if seq is not None and len(seq) != n:
                raise TraceParseError(
                    f"block {self.block_number}: {name} has {len(seq)} entries, expected {n}"
                )

    @property
    def tx_count(self) -> int:
        return len(self.tx_hashes)


def assemble_block(
    block_number: int,
    call: str | bytes | None = None,
    prestate: str | bytes | None = None,
    prestate_diff: str | bytes | None = None,
) -> BlockTrace:
    """Build a BlockTrace from whichever raw tracer documents are available."""
    roots = hashes = None
    accessed = diffs = None
    if call is not None:
        doc = _decode(call)
        roots = parse_call_trace(doc)
        hashes = tx_hashes_of(doc)
    if prestate is not None:
        doc = _decode(prestate)
        accessed = parse_prestate(doc, diff_mode=False)
        hashes = hashes or tx_hashes_of(doc)
    if prestate_diff is not None:
        doc = _decode(prestate_diff)
        diffs = parse_prestate(doc, diff_mode=True)
        hashes = hashes or tx_hashes_of(doc)
    lengths = {len(x) for x in (roots, accessed, diffs) if x is not None}
    if len(lengths) > 1:
        raise TraceParseError(f"block {block_number}: tracer documents disagree on transaction count {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    if hashes is None or len(hashes) != n:
        hashes = [None] * n
    prestates = None
    if accessed is not None or diffs is not None:
        prestates = tuple(
            (accessed[i] if accessed is not None else TxPrestate()).merged(
                diffs[i] if diffs is not None else TxPrestate()
            )
            for i in range(n)
        )
    return BlockTrace(
        block_number=block_number,
        tx_hashes=tuple(hashes),
        call_roots=tuple(roots) if roots is not None else None,
        prestates=prestates,
    )
