"""Per-transaction read/write sets from prestate and call traces.

Two derivations are provided:

* prestate: field-granular. Writes come from the ``diffMode=true`` output,
  reads are the ``diffMode=false`` accessed state minus the writes.
* call tracer: address-granular and conservative. Every frame grants
  read/write permissions by call type; a STATICCALL makes its whole subtree
  read-only.
"""

from __future__ import annotations

import enum
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import GranularityError, MissingDiffError, MissingTraceError
from .trace_model import Address, CallFrame, CallType, PrestateAccount, TxPrestate


class Field(enum.IntEnum):
    BALANCE = 0
    NONCE = 1
    CODE = 2
    STORAGE = 3
    WHOLE_ACCOUNT = 4


class StateKey(NamedTuple):
    """One unit of state. Tuple ordering is (address, field tag, slot)."""

    address: Address
    field: Field
    slot: str = ""

    def __str__(self) -> str:
        if self.field is Field.WHOLE_ACCOUNT:
            return self.address
        if self.field is Field.STORAGE:
            return f"{self.address}.storage[{self.slot}]"
        return f"{self.address}.{self.field.name.lower()}"


def whole(address: Address) -> StateKey:
    return StateKey(address, Field.WHOLE_ACCOUNT)


class Method(str, enum.Enum):
    PRESTATE = "prestate"
    CALLTRACER = "calltracer"


class Cause(str, enum.Enum):
    BALANCE = "balance"
    NONCE = "nonce"
    STORAGE = "storage"
    CODE = "code"


_CAUSE_OF_FIELD = {
    Field.BALANCE: Cause.BALANCE,
    Field.NONCE: Cause.NONCE,
    Field.STORAGE: Cause.STORAGE,
    Field.CODE: Cause.CODE,
}


@dataclass(frozen=True)
class AccessSets:
    tx_index: int
    reads: frozenset[StateKey]
    writes: frozenset[StateKey]
    method: Method

    @property
    def granularity(self) -> str | None:
        """``"address"``, ``"field"``, or ``None`` when both sets are empty."""
        keys = self.reads | self.writes
        if not keys:
            return None
        whole_keys = sum(1 for k in keys if k.field is Field.WHOLE_ACCOUNT)
        if whole_keys == len(keys):
            return "address"
        if whole_keys == 0:
            return "field"
        raise GranularityError(f"tx {self.tx_index} mixes address and field keys")

    def sorted_reads(self) -> list[StateKey]:
        return sorted(self.reads)

    def sorted_writes(self) -> list[StateKey]:
        return sorted(self.writes)

    def read_addresses(self) -> frozenset[Address]:
        return frozenset(k.address for k in self.reads)

    def write_addresses(self) -> frozenset[Address]:
        return frozenset(k.address for k in self.writes)


def _account_keys(address: Address, acct: PrestateAccount) -> Iterable[StateKey]:
    if acct.balance is not None:
        yield StateKey(address, Field.BALANCE)
    if acct.nonce is not None:
        yield StateKey(address, Field.NONCE)
    if acct.code is not None:
        yield StateKey(address, Field.CODE)
    for slot in acct.storage or ():
        yield StateKey(address, Field.STORAGE, slot)


def _accessed_keys(address: Address, acct: PrestateAccount) -> list[StateKey]:
    keys = list(_account_keys(address, acct))
    # an entry with no fields still records that the account was looked up
    return keys or [StateKey(address, Field.BALANCE)]


def prestate_writes(tx: TxPrestate) -> frozenset[StateKey]:
    """Field-level write set from a ``diffMode=true`` result.

    The tracer lists every scalar field of a modified account on the ``pre``
    side but only changed fields on the ``post`` side, so scalars count as
    written when present in ``post``. Storage slots count from either side
    (a slot cleared to zero is dropped from ``post``). An account missing from
    ``post`` was destroyed and everything it had is written.
    """
    if not tx.has_diff:
        raise MissingDiffError("prestate write set needs diffMode=true output; fetch both prestate modes")
    pre, post = tx.pre, tx.post
    writes: set[StateKey] = set()
    for address in set(pre) | set(post):
        before = pre.get(address)
        after = post.get(address)
        if after is None:
            writes.update(_accessed_keys(address, before))
            continue
        writes.update(_account_keys(address, after))
        if before is not None:
            for slot in before.storage or ():
                writes.add(StateKey(address, Field.STORAGE, slot))
        if after.is_empty() and (before is None or not before.storage):
            writes.add(StateKey(address, Field.BALANCE))
    return frozenset(writes)


def rwsets_from_prestate(tx: TxPrestate, tx_index: int = 0) -> AccessSets:
    if tx.accessed is None or not tx.has_diff:
        raise MissingDiffError(
            f"tx {tx_index}: prestate read/write sets need both diffMode=false and diffMode=true output"
        )
    writes = prestate_writes(tx)
    accessed: set[StateKey] = set()
    for address, acct in tx.accessed.items():
        accessed.update(_accessed_keys(address, acct))
    return AccessSets(tx_index, frozenset(accessed - writes), writes, Method.PRESTATE)


def _permissions(frame: CallFrame) -> tuple[tuple[Address, ...], tuple[Address, ...]]:
    ct = frame.call_type
    if ct is CallType.CALL:
        return (frame.from_, frame.to), (frame.from_, frame.to)
    if ct is CallType.STATICCALL:
        return (frame.from_, frame.to), ()
    if ct in (CallType.DELEGATECALL, CallType.CALLCODE):
        return (frame.from_, frame.to), (frame.from_,)
    # CREATE, CREATE2, SELFDESTRUCT
    return (frame.from_,), (frame.from_, frame.to)


def rwsets_from_calltrace(root: CallFrame, tx_index: int = 0) -> AccessSets:
    reads: set[StateKey] = set()
    writes: set[StateKey] = set()
    stack = [(root, False)]
    while stack:
        frame, static = stack.pop()
        r, w = _permissions(frame)
        reads.update(whole(a) for a in r)
        static = static or frame.call_type is CallType.STATICCALL
        if static:
            # read-only context: a frame that would write still reads its targets
            reads.update(whole(a) for a in w)
        else:
            writes.update(whole(a) for a in w)
        stack.extend((c, static) for c in frame.calls)
    return AccessSets(tx_index, frozenset(reads), frozenset(writes), Method.CALLTRACER)


def project_to_address(sets: AccessSets) -> AccessSets:
    writes = frozenset(whole(k.address) for k in sets.writes)
    reads = frozenset(whole(k.address) for k in sets.reads) - writes
    return AccessSets(sets.tx_index, reads, writes, sets.method)


def _require_fields(sets: AccessSets) -> None:
    if any(k.field is Field.WHOLE_ACCOUNT for k in sets.reads | sets.writes):
        raise GranularityError(
            f"tx {sets.tx_index}: cause attribution requires field-granular (prestate) sets"
        )


def conflict_causes(a: AccessSets, b: AccessSets) -> list[tuple[Address, Cause]]:
    """Write-write collisions between two transactions, one entry per shared key."""
    _require_fields(a)
    _require_fields(b)
    return sorted((k.address, _CAUSE_OF_FIELD[k.field]) for k in a.writes & b.writes)


def ww_attribution(sets: Sequence[AccessSets]) -> Counter:
    """Sum of :func:`conflict_causes` over every unordered pair in a block.

    A key written by ``k`` transactions contributes ``k*(k-1)/2`` entries.
    """
    writers: dict[StateKey, int] = defaultdict(int)
    for s in sets:
        _require_fields(s)
        for k in s.writes:
            writers[k] += 1
    out: Counter = Counter()
    for key, k in writers.items():
        if k > 1:
            out[(key.address, _CAUSE_OF_FIELD[key.field])] += k * (k - 1) // 2
    return out


def cause_totals(attribution: Counter) -> dict[str, int]:
    totals = {c.value: 0 for c in Cause}
    for (_, cause), n in attribution.items():
        totals[cause.value] += n
    return totals


def block_access_sets(block, method: Method) -> list[AccessSets]:
    """Access sets for every transaction of a BlockTrace."""
    if method is Method.PRESTATE:
        if block.prestates is None:
            raise MissingTraceError(f"block {block.block_number}: no prestate traces")
        return [rwsets_from_prestate(tx, i) for i, tx in enumerate(block.prestates)]
    if block.call_roots is None:
        raise MissingTraceError(f"block {block.block_number}: no call traces")
    return [rwsets_from_calltrace(root, i) for i, root in enumerate(block.call_roots)]
