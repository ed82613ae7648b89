"""Synthetic graphs and access-set workloads for tests and demos."""

from __future__ import annotations

import random

from .conflict_graph import ConflictGraph
from .rwsets import AccessSets, Field, Method, StateKey


def star(n: int) -> ConflictGraph:
    """K_{1,n-1} with the hub at index 0."""
    return ConflictGraph.from_edges(n, [(0, i) for i in range(1, n)])


def complete(n: int) -> ConflictGraph:
    return ConflictGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path(n: int) -> ConflictGraph:
    return ConflictGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


chain = path


def cycle(n: int) -> ConflictGraph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 nodes")
    return ConflictGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def gnp(n: int, p: float, seed: int = 0) -> ConflictGraph:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    rng = random.Random(seed)
    return ConflictGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def _addr(i: int) -> str:
    return "0x" + f"{i:040x}"


HOT_KEY = StateKey(_addr(0xF00D), Field.STORAGE, "0x" + "0" * 64)


def hotspot_sets(n: int, hub_degree: int, seed: int = 0) -> list[AccessSets]:
    """Tx 0 writes one hot slot, ``hub_degree`` others read it.

    Every transaction also writes its own private balance, so the RW conflict
    graph is exactly a star on the hub and its readers.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= hub_degree <= n - 1:
        raise ValueError(f"hub_degree must be in [0, {n - 1}]")
    rng = random.Random(seed)
    readers = set(rng.sample(range(1, n), hub_degree))
    out = []
    for i in range(n):
        own = StateKey(_addr(0x1000 + i), Field.BALANCE)
        reads: set[StateKey] = set()
        writes = {own}
        if i == 0:
            writes.add(HOT_KEY)
        elif i in readers:
            reads.add(HOT_KEY)
        out.append(AccessSets(i, frozenset(reads), frozenset(writes), Method.PRESTATE))
    return out


def random_access_sets(
    n: int,
    n_keys: int,
    p_read: float,
    p_write: float,
    rng: random.Random,
    method: Method = Method.PRESTATE,
    whole_account: bool = False,
) -> list[AccessSets]:
    """Independent random reads/writes over a pool of keys, reads and writes disjoint."""
    if whole_account:
        keys = [StateKey(_addr(k), Field.WHOLE_ACCOUNT) for k in range(n_keys)]
    else:
        keys = [StateKey(_addr(k // 4), Field(k % 4), "0x" + f"{k:064x}" if k % 4 == 3 else "") for k in range(n_keys)]
    out = []
    for i in range(n):
        reads, writes = set(), set()
        for key in keys:
            u = rng.random()
            if u < p_write:
                writes.add(key)
            elif u < p_write + p_read:
                reads.add(key)
        out.append(AccessSets(i, frozenset(reads), frozenset(writes), method))
    return out


def sets_to_json(sets) -> list[dict]:
    def enc(k: StateKey):
        return [k.address, k.field.name.lower(), k.slot]

    return [
        {
            "tx_index": s.tx_index,
            "method": s.method.value,
            "reads": [enc(k) for k in s.sorted_reads()],
            "writes": [enc(k) for k in s.sorted_writes()],
        }
        for s in sets
    ]


def sets_from_json(docs) -> list[AccessSets]:
    def dec(row):
        return StateKey(row[0], Field[row[1].upper()], row[2])

    return [
        AccessSets(
            d["tx_index"],
            frozenset(dec(r) for r in d["reads"]),
            frozenset(dec(r) for r in d["writes"]),
            Method(d["method"]),
        )
        for d in docs
    ]

