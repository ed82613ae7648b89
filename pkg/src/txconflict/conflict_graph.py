"""Intra-block conflict graphs built from per-transaction access sets."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GranularityError
from .rwsets import AccessSets, Method


class ConflictMode(str, enum.Enum):
    RW = "rw"  # read-write / write-read only
    ALL = "all"  # also write-write


@dataclass(frozen=True)
class ConflictGraph:
    num_nodes: int
    edges: frozenset[tuple[int, int]]
    mode: ConflictMode = ConflictMode.ALL
    method: Method | None = None

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < j < self.num_nodes):
                raise ValueError(f"invalid edge ({i}, {j}) for {self.num_nodes} nodes")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], mode=ConflictMode.ALL, method=None):
        norm = set()
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            norm.add((min(i, j), max(i, j)))
        return cls(n, frozenset(norm), mode, method)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency as (indptr, indices) with each neighbor list ascending."""
        n = self.num_nodes
        if not self.edges:
            return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
        e = np.array(self.sorted_edges(), dtype=np.int64)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, np.ascontiguousarray(dst)

    @cached_property
    def degrees(self) -> np.ndarray:
        indptr, _ = self.csr
        return np.diff(indptr)

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.csr
        return indices[indptr[v] : indptr[v + 1]]

    def to_edgelist(self) -> str:
        lines = [f"{self.num_nodes} {self.num_edges}"]
        lines.extend(f"{i} {j}" for i, j in self.sorted_edges())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str, mode=ConflictMode.ALL, method=None) -> "ConflictGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise ValueError("empty edge list")
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
        if len(edges) != m:
            raise ValueError(f"edge list header says {m} edges, found {len(edges)}")
        return cls.from_edges(n, edges, mode, method)


def _check_uniform(sets: Sequence[AccessSets]) -> Method | None:
    methods = {s.method for s in sets}
    if len(methods) > 1:
        raise GranularityError(f"access sets mix methods {sorted(m.value for m in methods)}")
    grains = {s.granularity for s in sets} - {None}
    if len(grains) > 1:
        raise GranularityError("access sets mix address and field granularity")
    for pos, s in enumerate(sets):
        if s.tx_index != pos:
            raise ValueError(f"access sets must be ordered by tx_index; position {pos} holds {s.tx_index}")
    return methods.pop() if methods else None


def build_conflict_graph(sets: Sequence[AccessSets], mode: ConflictMode | str = ConflictMode.ALL) -> ConflictGraph:
    """Connect every pair of transactions whose accesses conflict under ``mode``.

    Uses an inverted index key -> (readers, writers), so only transactions
    that share a key are ever paired.
    """
    mode = ConflictMode(mode)
    method = _check_uniform(sets)
    readers: dict = defaultdict(list)
    writers: dict = defaultdict(list)
    for s in sets:
        for k in s.reads:
            readers[k].append(s.tx_index)
        for k in s.writes:
            writers[k].append(s.tx_index)
    edges: set[tuple[int, int]] = set()
    for key, ws in writers.items():
        partners = list(readers.get(key, ()))
        if mode is ConflictMode.ALL:
            partners.extend(ws)
        for w in ws:
            for p in partners:
                if p != w:
                    edges.add((w, p) if w < p else (p, w))
    return ConflictGraph(len(sets), frozenset(edges), mode, method)
