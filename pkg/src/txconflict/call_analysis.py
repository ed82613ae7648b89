"""Call-tree shape metrics and value-transfer classification."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .trace_model import BlockTrace, CallFrame, CallType, TxPrestate


@dataclass(frozen=True)
class TreeMetrics:
    node_count: float
    height: float
    mean_degree: float
    leaf_count: float

    def to_dict(self) -> dict:
        return asdict(self)


def tree_metrics(root: CallFrame) -> TreeMetrics:
    # height in edges; mean degree counts each tree edge at both ends
    nodes = leaves = height = 0
    stack = [(root, 0)]
    while stack:
        frame, depth = stack.pop()
        nodes += 1
        if not frame.calls:
            leaves += 1
        height = max(height, depth)
        stack.extend((c, depth + 1) for c in frame.calls)
    return TreeMetrics(nodes, height, 2.0 * (nodes - 1) / nodes, leaves)


def is_value_transfer(root: CallFrame, prestate: TxPrestate | None = None) -> bool:
    """A plain CALL with no input, no sub-calls, to a target without code.

    The code check needs the ``diffMode=false`` prestate; without it only the
    call-trace clauses are applied.
    """
    if root.call_type is not CallType.CALL or root.calls or root.input:
        return False
    if prestate is not None and prestate.accessed is not None:
        target = prestate.accessed.get(root.to)
        if target is not None and target.has_code:
            return False
    return True


@dataclass(frozen=True)
class BlockCallSummary:
    tx_count: int
    value_transfer_count: int
    value_transfer_ratio: float
    mean_tree: TreeMetrics | None


def block_call_summary(block: BlockTrace) -> BlockCallSummary:
    roots = block.call_roots or ()
    prestates = block.prestates
    n = len(roots)
    transfers = 0
    acc = [0.0, 0.0, 0.0, 0.0]
    counted = 0
    for i, root in enumerate(roots):
        if is_value_transfer(root, prestates[i] if prestates is not None else None):
            transfers += 1
            continue
        m = tree_metrics(root)
        acc[0] += m.node_count
        acc[1] += m.height
        acc[2] += m.mean_degree
        acc[3] += m.leaf_count
        counted += 1
    mean = TreeMetrics(*(a / counted for a in acc)) if counted else None
    return BlockCallSummary(n, transfers, transfers / n if n else 0.0, mean)
