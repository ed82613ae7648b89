"""Backend selection for the graph kernels.

The compiled ``_ckernels`` module is used when it imports; otherwise the
pure-Python ``_pykernels``. Set ``TXCONFLICT_PURE_PYTHON=1`` to force the
fallback. Both backends return identical results for identical inputs.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("TXCONFLICT_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels


def backends() -> dict:
    """Every importable backend module, keyed by name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out


def as_csr(indptr, indices) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
    )


def component_labels(n, indptr, indices, impl=None):
    return (impl or _impl).component_labels(n, *as_csr(indptr, indices))


def max_eccentricity(n, indptr, indices, sources, impl=None):
    return (impl or _impl).max_eccentricity(n, *as_csr(indptr, indices), list(sources))


def dsatur(n, indptr, indices, impl=None):
    return (impl or _impl).dsatur(n, *as_csr(indptr, indices))


def degeneracy_order(n, indptr, indices, impl=None):
    return (impl or _impl).degeneracy_order(n, *as_csr(indptr, indices))


def max_clique(n, indptr, indices, budget, impl=None):
    return (impl or _impl).max_clique(n, *as_csr(indptr, indices), int(budget))


def longest_path_mc(n, indptr, indices, comp_nodes, comp_ptr, starts, seed, impl=None):
    return (impl or _impl).longest_path_mc(
        n,
        *as_csr(indptr, indices),
        np.ascontiguousarray(comp_nodes, dtype=np.int64),
        np.ascontiguousarray(comp_ptr, dtype=np.int64),
        int(starts),
        int(seed) & _pykernels.MASK64,
    )
