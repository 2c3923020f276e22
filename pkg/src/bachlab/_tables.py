"""Graded-lexicographic multi-index tables for truncated Taylor arithmetic.

Four variables, orders 0..5.  One global ordering is used for every order:
multi-indices sorted by (degree, lexicographic), so the order-N coefficient
vector is a prefix of the order-(N+1) vector and truncation is slicing.

Tables built here (once, at import):

* ``INDICES``          -- (126, 4) int32, the multi-index exponents.
* ``NCOEFF[N]``        -- prefix length C(N+4, 4) for order N.
* ``MUL_TABLES[N]``    -- (it, jt, kt, starts) product-convolution triples for
                          target order N, sorted by output index kt so the
                          pure-numpy backend can use ``add.reduceat``.
* ``DIFF_SHIFT[i, m]`` -- index of alpha_m + e_i (source coefficient of the
                          d/dx_i derivative), with ``DIFF_SCALE`` the factor
                          alpha_m[i] + 1.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

NVARS = 4
MAX_ORDER = 5


def _build_indices(max_order: int) -> np.ndarray:
    # descending lex within each degree block puts e_i at position 1 + i,
    # which the variable-loading kernels rely on
    idx = []
    for deg in range(max_order + 1):
        block = []
        for a0 in range(deg + 1):
            for a1 in range(deg - a0 + 1):
                for a2 in range(deg - a0 - a1 + 1):
                    block.append((a0, a1, a2, deg - a0 - a1 - a2))
        block.sort(reverse=True)
        idx.extend(block)
    return np.array(idx, dtype=np.int32)


INDICES = _build_indices(MAX_ORDER)
NCOEFF = tuple(math.comb(n + NVARS, NVARS) for n in range(MAX_ORDER + 1))

_INDEX_OF = {tuple(int(x) for x in row): i for i, row in enumerate(INDICES)}
DEGREES = INDICES.sum(axis=1).astype(np.int32)

# factorial(alpha) = prod(alpha_i!) for partial-derivative extraction
FACTORIALS = np.array(
    [math.prod(math.factorial(int(e)) for e in row) for row in INDICES],
    dtype=np.float64,
)


def index_of(alpha) -> int:
    """Position of a multi-index in the global graded-lex ordering."""
    return _INDEX_OF[tuple(int(x) for x in alpha)]


def ncoeff(order: int) -> int:
    """Number of Taylor coefficients retained at the given order."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
    return NCOEFF[order]


@lru_cache(maxsize=None)
def mul_table(order: int):
    """Convolution triples (it, jt, kt, starts) for jet products at ``order``.

    ``c[kt[m]] += a[it[m]] * b[jt[m]]`` over all m implements the truncated
    Cauchy product.  Triples are sorted by kt; ``starts`` are the run starts
    of each kt value (every output index occurs, since (0, k) is a pair).
    """
    n = ncoeff(order)
    triples = []
    for i in range(n):
        for j in range(n):
            d = DEGREES[i] + DEGREES[j]
            if d > order:
                continue
            k = index_of(INDICES[i] + INDICES[j])
            triples.append((k, i, j))
    triples.sort()
    kt = np.array([t[0] for t in triples], dtype=np.int32)
    it = np.array([t[1] for t in triples], dtype=np.int32)
    jt = np.array([t[2] for t in triples], dtype=np.int32)
    starts = np.searchsorted(kt, np.arange(n)).astype(np.int32)
    return it, jt, kt, starts


def _build_diff_tables():
    shift = np.zeros((NVARS, NCOEFF[MAX_ORDER - 1]), dtype=np.int32)
    scale = np.zeros((NVARS, NCOEFF[MAX_ORDER - 1]), dtype=np.float64)
    e = np.eye(NVARS, dtype=np.int32)
    for i in range(NVARS):
        for m in range(NCOEFF[MAX_ORDER - 1]):
            shift[i, m] = index_of(INDICES[m] + e[i])
            scale[i, m] = INDICES[m, i] + 1
    return shift, scale


DIFF_SHIFT, DIFF_SCALE = _build_diff_tables()
