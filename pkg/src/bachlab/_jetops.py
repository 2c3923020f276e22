"""Batched tensor-of-jets operations used by the curvature pipeline.

Arrays here are shaped ``(P, 4, ..., 4, C)``: a leading batch-of-points axis,
chart-tensor axes of size 4, and the trailing Taylor-coefficient axis.  The
einsum-style :func:`jet_einsum` contracts tensor axes while multiplying jets,
compiling each spec once into flat gather patterns consumed by the active
kernel backend.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from ._tables import DIFF_SCALE, DIFF_SHIFT, NCOEFF
from .backend import kernels


def bmul(a, b, order):
    return kernels.jmul(a, b, order)


def bdiv(a, b, order):
    return kernels.jdiv(a, b, order)


def binv(a, order):
    return kernels.jinv(a, order)


def bdiff(a, axis, order):
    """d/dx_axis along the coefficient axis; order is the SOURCE order."""
    n = NCOEFF[order - 1]
    return a[..., DIFF_SHIFT[axis, :n]] * DIFF_SCALE[axis, :n]


def grad(a, order):
    """Stack of the four partial-derivative jets: (..., C) -> (..., 4, C')."""
    return np.stack([bdiff(a, i, order) for i in range(4)], axis=-2)


@lru_cache(maxsize=None)
def _pattern(spec: str):
    ins, outl = spec.split("->")
    sa, sb = ins.split(",")
    letters = sorted(set(sa) | set(sb) | set(outl))
    if set(outl) - (set(sa) | set(sb)):
        raise ValueError(f"output letters not in inputs: {spec}")
    trips = []
    for vals in itertools.product(range(4), repeat=len(letters)):
        env = dict(zip(letters, vals))
        ia = 0
        for ch in sa:
            ia = ia * 4 + env[ch]
        ib = 0
        for ch in sb:
            ib = ib * 4 + env[ch]
        io = 0
        for ch in outl:
            io = io * 4 + env[ch]
        trips.append((io, ia, ib))
    trips.sort()
    po = np.array([t[0] for t in trips], dtype=np.int32)
    pa = np.array([t[1] for t in trips], dtype=np.int32)
    pb = np.array([t[2] for t in trips], dtype=np.int32)
    uo, starts = np.unique(po, return_index=True)
    nout = 4 ** len(outl)
    return pa, pb, po, starts.astype(np.int32), uo.astype(np.int32), nout, len(sa), len(sb), len(outl)


def jet_einsum(spec: str, a, b, order):
    """Einsum over size-4 tensor axes with jet multiplication per element.

    ``spec`` uses single letters per axis, e.g. ``"ad,bcd->abc"``; the batch
    and coefficient axes are implicit.  Repeated letters within one operand
    are not supported (take a diagonal first).
    """
    pa, pb, po, starts, uo, nout, na, nb, no = _pattern(spec)
    n = NCOEFF[order]
    P = a.shape[0]
    a2 = np.ascontiguousarray(a[..., :n], dtype=np.float64).reshape(P, -1, n)
    b2 = np.ascontiguousarray(b[..., :n], dtype=np.float64).reshape(P, -1, n)
    if a2.shape[1] != 4**na or b2.shape[1] != 4**nb:
        raise ValueError(f"operand shapes do not match spec {spec!r}")
    out = kernels.contract(a2, b2, pa, pb, po, starts, uo, nout, order)
    return out.reshape((P,) + (4,) * no + (n,))


def values(a):
    """Constant terms: drop the coefficient axis."""
    return np.ascontiguousarray(a[..., 0])


def const_jets(v, order):
    """Lift plain values (...,) to constant jets (..., C)."""
    out = np.zeros(v.shape + (NCOEFF[order],))
    out[..., 0] = v
    return out


def identity_jets(P, order):
    """Batched identity matrix as jets: (P, 4, 4, C)."""
    out = np.zeros((P, 4, 4, NCOEFF[order]))
    for i in range(4):
        out[:, i, i, 0] = 1.0
    return out
