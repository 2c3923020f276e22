"""Pure-numpy jet kernels: the fallback backend.

Every kernel operates on batched Taylor-coefficient arrays whose trailing
axis holds the graded-lex coefficients (length ``ncoeff(order)``).  Leading
axes are arbitrary (points, tensor slots) and are vectorized over; the
convolution over coefficient triples uses gather + ``add.reduceat`` so the
fallback stays array-at-a-time rather than coefficient-at-a-time.
"""

from __future__ import annotations

import math

import numpy as np

from ._tables import NCOEFF, mul_table, ncoeff
from . import _ops

NAME = "numpy"


def jmul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Truncated Taylor product along the trailing coefficient axis."""
    it, jt, _kt, starts = mul_table(order)
    n = NCOEFF[order]
    a, b = np.broadcast_arrays(a[..., :n], b[..., :n])
    prod = a[..., it] * b[..., jt]
    return np.add.reduceat(prod, starts, axis=-1)


def contract(a, b, pa, pb, po, starts, uo, nout, order):
    """Tensor contraction with jet multiplication.

    a: (P, Ra, C), b: (P, Rb, C); for each pattern entry q the jet product
    a[:, pa[q]] * b[:, pb[q]] is accumulated into slot po[q] of the output
    (P, nout, C).  Pattern arrays are pre-sorted by po; ``starts``/``uo``
    are the run starts and unique output slots.
    """
    it, jt, _kt, cstarts = mul_table(order)
    n = NCOEFF[order]
    prod = a[:, pa][..., it] * b[:, pb][..., jt]          # (P, Q, T)
    summed = np.add.reduceat(prod, cstarts, axis=-1)      # (P, Q, n)
    out = np.zeros((a.shape[0], nout, n))
    out[:, uo] = np.add.reduceat(summed, starts, axis=1)
    return out


def jinv(b: np.ndarray, order: int) -> np.ndarray:
    """Reciprocal jet via Horner evaluation of the geometric series."""
    n = NCOEFF[order]
    b = b[..., :n]
    b0 = b[..., :1]
    xbar = b.copy()
    xbar[..., 0] = 0.0
    inv_b0 = 1.0 / b0
    # d_k = (-1)^k / b0^(k+1)
    r = np.zeros_like(b)
    r[..., 0] = (-1.0) ** order * (inv_b0[..., 0] ** (order + 1))
    for k in range(order - 1, -1, -1):
        r = jmul(r, xbar, order)
        r[..., 0] += (-1.0) ** k * (inv_b0[..., 0] ** (k + 1))
    return r


def jdiv(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return jmul(a, jinv(b, order), order)


def jpow_int(a: np.ndarray, n: int, order: int) -> np.ndarray:
    """Integer power by binary exponentiation (negative via reciprocal)."""
    if n == 0:
        out = np.zeros_like(a[..., : NCOEFF[order]])
        out[..., 0] = 1.0
        return out
    base = a if n > 0 else jinv(a, order)
    m = abs(n)
    out = None
    while m:
        if m & 1:
            out = base if out is None else jmul(out, base, order)
        m >>= 1
        if m:
            base = jmul(base, base, order)
    return out


def fn_taylor_coeffs(fid: int, x0: np.ndarray, order: int, p: float = 0.0):
    """Per-point Taylor coefficients f^(k)(x0)/k! for the analytic catalog.

    Returns (d, ok) with d shaped (*x0.shape, order+1); ok flags points
    inside the function's domain.
    """
    N = order
    x0 = np.asarray(x0, dtype=np.float64)
    d = np.zeros(x0.shape + (N + 1,))
    ok = np.ones(x0.shape, dtype=bool)
    k = np.arange(N + 1)
    if fid == _ops.FN_EXP:
        d[:] = np.exp(x0)[..., None] / _factorials(N)
    elif fid == _ops.FN_LOG:
        ok = x0 > 0.0
        xs = np.where(ok, x0, 1.0)
        d[..., 0] = np.log(xs)
        for m in range(1, N + 1):
            d[..., m] = (-1.0) ** (m - 1) / (m * xs**m)
    elif fid in (_ops.FN_SQRT, _ops.FN_POW):
        pw = 0.5 if fid == _ops.FN_SQRT else p
        ok = x0 > 0.0
        xs = np.where(ok, x0, 1.0)
        coef = 1.0
        for m in range(N + 1):
            d[..., m] = coef * xs ** (pw - m)
            coef *= (pw - m) / (m + 1)
    elif fid == _ops.FN_SIN:
        d[:] = np.sin(x0[..., None] + k * (np.pi / 2)) / _factorials(N)
    elif fid == _ops.FN_COS:
        d[:] = np.cos(x0[..., None] + k * (np.pi / 2)) / _factorials(N)
    elif fid == _ops.FN_SINH:
        sh, ch = np.sinh(x0), np.cosh(x0)
        for m in range(N + 1):
            d[..., m] = (sh if m % 2 == 0 else ch) / math.factorial(m)
    elif fid == _ops.FN_COSH:
        sh, ch = np.sinh(x0), np.cosh(x0)
        for m in range(N + 1):
            d[..., m] = (ch if m % 2 == 0 else sh) / math.factorial(m)
    elif fid == _ops.FN_TANH:
        d[..., 0] = np.tanh(x0)
        for m in range(N):
            conv = sum(d[..., i] * d[..., m - i] for i in range(m + 1))
            d[..., m + 1] = ((1.0 if m == 0 else 0.0) - conv) / (m + 1)
    elif fid == _ops.FN_ATAN:
        d[..., 0] = np.arctan(x0)
        den = 1.0 + x0**2
        q_prev2 = np.zeros_like(x0)
        q_prev1 = 1.0 / den
        d[..., 1] = q_prev1 if N >= 1 else 0.0
        for m in range(1, N):
            q = -(2.0 * x0 * q_prev1 + q_prev2) / den
            d[..., m + 1] = q / (m + 1)
            q_prev2, q_prev1 = q_prev1, q
    else:  # pragma: no cover
        raise ValueError(f"unknown function id {fid}")
    return d, ok


def _factorials(N: int) -> np.ndarray:
    return np.array([math.factorial(m) for m in range(N + 1)], dtype=np.float64)


def compose(a: np.ndarray, d: np.ndarray, order: int) -> np.ndarray:
    """Horner composition of a univariate series d with jet a.

    d has shape broadcastable to a.shape[:-1] + (order+1,); entry k is the
    k-th Taylor coefficient of the outer function at a's constant term.
    """
    n = NCOEFF[order]
    a = a[..., :n]
    xbar = a.copy()
    xbar[..., 0] = 0.0
    r = np.zeros_like(a)
    r[..., 0] = d[..., order]
    for k in range(order - 1, -1, -1):
        r = jmul(r, xbar, order)
        r[..., 0] += d[..., k]
    return r


def mat_inv_det(g: np.ndarray, order: int):
    """Batched 4x4 jet-matrix inverse and determinant.

    Gauss-Jordan elimination over the jet ring with per-point partial
    pivoting on constant terms.  g: (P, 4, 4, C) -> (inv, det).
    """
    n = NCOEFF[order]
    P = g.shape[0]
    a = np.ascontiguousarray(g[..., :n]).copy()
    inv = np.zeros_like(a)
    inv[:, range(4), range(4), 0] = 1.0
    det = np.zeros((P, n))
    det[:, 0] = 1.0
    for col in range(4):
        piv = col + np.argmax(np.abs(a[:, col:, col, 0]), axis=1)
        # row swaps are rare for positive-definite inputs; per-point loop is fine
        for p in np.where(piv != col)[0]:
            r = piv[p]
            a[p, [col, r]] = a[p, [r, col]]
            inv[p, [col, r]] = inv[p, [r, col]]
            det[p] = -det[p]
        pivot = a[:, col, col].copy()
        det = jmul(det, pivot, order)
        pinv = jinv(pivot, order)
        a[:, col] = jmul(a[:, col], pinv[:, None, :], order)
        inv[:, col] = jmul(inv[:, col], pinv[:, None, :], order)
        for r in range(4):
            if r == col:
                continue
            f = a[:, r, col].copy()[:, None, :]
            a[:, r] = a[:, r] - jmul(f, a[:, col], order)
            inv[:, r] = inv[:, r] - jmul(f, inv[:, col], order)
    return inv, det


def tape_eval(instr, consts, point, params, nreg, order, outputs):
    """Run an expression tape, producing jets for the listed output registers.

    point: (P, 4) chart points.  Returns (out, err) with out shaped
    (P, len(outputs), C) and err an int32 (P,) array of _ops error codes
    (0 = ok; first failing instruction wins).
    """
    P = point.shape[0]
    n = NCOEFF[order]
    reg = np.zeros((int(nreg), P, n))
    err = np.zeros(P, dtype=np.int32)
    for q in range(instr.shape[0]):
        op, dst, a1, a2 = (int(v) for v in instr[q])
        if op == _ops.OP_CONST:
            reg[dst, :, :] = 0.0
            reg[dst, :, 0] = consts[a1]
        elif op == _ops.OP_PARAM:
            reg[dst, :, :] = 0.0
            reg[dst, :, 0] = params[a1]
        elif op == _ops.OP_VAR:
            reg[dst, :, :] = 0.0
            reg[dst, :, 0] = point[:, a1]
            if order >= 1:
                reg[dst, :, 1 + a1] = 1.0
        elif op == _ops.OP_ADD:
            reg[dst] = reg[a1] + reg[a2]
        elif op == _ops.OP_SUB:
            reg[dst] = reg[a1] - reg[a2]
        elif op == _ops.OP_MUL:
            reg[dst] = jmul(reg[a1], reg[a2], order)
        elif op == _ops.OP_DIV:
            bad = np.abs(reg[a2][:, 0]) < 1e-300
            if np.any(bad):
                err[bad & (err == 0)] = _ops.ERR_DIV_ZERO
                reg[a2][bad, 0] = 1.0
            reg[dst] = jdiv(reg[a1], reg[a2], order)
        elif op == _ops.OP_NEG:
            reg[dst] = -reg[a1]
        elif op == _ops.OP_POW_INT:
            reg[dst] = jpow_int(reg[a1], int(consts[a2]), order)
        elif op == _ops.OP_POW_REAL:
            d, ok = fn_taylor_coeffs(_ops.FN_POW, reg[a1][:, 0], order, p=consts[a2])
            err[(~ok) & (err == 0)] = _ops.ERR_DOMAIN_BASE + _ops.FN_POW
            reg[dst] = compose(reg[a1], d, order)
        elif op == _ops.OP_CALL:
            d, ok = fn_taylor_coeffs(a2, reg[a1][:, 0], order)
            err[(~ok) & (err == 0)] = _ops.ERR_DOMAIN_BASE + a2
            reg[dst] = compose(reg[a1], d, order)
        else:  # pragma: no cover
            raise ValueError(f"bad opcode {op}")
    out = np.stack([reg[o] for o in outputs], axis=1)
    return out, err
