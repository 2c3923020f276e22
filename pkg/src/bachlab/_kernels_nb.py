"""Numba-jitted jet kernels: the default backend for the hot loops.

Same public surface as ``_kernels_np``; inner loops run over the precomputed
convolution triples inside ``@njit`` kernels.  Selected by ``bachlab.backend``
(env var ``BACHLAB_BACKEND``).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._tables import NCOEFF, mul_table
from ._kernels_np import fn_taylor_coeffs  # noqa: F401  (scalar setup; shared)
from . import _ops

NAME = "numba"

_F = math.factorial
_FACT = np.array([_F(m) for m in range(8)], dtype=np.float64)


@njit(cache=True)
def _mul2(a, b, it, jt, kt, n):
    M = a.shape[0]
    out = np.zeros((M, n))
    T = it.shape[0]
    for m in range(M):
        for t in range(T):
            out[m, kt[t]] += a[m, it[t]] * b[m, jt[t]]
    return out


@njit(cache=True)
def _mul_into(a, b, out, it, jt, kt):
    for m in range(out.shape[0]):
        out[m] = 0.0
    for t in range(it.shape[0]):
        out[kt[t]] += a[it[t]] * b[jt[t]]


@njit(cache=True)
def _contract_nb(a, b, pa, pb, po, it, jt, kt, nout, n):
    P = a.shape[0]
    out = np.zeros((P, nout, n))
    Q = pa.shape[0]
    T = it.shape[0]
    for p in range(P):
        for q in range(Q):
            ka, kb, ko = pa[q], pb[q], po[q]
            for t in range(T):
                out[p, ko, kt[t]] += a[p, ka, it[t]] * b[p, kb, jt[t]]
    return out


@njit(cache=True)
def _inv_row(b, out, xbar, scratch, it, jt, kt, order):
    b0 = b[0]
    n = out.shape[0]
    for m in range(n):
        xbar[m] = b[m]
        out[m] = 0.0
    xbar[0] = 0.0
    sgn = 1.0 if order % 2 == 0 else -1.0
    out[0] = sgn / b0 ** (order + 1)
    for k in range(order - 1, -1, -1):
        _mul_into(out, xbar, scratch, it, jt, kt)
        for m in range(n):
            out[m] = scratch[m]
        sgn = 1.0 if k % 2 == 0 else -1.0
        out[0] += sgn / b0 ** (k + 1)


@njit(cache=True)
def _inv2(b, it, jt, kt, order, n):
    M = b.shape[0]
    out = np.zeros((M, n))
    xbar = np.zeros(n)
    scratch = np.zeros(n)
    for m in range(M):
        _inv_row(b[m], out[m], xbar, scratch, it, jt, kt, order)
    return out


@njit(cache=True)
def _compose2(a, d, it, jt, kt, order, n):
    M = a.shape[0]
    out = np.zeros((M, n))
    xbar = np.zeros(n)
    scratch = np.zeros(n)
    for m in range(M):
        for c in range(n):
            xbar[c] = a[m, c]
        xbar[0] = 0.0
        out[m, 0] = d[m, order]
        for k in range(order - 1, -1, -1):
            _mul_into(out[m], xbar, scratch, it, jt, kt)
            for c in range(n):
                out[m, c] = scratch[c]
            out[m, 0] += d[m, k]
    return out


@njit(cache=True)
def _pow_int_row(a, nexp, out, xbar, scratch, scratch2, it, jt, kt, order):
    n = out.shape[0]
    if nexp == 0:
        for m in range(n):
            out[m] = 0.0
        out[0] = 1.0
        return
    neg = nexp < 0
    m_abs = -nexp if neg else nexp
    # base in xbar
    if neg:
        _inv_row(a, xbar, scratch, scratch2, it, jt, kt, order)
    else:
        for m in range(n):
            xbar[m] = a[m]
    first = True
    while m_abs > 0:
        if m_abs & 1:
            if first:
                for m in range(n):
                    out[m] = xbar[m]
                first = False
            else:
                _mul_into(out, xbar, scratch, it, jt, kt)
                for m in range(n):
                    out[m] = scratch[m]
        m_abs >>= 1
        if m_abs > 0:
            _mul_into(xbar, xbar, scratch, it, jt, kt)
            for m in range(n):
                xbar[m] = scratch[m]


@njit(cache=True)
def _fn_coeffs(fid, x0, order, p, d):
    """Scalar Taylor coefficients of the analytic catalog; returns ok flag."""
    N = order
    for m in range(N + 1):
        d[m] = 0.0
    if fid == 1:  # exp
        e = math.exp(x0)
        for m in range(N + 1):
            d[m] = e / _FACT[m]
    elif fid == 2:  # log
        if x0 <= 0.0:
            return False
        d[0] = math.log(x0)
        for m in range(1, N + 1):
            d[m] = (1.0 if (m - 1) % 2 == 0 else -1.0) / (m * x0**m)
    elif fid == 0 or fid == 9:  # sqrt / pow
        pw = 0.5 if fid == 0 else p
        if x0 <= 0.0:
            return False
        coef = 1.0
        for m in range(N + 1):
            d[m] = coef * x0 ** (pw - m)
            coef *= (pw - m) / (m + 1)
    elif fid == 3:  # sin
        for m in range(N + 1):
            d[m] = math.sin(x0 + m * math.pi / 2) / _FACT[m]
    elif fid == 4:  # cos
        for m in range(N + 1):
            d[m] = math.cos(x0 + m * math.pi / 2) / _FACT[m]
    elif fid == 5:  # sinh
        sh, ch = math.sinh(x0), math.cosh(x0)
        for m in range(N + 1):
            d[m] = (sh if m % 2 == 0 else ch) / _FACT[m]
    elif fid == 6:  # cosh
        sh, ch = math.sinh(x0), math.cosh(x0)
        for m in range(N + 1):
            d[m] = (ch if m % 2 == 0 else sh) / _FACT[m]
    elif fid == 7:  # tanh
        d[0] = math.tanh(x0)
        for m in range(N):
            conv = 0.0
            for i in range(m + 1):
                conv += d[i] * d[m - i]
            d[m + 1] = ((1.0 if m == 0 else 0.0) - conv) / (m + 1)
    elif fid == 8:  # atan
        d[0] = math.atan(x0)
        den = 1.0 + x0 * x0
        qp2 = 0.0
        qp1 = 1.0 / den
        if N >= 1:
            d[1] = qp1
        for m in range(1, N):
            q = -(2.0 * x0 * qp1 + qp2) / den
            d[m + 1] = q / (m + 1)
            qp2 = qp1
            qp1 = q
    return True


@njit(cache=True)
def _mat_inv_det_nb(g, it, jt, kt, order, n):
    P = g.shape[0]
    a = np.zeros((P, 4, 4, n))
    inv = np.zeros((P, 4, 4, n))
    det = np.zeros((P, n))
    xbar = np.zeros(n)
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    pinv = np.zeros(n)
    for p in range(P):
        for i in range(4):
            inv[p, i, i, 0] = 1.0
            for j in range(4):
                for c in range(n):
                    a[p, i, j, c] = g[p, i, j, c]
        det[p, 0] = 1.0
        for col in range(4):
            piv = col
            best = abs(a[p, col, col, 0])
            for r in range(col + 1, 4):
                v = abs(a[p, r, col, 0])
                if v > best:
                    best = v
                    piv = r
            if piv != col:
                for j in range(4):
                    for c in range(n):
                        tmp = a[p, col, j, c]
                        a[p, col, j, c] = a[p, piv, j, c]
                        a[p, piv, j, c] = tmp
                        tmp = inv[p, col, j, c]
                        inv[p, col, j, c] = inv[p, piv, j, c]
                        inv[p, piv, j, c] = tmp
                for c in range(n):
                    det[p, c] = -det[p, c]
            _mul_into(det[p], a[p, col, col], s1, it, jt, kt)
            for c in range(n):
                det[p, c] = s1[c]
            _inv_row(a[p, col, col], pinv, xbar, s1, it, jt, kt, order)
            for j in range(4):
                _mul_into(a[p, col, j], pinv, s1, it, jt, kt)
                _mul_into(inv[p, col, j], pinv, s2, it, jt, kt)
                for c in range(n):
                    a[p, col, j, c] = s1[c]
                    inv[p, col, j, c] = s2[c]
            for r in range(4):
                if r == col:
                    continue
                for c in range(n):
                    xbar[c] = a[p, r, col, c]
                for j in range(4):
                    _mul_into(xbar, a[p, col, j], s1, it, jt, kt)
                    _mul_into(xbar, inv[p, col, j], s2, it, jt, kt)
                    for c in range(n):
                        a[p, r, j, c] -= s1[c]
                        inv[p, r, j, c] -= s2[c]
    return inv, det


@njit(cache=True)
def _tape_nb(instr, consts, point, params, nreg, order, outputs, it, jt, kt, n):
    P = point.shape[0]
    reg = np.zeros((nreg, P, n))
    err = np.zeros(P, dtype=np.int32)
    scratch = np.zeros(n)
    s2 = np.zeros(n)
    s3 = np.zeros(n)
    s4 = np.zeros(n)
    d = np.zeros(order + 1)
    Q = instr.shape[0]
    for q in range(Q):
        op = instr[q, 0]
        dst = instr[q, 1]
        a1 = instr[q, 2]
        a2 = instr[q, 3]
        if op == 0:  # CONST
            for p in range(P):
                for c in range(n):
                    reg[dst, p, c] = 0.0
                reg[dst, p, 0] = consts[a1]
        elif op == 1:  # VAR
            for p in range(P):
                for c in range(n):
                    reg[dst, p, c] = 0.0
                reg[dst, p, 0] = point[p, a1]
                if order >= 1:
                    reg[dst, p, 1 + a1] = 1.0
        elif op == 2:  # PARAM
            for p in range(P):
                for c in range(n):
                    reg[dst, p, c] = 0.0
                reg[dst, p, 0] = params[a1]
        elif op == 3:  # ADD
            for p in range(P):
                for c in range(n):
                    reg[dst, p, c] = reg[a1, p, c] + reg[a2, p, c]
        elif op == 4:  # SUB
            for p in range(P):
                for c in range(n):
                    reg[dst, p, c] = reg[a1, p, c] - reg[a2, p, c]
        elif op == 5:  # MUL
            for p in range(P):
                _mul_into(reg[a1, p], reg[a2, p], scratch, it, jt, kt)
                for c in range(n):
                    reg[dst, p, c] = scratch[c]
        elif op == 6:  # DIV
            for p in range(P):
                if abs(reg[a2, p, 0]) < 1e-300:
                    if err[p] == 0:
                        err[p] = 1
                    reg[a2, p, 0] = 1.0
                _inv_row(reg[a2, p], s3, scratch, s2, it, jt, kt, order)
                _mul_into(reg[a1, p], s3, scratch, it, jt, kt)
                for c in range(n):
                    reg[dst, p, c] = scratch[c]
        elif op == 7:  # NEG
            for p in range(P):
                for c in range(n):
                    reg[dst, p, c] = -reg[a1, p, c]
        elif op == 8:  # POW_INT
            nexp = int(consts[a2])
            for p in range(P):
                _pow_int_row(reg[a1, p], nexp, s3, scratch, s2, s4, it, jt, kt, order)
                for c in range(n):
                    reg[dst, p, c] = s3[c]
        elif op == 9 or op == 10:  # POW_REAL / CALL
            fid = 9 if op == 9 else a2
            pexp = consts[a2] if op == 9 else 0.0
            for p in range(P):
                ok = _fn_coeffs(fid, reg[a1, p, 0], order, pexp, d)
                if not ok and err[p] == 0:
                    err[p] = 100 + fid
                if not ok:
                    for c in range(order + 1):
                        d[c] = 0.0
                # Horner
                for c in range(n):
                    scratch[c] = reg[a1, p, c]
                scratch[0] = 0.0
                for c in range(n):
                    s3[c] = 0.0
                s3[0] = d[order]
                for k in range(order - 1, -1, -1):
                    _mul_into(s3, scratch, s2, it, jt, kt)
                    for c in range(n):
                        s3[c] = s2[c]
                    s3[0] += d[k]
                for c in range(n):
                    reg[dst, p, c] = s3[c]
    O = outputs.shape[0]
    out = np.zeros((P, O, n))
    for o in range(O):
        for p in range(P):
            for c in range(n):
                out[p, o, c] = reg[outputs[o], p, c]
    return out, err


# ---------------------------------------------------------------------------
# wrappers matching the _kernels_np surface


def _flat2(a, n):
    a = np.ascontiguousarray(a[..., :n], dtype=np.float64)
    return a.reshape(-1, n), a.shape[:-1]


def jmul(a, b, order):
    n = NCOEFF[order]
    a, b = np.broadcast_arrays(a[..., :n], b[..., :n])
    it, jt, kt, _ = mul_table(order)
    a2, shape = _flat2(a, n)
    b2, _ = _flat2(b, n)
    return _mul2(a2, b2, it, jt, kt, n).reshape(*shape, n)


def contract(a, b, pa, pb, po, starts, uo, nout, order):
    n = NCOEFF[order]
    it, jt, kt, _ = mul_table(order)
    a = np.ascontiguousarray(a[..., :n], dtype=np.float64)
    b = np.ascontiguousarray(b[..., :n], dtype=np.float64)
    return _contract_nb(a, b, pa, pb, po, it, jt, kt, nout, n)


def jinv(b, order):
    n = NCOEFF[order]
    it, jt, kt, _ = mul_table(order)
    b2, shape = _flat2(b, n)
    return _inv2(b2, it, jt, kt, order, n).reshape(*shape, n)


def jdiv(a, b, order):
    return jmul(a, jinv(b, order), order)


def jpow_int(a, nexp, order):
    n = NCOEFF[order]
    if nexp == 0:
        out = np.zeros(a.shape[:-1] + (n,))
        out[..., 0] = 1.0
        return out
    base = a if nexp > 0 else jinv(a, order)
    m = abs(nexp)
    out = None
    while m:
        if m & 1:
            out = base if out is None else jmul(out, base, order)
        m >>= 1
        if m:
            base = jmul(base, base, order)
    return out


def compose(a, d, order):
    n = NCOEFF[order]
    it, jt, kt, _ = mul_table(order)
    a2, shape = _flat2(a, n)
    d2 = np.ascontiguousarray(
        np.broadcast_to(d, shape + (order + 1,)).reshape(-1, order + 1)
    )
    return _compose2(a2, d2, it, jt, kt, order, n).reshape(*shape, n)


def mat_inv_det(g, order):
    n = NCOEFF[order]
    it, jt, kt, _ = mul_table(order)
    g = np.ascontiguousarray(g[..., :n], dtype=np.float64)
    return _mat_inv_det_nb(g, it, jt, kt, order, n)


def tape_eval(instr, consts, point, params, nreg, order, outputs):
    n = NCOEFF[order]
    it, jt, kt, _ = mul_table(order)
    return _tape_nb(
        np.ascontiguousarray(instr, dtype=np.int32),
        np.ascontiguousarray(consts, dtype=np.float64),
        np.ascontiguousarray(point, dtype=np.float64),
        np.ascontiguousarray(params, dtype=np.float64),
        int(nreg),
        int(order),
        np.ascontiguousarray(outputs, dtype=np.int32),
        it,
        jt,
        kt,
        n,
    )
