"""Truncated multivariate Taylor arithmetic in four chart variables.

A :class:`Jet` holds the Taylor coefficients (graded-lex dense storage) of an
analytic scalar at a chart point, truncated at order N <= 5.  Arithmetic is
closed at fixed order; the coefficient of ``prod (x_i - p_i)^alpha_i`` sits at
the table position of the multi-index ``alpha``.  Mixed partial derivatives
are ``alpha! * coeff[alpha]``.

Curvature needs N >= 2, the Bach tensor N >= 4, and its divergence N = 5.
Order is a runtime value; all orders share one index table (truncation is a
prefix slice).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _ops
from ._tables import (
    DIFF_SCALE,
    DIFF_SHIFT,
    FACTORIALS,
    INDICES,
    MAX_ORDER,
    NCOEFF,
    index_of,
    ncoeff,
)
from .backend import kernels

MultiIndex = tuple  # 4 non-negative integers


class JetOrderError(ValueError):
    """Requested order outside [0, 5], mixed orders, or insufficient depth."""


class JetDomainError(ValueError):
    """Function composition outside its analytic domain."""


def _check_order(order: int) -> int:
    order = int(order)
    if not 0 <= order <= MAX_ORDER:
        raise JetOrderError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
    return order


@dataclass(frozen=True)
class Jet:
    """Taylor coefficients of a scalar at a point, truncated at ``order``."""

    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        _check_order(self.order)
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != (NCOEFF[self.order],):
            raise JetOrderError(
                f"order-{self.order} jet needs {NCOEFF[self.order]} coefficients, "
                f"got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, alpha) -> float:
        """Coefficient of prod (x_i - p_i)^alpha_i."""
        i = index_of(alpha)
        return float(self.coeffs[i]) if i < self.coeffs.shape[0] else 0.0

    def truncate(self, order: int) -> "Jet":
        order = _check_order(order)
        if order > self.order:
            raise JetOrderError(f"cannot extend order {self.order} to {order}")
        return Jet(order, self.coeffs[: NCOEFF[order]].copy())

    def as_dict(self) -> dict:
        """Nonzero coefficients keyed by multi-index tuple."""
        return {
            tuple(int(e) for e in INDICES[m]): float(self.coeffs[m])
            for m in range(self.coeffs.shape[0])
            if self.coeffs[m] != 0.0
        }

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order:
                raise JetOrderError(
                    f"order mismatch: {self.order} vs {other.order}"
                )
            return other
        return jet_constant(float(other), self.order)

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.order, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.order, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(self.order, -self.coeffs)

    def __mul__(self, other):
        other = self._coerce(other)
        return Jet(self.order, kernels.jmul(self.coeffs, other.coeffs, self.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.coeffs[0] == 0.0:
            raise ZeroDivisionError("division by a jet with zero constant term")
        return Jet(self.order, kernels.jdiv(self.coeffs, other.coeffs, self.order))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n):
        if isinstance(n, int) or (isinstance(n, float) and n.is_integer()):
            return Jet(self.order, kernels.jpow_int(self.coeffs, int(n), self.order))
        return jet_function(self, "pow", float(n))


def jet_constant(value: float, order: int) -> Jet:
    order = _check_order(order)
    c = np.zeros(NCOEFF[order])
    c[0] = value
    return Jet(order, c)


def jet_variable(i: int, value: float, order: int) -> Jet:
    """Jet of the coordinate function x_i at a point where x_i = value."""
    order = _check_order(order)
    if not 0 <= i <= 3:
        raise ValueError(f"axis index must be 0..3, got {i}")
    c = np.zeros(NCOEFF[order])
    c[0] = value
    if order >= 1:
        c[1 + i] = 1.0
    return Jet(order, c)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Named arithmetic entry point; the operators are the idiomatic route."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"op must be add|sub|mul|div, got {op!r}")


def jet_function(a: Jet, f: str, p: float | None = None) -> Jet:
    """Compose an analytic function with a jet (univariate Taylor chain).

    ``f`` is one of sqrt, exp, log, sin, cos, sinh, cosh, tanh, atan, pow;
    ``pow`` takes the real exponent ``p``.
    """
    if f == "pow":
        if p is None:
            raise ValueError("pow requires an exponent")
        fid, pexp = _ops.FN_POW, float(p)
    else:
        if f not in _ops.FN_NAMES:
            raise ValueError(f"unknown function {f!r}")
        fid, pexp = _ops.FN_NAMES[f], 0.0
    x0 = np.array([a.coeffs[0]])
    d, ok = kernels.fn_taylor_coeffs(fid, x0, a.order, p=pexp)
    if not bool(ok[0]):
        raise JetDomainError(
            f"{f}: constant term {a.coeffs[0]!r} outside the analytic domain"
        )
    out = kernels.compose(a.coeffs[None, :], d, a.order)
    return Jet(a.order, out[0])


def partial(a: Jet, alpha) -> float:
    """Mixed partial derivative d^alpha at the base point: alpha! * coeff."""
    alpha = tuple(int(x) for x in alpha)
    if len(alpha) != 4 or any(e < 0 for e in alpha):
        raise ValueError(f"bad multi-index {alpha!r}")
    if sum(alpha) > a.order:
        raise JetOrderError(
            f"degree {sum(alpha)} exceeds jet order {a.order}"
        )
    m = index_of(alpha)
    return float(FACTORIALS[m] * a.coeffs[m])


def derivative(a: Jet, axis: int) -> Jet:
    """The jet of the partial derivative d/dx_axis (order drops by one)."""
    if a.order == 0:
        raise JetOrderError("cannot differentiate an order-0 jet")
    n = NCOEFF[a.order - 1]
    c = a.coeffs[DIFF_SHIFT[axis, :n]] * DIFF_SCALE[axis, :n]
    return Jet(a.order - 1, c)


__all__ = [
    "Jet",
    "MultiIndex",
    "JetOrderError",
    "JetDomainError",
    "jet_constant",
    "jet_variable",
    "jet_arith",
    "jet_function",
    "partial",
    "derivative",
    "ncoeff",
]
