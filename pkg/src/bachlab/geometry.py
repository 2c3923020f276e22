"""Point-local metric algebra over jets.

A :class:`MetricJet` is a batch of chart points carrying the metric
components, inverse, and volume density as jets.  The Hodge star and the
self-dual/anti-self-dual split act on 2-forms; the norm helpers fix the
inner-product conventions used across the package:

* vectors / symmetric 2-tensors: full contraction, |T|^2 = T_ab T^ab;
* 2-forms: Lambda^2 inner product, |phi|^2 = (1/2) phi_ab phi^ab   (so the
  Kahler form has |omega|^2 = 2);
* curvature operators on 2-forms (W, W+-): |W|^2 = (1/4) W_abcd W^abcd.

The operator convention is the one under which a Kahler surface satisfies
|W+|^2 = s^2/24 (verified by test, not assumed); the plain full contraction
would instead give s^2/6 and is rejected by the same test.

Orientation is the chart's coordinate orientation; Kahler charts in the
catalog order their coordinates so the Kahler form is self-dual.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _jetops as jo
from ._tables import FACTORIALS, NCOEFF
from .exprlang import MetricDefinition


class MetricPointError(ValueError):
    """Point outside the chart domain or metric not positive definite."""


# sign table of the permutation symbol
_EPS_SIGN = np.zeros((4, 4, 4, 4))
for _p in itertools.permutations(range(4)):
    _s = 1.0
    _lst = list(_p)
    for _i in range(4):
        for _j in range(_i + 1, 4):
            if _lst[_i] > _lst[_j]:
                _s = -_s
    _EPS_SIGN[_p] = _s


@dataclass
class MetricJet:
    """Batched jet-valued metric data at chart points.

    g, ginv: (P, 4, 4, C); sqrt_det: (P, C); point: (P, 4).  All downstream
    curvature operations preserve the leading batch axis.
    """

    point: np.ndarray
    order: int
    g: np.ndarray
    ginv: np.ndarray
    sqrt_det: np.ndarray
    definition: MetricDefinition | None = None
    j: np.ndarray | None = None  # complex-structure jets when the chart has J

    @property
    def npoints(self) -> int:
        return self.point.shape[0]

    @property
    def g0(self) -> np.ndarray:
        return self.g[..., 0]

    @property
    def ginv0(self) -> np.ndarray:
        return self.ginv[..., 0]

    def d4g_scale(self) -> np.ndarray:
        """max |d^4 g| per point (0 when the order carries no 4th derivatives)."""
        if self.order < 4:
            return np.zeros(self.npoints)
        lo, hi = NCOEFF[3], NCOEFF[4]
        block = self.g[..., lo:hi] * FACTORIALS[lo:hi]
        return np.abs(block).reshape(self.npoints, -1).max(axis=1)


def metric_jet_at(defn: MetricDefinition, point, order: int) -> MetricJet:
    """Evaluate a metric definition to jets at one point or a batch.

    Checks the domain ball and positive definiteness (the error reports the
    eigenvalue signs), inverts the jet-valued matrix, and forms sqrt(det g).
    """
    pts = np.atleast_2d(np.asarray(point, dtype=np.float64))
    center = np.asarray(defn.domain.center)
    r = np.linalg.norm(pts - center, axis=1)
    if np.any(r > defn.domain.radius * (1 + 1e-12)):
        bad = pts[int(np.argmax(r))]
        raise MetricPointError(
            f"point {bad} outside domain ball of '{defn.name}' "
            f"(radius {defn.domain.radius})"
        )
    g, j = defn.component_jets(pts, order)
    mj = metric_jet_from_components(pts, g, order, definition=defn)
    mj.j = j
    return mj


def metric_jet_from_components(point, g_jets, order: int,
                               definition=None) -> MetricJet:
    """Build a MetricJet from raw component jets (e.g. conformal h = u^2 g)."""
    pts = np.atleast_2d(np.asarray(point, dtype=np.float64))
    g0 = g_jets[..., 0]
    ev = np.linalg.eigvalsh(g0)
    if np.any(ev[:, 0] <= 0):
        p = int(np.argmin(ev[:, 0]))
        signs = ["+" if v > 0 else "-" if v < 0 else "0" for v in ev[p]]
        raise MetricPointError(
            f"metric not positive definite at {pts[p]}: eigenvalue signs "
            f"({', '.join(signs)})"
        )
    ginv, det = jo.kernels.mat_inv_det(g_jets, order)
    sqrt_det = jo.kernels.compose(
        det, jo.kernels.fn_taylor_coeffs(0, det[..., 0], order)[0], order
    )
    return MetricJet(pts, order, np.asarray(g_jets), ginv, sqrt_det, definition)


# ---------------------------------------------------------------------------
# Hodge star and the Lambda^2 split (value level)


def epsilon_lower(m: MetricJet) -> np.ndarray:
    """Volume tensor eps_abcd = sqrt(det g) [abcd] at the points (values)."""
    return _EPS_SIGN[None] * m.sqrt_det[:, 0, None, None, None, None]


def epsilon_lower_jets(m: MetricJet, order: int) -> np.ndarray:
    n = NCOEFF[order]
    return _EPS_SIGN[None, ..., None] * m.sqrt_det[:, None, None, None, None, :n]


def hodge_star2(m: MetricJet, phi: np.ndarray) -> np.ndarray:
    """(star phi)_ab = 1/2 eps_abcd phi^cd on 2-form values (..., 4, 4)."""
    gi = m.ginv0
    phi_up = np.einsum("pce,pdf,pef->pcd", gi, gi, phi)
    return 0.5 * np.einsum("pabcd,pcd->pab", epsilon_lower(m), phi_up)


def sd_asd_project(m: MetricJet, phi: np.ndarray):
    """Split a 2-form into (self-dual, anti-self-dual) parts."""
    star = hodge_star2(m, phi)
    return 0.5 * (phi + star), 0.5 * (phi - star)


def two_form_inner(m: MetricJet, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Lambda^2 inner product <phi, psi> = 1/2 phi_ab psi^ab."""
    gi = m.ginv0
    return 0.5 * np.einsum("pab,pac,pbd,pcd->p", phi, gi, gi, psi)


# ---------------------------------------------------------------------------
# value-level norms (conventions in the module docstring)


def norm2_tensor(T: np.ndarray, ginv0: np.ndarray) -> np.ndarray:
    """Full contraction |T|^2 with all indices raised by g (per point)."""
    k = T.ndim - 2
    up = T
    for slot in range(k):
        up = np.moveaxis(
            np.einsum("p...a,pab->p...b", np.moveaxis(up, slot + 1, -1), ginv0),
            -1,
            slot + 1,
        )
    axes = tuple(range(1, k + 1))
    return np.einsum(T, [0, *axes], up, [0, *axes], [0])


def norm2_2form(phi: np.ndarray, ginv0: np.ndarray) -> np.ndarray:
    return 0.5 * norm2_tensor(phi, ginv0)


def norm2_curv_op(W: np.ndarray, ginv0: np.ndarray) -> np.ndarray:
    """|W|^2 for 4-tensors acting on 2-forms: (1/4) W_abcd W^abcd."""
    return 0.25 * norm2_tensor(W, ginv0)
