"""Mollification by a compactly supported bump kernel.

Fields are given on a tensor Gauss-Legendre grid.  Along each axis the nodal
values define a polynomial interpolant, which is extended across the faces by
even reflection and convolved with the 1D bump

    K_delta(s) = C exp(-1 / (1 - (s/delta)^2)),   |s| < delta,

using a Gauss rule on the kernel support, split where the reflected
argument crosses a face.  The 2D kernel is the tensor
product of two 1D bumps, so the convolution factorises into one matrix per
axis.  Derivatives of the mollified field come from convolving with K'.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .basis import Quadrature

_MIN_KERNEL_POINTS = 96


def bump(s, delta):
    """Unnormalised bump and its derivative on ``|s| < delta``."""
    r = np.asarray(s, dtype=float) / delta
    inside = np.abs(r) < 1.0
    q = np.where(inside, 1.0 - r**2, 1.0)
    k = np.where(inside, np.exp(-1.0 / q), 0.0)
    dk = np.where(inside, k * (-2.0 * r / q**2) / delta, 0.0)
    return k, dk


def _barycentric_weights(x):
    # product formula in log-space; stable for a few hundred nodes
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    sign = np.prod(np.sign(diff), axis=1)
    logmag = np.sum(np.log(np.abs(diff)), axis=1)
    return sign * np.exp(-(logmag - logmag.max()))


def interpolation_matrix(nodes, points):
    """Rows of the polynomial interpolant through ``nodes`` evaluated at ``points``."""
    w = _barycentric_weights(nodes)
    d = points[:, None] - nodes[None, :]
    exact = d == 0.0
    d = np.where(exact, 1.0, d)
    T = w[None, :] / d
    T /= T.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    T[hit] = exact[hit].astype(float)
    return T


def _reflect(x, L):
    # single even reflection across 0 and L; delta <= L keeps us in range
    x = np.where(x < 0.0, -x, x)
    return np.where(x > L, 2.0 * L - x, x)


class Mollifier:
    """Discrete convolution with a unit-mass bump of half-width ``delta``.

    ``delta = 0`` is the identity.  Raises ``ValueError`` when the kernel
    support exceeds an edge of the domain (the single reflection would not
    cover the stencil).
    """

    def __init__(self, delta: float, quad: Quadrature):
        if delta < 0:
            raise ValueError("mollifier width must be non-negative")
        if delta > min(quad.domain.lengths):
            raise ValueError(
                f"mollifier stencil (half-width {delta}) larger than the domain "
                f"{quad.domain.lengths}"
            )
        self.delta = float(delta)
        self.quad = quad

    @property
    def is_identity(self) -> bool:
        return self.delta == 0.0

    def kernel_points(self, n_axis: int, L: float) -> int:
        return max(_MIN_KERNEL_POINTS, int(np.ceil(4.0 * n_axis * self.delta / L)) + 32)

    def kernel_rule(self, n_axis: int, L: float):
        """Nodes, normalised kernel weights and derivative weights on the support."""
        q = self.kernel_points(n_axis, L)
        s, w = np.polynomial.legendre.leggauss(q)
        s = self.delta * s
        w = self.delta * w
        k, dk = bump(s, self.delta)
        mass = np.dot(w, k)
        return s, w * k / mass, w * dk / mass

    @property
    def kernel_mass(self) -> float:
        if self.is_identity:
            return 1.0
        _, kw, _ = self.kernel_rule(self.quad.shape[0], self.quad.domain.lengths[0])
        return float(kw.sum())

    @cached_property
    def _axis_operators(self):
        ops = []
        for x, L in zip(self.quad.axes, self.quad.domain.lengths):
            n = len(x)
            if self.is_identity:
                ops.append((np.eye(n), None))
                continue
            q = self.kernel_points(n, L)
            g, gw = np.polynomial.legendre.leggauss(q)
            A = np.empty((n, n))
            D = np.empty((n, n))
            for m, xm in enumerate(x):
                # the reflected integrand has kinks where x - s hits a face,
                # so integrate piecewise between them
                cuts = [c for c in (xm - L, xm) if -self.delta < c < self.delta]
                edges = np.array([-self.delta, *sorted(cuts), self.delta])
                lo, hi = edges[:-1], edges[1:]
                s = (0.5 * (hi - lo)[:, None] * g + 0.5 * (hi + lo)[:, None]).ravel()
                w = (0.5 * (hi - lo)[:, None] * gw).ravel()
                k, dk = bump(s, self.delta)
                mass = np.dot(w, k)
                T = interpolation_matrix(x, _reflect(xm - s, L))
                A[m] = (w * k / mass) @ T
                D[m] = (w * dk / mass) @ T
            ops.append((A, D))
        return ops

    def apply(self, nodal) -> np.ndarray:
        """Mollify nodal values on the quadrature grid."""
        nodal = np.asarray(nodal, dtype=float)
        if nodal.shape[-1] != self.quad.size:
            raise ValueError("grid mismatch")
        if self.is_identity:
            return nodal.copy()
        return self._tensor_apply(nodal, [A for A, _ in self._axis_operators])

    def gradient(self, nodal) -> np.ndarray:
        """Gradient of the mollified field, shape ``(..., dim, N)``."""
        if self.is_identity:
            raise ValueError("the identity mollifier has no nodal gradient; differentiate analytically")
        nodal = np.asarray(nodal, dtype=float)
        ops = self._axis_operators
        out = []
        for a in range(len(ops)):
            mats = [D if b == a else A for b, (A, D) in enumerate(ops)]
            out.append(self._tensor_apply(nodal, mats))
        return np.stack(out, axis=-2)

    def _tensor_apply(self, nodal, mats):
        shape = self.quad.shape
        lead = nodal.shape[:-1]
        V = nodal.reshape(lead + shape)
        if len(shape) == 1:
            V = V @ mats[0].T
        else:
            V = np.einsum("mi,...ij,nj->...mn", mats[0], V, mats[1])
        return V.reshape(lead + (self.quad.size,))


def mollify(nodal, mollifier: Mollifier) -> np.ndarray:
    return mollifier.apply(nodal)
