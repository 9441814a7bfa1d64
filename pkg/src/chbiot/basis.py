"""Eigenfunction bases on rectangles.

Two orthonormal families are built in closed form:

* the Z-basis, eigenfunctions of the Neumann Laplacian (tensor cosines), and
* the Y-basis, eigenfunctions of the mixed problem with ``y = 0`` on the face
  ``x = 0`` and zero normal derivative elsewhere (a quarter-wave sine in ``x``
  times cosines in the remaining directions).

Inner products are realised by tensor Gauss-Legendre quadrature.  All
derivatives are analytic per mode, so the spectral Laplacian of a span member
is exactly ``-lambda_i`` times its coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Domain",
    "Quadrature",
    "Basis",
    "SpectralField",
    "build_bases",
    "default_grid",
    "project_z",
    "project_y",
    "inner",
]


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[0, L_x] (x [0, L_y])``; the Dirichlet face is ``x = 0``."""

    lengths: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        lengths = tuple(float(L) for L in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) not in (1, 2):
            raise ValueError("only 1D and 2D domains are supported")
        if any(not L > 0 for L in lengths):
            raise ValueError(f"edge lengths must be positive, got {lengths}")

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def dirichlet_measure(self) -> float:
        # H^{n-1} of the face x = 0
        return 1.0 if self.dim == 1 else self.lengths[1]


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Tensor Gauss-Legendre rule.

    ``nodes`` has shape ``(N, dim)`` in C order over ``shape``.
    """

    domain: Domain
    shape: tuple[int, ...]
    axes: tuple[np.ndarray, ...]
    axis_weights: tuple[np.ndarray, ...]

    @classmethod
    def gauss(cls, domain: Domain, shape) -> "Quadrature":
        shape = tuple(int(s) for s in np.broadcast_to(np.asarray(shape), (domain.dim,)))
        axes, weights = [], []
        for L, n in zip(domain.lengths, shape):
            x, w = np.polynomial.legendre.leggauss(n)
            axes.append(0.5 * L * (x + 1.0))
            weights.append(0.5 * L * w)
        return cls(domain, shape, tuple(axes), tuple(weights))

    @cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.axis_weights[0]
        for wa in self.axis_weights[1:]:
            w = np.multiply.outer(w, wa)
        return w.ravel()

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def boundary_rules(self):
        """Quadrature on the Neumann part of the boundary.

        Returns a list of ``(points, weights)``; in 1D the single face
        ``x = L_x`` carries unit weight.
        """
        L = self.domain.lengths
        if self.domain.dim == 1:
            return [(np.array([[L[0]]]), np.array([1.0]))]
        x, wx = self.axes[0], self.axis_weights[0]
        y, wy = self.axes[1], self.axis_weights[1]
        return [
            (np.column_stack([np.full_like(y, L[0]), y]), wy),
            (np.column_stack([x, np.zeros_like(x)]), wx),
            (np.column_stack([x, np.full_like(x, L[1])]), wx),
        ]


# --- 1D factors ---------------------------------------------------------------
# "cos": cos(i pi x / L), Neumann at both ends
# "qsin": sin((i + 1/2) pi x / L), Dirichlet at 0, Neumann at L


def _freq(kind, idx, L):
    shift = 0.5 if kind == "qsin" else 0.0
    return (idx + shift) * np.pi / L


def _norm(kind, idx, L):
    if kind == "cos":
        return np.where(idx == 0, np.sqrt(1.0 / L), np.sqrt(2.0 / L))
    return np.full(np.shape(idx), np.sqrt(2.0 / L))


def _factor(kind, idx, L, x, order):
    """``d^order/dx^order`` of the normalised factor; shape ``(len(idx), len(x))``."""
    w = _freq(kind, idx, L)[:, None]
    c = _norm(kind, idx, L)[:, None]
    arg = w * x[None, :]
    if kind == "cos":
        table = (np.cos(arg), -w * np.sin(arg), -(w**2) * np.cos(arg))
    else:
        table = (np.sin(arg), w * np.cos(arg), -(w**2) * np.sin(arg))
    return c * table[order]


class Basis:
    """Orthonormal eigenbasis with its quadrature and cached nodal tables.

    Attributes
    ----------
    kind : {"z", "y"}
    modes : (k, dim) int array of per-axis mode indices
    eigenvalues : (k,) ascending
    quad : Quadrature
    values : (k, N) basis values at the quadrature nodes
    grads : (k, dim, N) gradients at the quadrature nodes
    """

    def __init__(self, kind: str, domain: Domain, modes, quad: Quadrature):
        self.kind = kind
        self.domain = domain
        self.modes = np.asarray(modes, dtype=int).reshape(-1, domain.dim)
        self.quad = quad
        self.axis_kinds = tuple(
            "qsin" if (kind == "y" and a == 0) else "cos" for a in range(domain.dim)
        )
        lam = np.zeros(len(self.modes))
        for a, (knd, L) in enumerate(zip(self.axis_kinds, domain.lengths)):
            lam += _freq(knd, self.modes[:, a], L) ** 2
        self.eigenvalues = lam
        self.values = self.evaluate(quad.nodes)
        self.grads = self.evaluate_grad(quad.nodes)

    def __repr__(self):
        return f"Basis(kind={self.kind!r}, k={self.k}, grid={self.quad.shape})"

    @property
    def k(self) -> int:
        return len(self.modes)

    def _factors(self, points, orders):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = None
        for a, (knd, L) in enumerate(zip(self.axis_kinds, self.domain.lengths)):
            f = _factor(knd, self.modes[:, a], L, points[:, a], orders[a])
            out = f if out is None else out * f
        return out

    def evaluate(self, points) -> np.ndarray:
        """Basis values at arbitrary points, shape ``(k, P)``."""
        return self._factors(points, (0,) * self.domain.dim)

    def evaluate_grad(self, points) -> np.ndarray:
        """Gradients at arbitrary points, shape ``(k, dim, P)``."""
        dim = self.domain.dim
        return np.stack(
            [self._factors(points, tuple(int(a == b) for b in range(dim))) for a in range(dim)],
            axis=1,
        )

    def evaluate_hessian(self, points) -> np.ndarray:
        """Second derivatives at arbitrary points, shape ``(k, dim, dim, P)``."""
        dim = self.domain.dim
        rows = []
        for a in range(dim):
            cols = []
            for b in range(dim):
                orders = [0] * dim
                orders[a] += 1
                orders[b] += 1
                cols.append(self._factors(points, tuple(orders)))
            rows.append(np.stack(cols, axis=1))
        return np.stack(rows, axis=1)

    def evaluate_laplacian(self, points) -> np.ndarray:
        H = self.evaluate_hessian(points)
        return np.einsum("kaap->kp", H)

    # -- transforms --------------------------------------------------------
    def project(self, nodal) -> "SpectralField":
        """L2 projection of nodal values onto the span."""
        nodal = np.asarray(nodal, dtype=float)
        if nodal.shape != (self.quad.size,):
            raise ValueError(
                f"expected values on the {self.quad.shape} quadrature grid, got shape {nodal.shape}"
            )
        return SpectralField(self, self.values @ (self.quad.weights * nodal))

    def to_nodes(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs) @ self.values

    def grad_to_nodes(self, coeffs) -> np.ndarray:
        """Gradient of a span member at the nodes, shape ``(dim, N)``."""
        return np.einsum("k,kdn->dn", np.asarray(coeffs), self.grads)

    def gram(self) -> np.ndarray:
        return (self.values * self.quad.weights) @ self.values.T

    def field(self, coeffs) -> "SpectralField":
        return SpectralField(self, np.asarray(coeffs, dtype=float))

    def unit(self, i: int) -> "SpectralField":
        c = np.zeros(self.k)
        c[i] = 1.0
        return SpectralField(self, c)


@dataclass(frozen=True, eq=False)
class SpectralField:
    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.k,):
            raise ValueError(f"coefficient vector must have length {self.basis.k}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    @cached_property
    def nodal(self) -> np.ndarray:
        return self.basis.to_nodes(self.coeffs)

    def grad_at_nodes(self) -> np.ndarray:
        return self.basis.grad_to_nodes(self.coeffs)

    def laplacian_coeffs(self) -> "SpectralField":
        return SpectralField(self.basis, -self.basis.eigenvalues * self.coeffs)

    def at(self, points) -> np.ndarray:
        return self.coeffs @ self.basis.evaluate(points)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _select_modes(kind, domain, k):
    dim = domain.dim
    if dim == 1:
        return np.arange(k)[:, None]
    kinds = ("qsin" if kind == "y" else "cos", "cos")
    cand = np.array([(i, j) for i in range(k) for j in range(k)])
    lam = sum(_freq(kn, cand[:, a], L) ** 2 for a, (kn, L) in enumerate(zip(kinds, domain.lengths)))
    # ties broken lexicographically on the mode index
    key = np.round(lam / np.pi**2, 9)
    order = np.lexsort((cand[:, 1], cand[:, 0], key))
    return cand[order[:k]]


def default_grid(domain: Domain, k: int) -> tuple[int, ...]:
    """Default points per direction: ``3 (m + 1) + 16`` with ``m`` the top mode index."""
    top = np.maximum(_select_modes("z", domain, k).max(axis=0), _select_modes("y", domain, k).max(axis=0))
    return tuple(int(3 * (m + 1) + 16) for m in top)


def build_bases(domain: Domain, k: int, grid=None) -> tuple[Basis, Basis]:
    """Build the Z- and Y-bases of size ``k`` on a shared quadrature grid.

    Parameters
    ----------
    domain : Domain
    k : int
        Number of modes in each basis.
    grid : int or tuple of int, optional
        Gauss points per direction.  Must be at least twice the number of
        distinct 1D modes used along that direction.
    """
    if k < 1:
        raise ValueError("basis size must be positive")
    zm = _select_modes("z", domain, k)
    ym = _select_modes("y", domain, k)
    if grid is None:
        grid = default_grid(domain, k)
    shape = tuple(int(s) for s in np.broadcast_to(np.asarray(grid), (domain.dim,)))
    need = 2 * (np.maximum(zm.max(axis=0), ym.max(axis=0)) + 1)
    for a, (have, req) in enumerate(zip(shape, need)):
        if have < req:
            raise ValueError(
                f"grid under-resolved along axis {a}: {have} points < {req} required for k={k}"
            )
    quad = Quadrature.gauss(domain, shape)
    return Basis("z", domain, zm, quad), Basis("y", domain, ym, quad)


def project_z(basis_z: Basis, nodal) -> SpectralField:
    if basis_z.kind != "z":
        raise ValueError("project_z needs the Z-basis")
    return basis_z.project(nodal)


def project_y(basis_y: Basis, nodal) -> SpectralField:
    if basis_y.kind != "y":
        raise ValueError("project_y needs the Y-basis")
    return basis_y.project(nodal)


def inner(f, g, quad: Quadrature | None = None) -> float:
    """Quadrature inner product of two spectral fields or nodal arrays."""
    if isinstance(f, SpectralField) and isinstance(g, SpectralField):
        if f.basis.quad is not g.basis.quad:
            raise ValueError("fields live on different grids")
        quad = f.basis.quad
    fv = f.nodal if isinstance(f, SpectralField) else np.asarray(f)
    gv = g.nodal if isinstance(g, SpectralField) else np.asarray(g)
    if quad is None:
        quad = f.basis.quad if isinstance(f, SpectralField) else g.basis.quad
    if fv.shape != gv.shape:
        raise ValueError("grid mismatch")
    return quad.integrate(fv * gv)
