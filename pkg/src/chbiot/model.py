"""The discrete problem: bases, material, regularisation and cached tables."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import Basis, Domain, build_bases
from .material import MaterialModel
from .mollifier import Mollifier


@dataclass(eq=False)
class Model:
    """Everything the flow, elasticity and energy routines need besides the state.

    Parameters
    ----------
    Z, Y : Basis
        Neumann and mixed eigenbases on a shared quadrature grid.
    material : MaterialModel
    eps : float
        Interface width parameter.
    rho : float
        Regularisation weight of the bi-Laplacian (``sqrt(rho)``) and of the
        fluid-content gradient (``rho``).
    delta : float
        Mollifier half-width applied to the divergence in the pressure coupling.
    stabilization : float or None
        Extra implicit diagonal shift used by the IMEX scheme on the phase
        equation.  ``None`` picks ``2 C2 / eps``.
    """

    Z: Basis
    Y: Basis
    material: MaterialModel
    eps: float = 0.1
    rho: float = 0.0
    delta: float = 0.0
    stabilization: float | None = None
    mollifier: Mollifier = field(init=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if self.Z.quad is not self.Y.quad:
            raise ValueError("bases must share one quadrature grid")
        if self.material.dim != self.domain.dim:
            raise ValueError("material dimension does not match the domain")
        self.mollifier = Mollifier(self.delta, self.quad)
        if self.stabilization is None:
            self.stabilization = 2.0 * self.material.potential.C2 / self.eps

    @classmethod
    def build(cls, domain: Domain, k: int, material: MaterialModel, grid=None, **kw) -> "Model":
        Z, Y = build_bases(domain, k, grid)
        return cls(Z, Y, material, **kw)

    @property
    def domain(self) -> Domain:
        return self.Z.domain

    @property
    def quad(self):
        return self.Z.quad

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def k(self) -> int:
        return self.Z.k

    @property
    def w(self) -> np.ndarray:
        return self.quad.weights

    def with_params(self, **kw) -> "Model":
        """Copy sharing the bases; used by parameter sweeps."""
        args = dict(Z=self.Z, Y=self.Y, material=self.material, eps=self.eps, rho=self.rho,
                    delta=self.delta, stabilization=self.stabilization)
        args.update(kw)
        return Model(**args)

    # -- vector Y-modes eta_{c,i} = y_i e_c, flattened as c * k + i --------------
    @cached_property
    def div_table(self) -> np.ndarray:
        """``div eta`` at the nodes for every vector mode, shape ``(n k, N)``."""
        G = self.Y.grads
        return np.concatenate([G[:, c, :] for c in range(self.dim)], axis=0)

    @cached_property
    def strain_table(self) -> np.ndarray:
        """Symmetric gradients of the vector modes, shape ``(n k, N, n, n)``."""
        n, k = self.dim, self.k
        G = self.Y.grads
        S = np.zeros((n * k, self.quad.size, n, n))
        for c in range(n):
            for a in range(n):
                S[c * k:(c + 1) * k, :, a, c] += 0.5 * G[:, a, :]
                S[c * k:(c + 1) * k, :, c, a] += 0.5 * G[:, a, :]
        return S

    @cached_property
    def grad_div_table(self) -> np.ndarray:
        """``grad(div eta)`` at the nodes, shape ``(n k, dim, N)``."""
        H = self.Y.evaluate_hessian(self.quad.nodes)
        return np.concatenate([H[:, c, :, :] for c in range(self.dim)], axis=0)

    @cached_property
    def mollified_div(self) -> np.ndarray:
        return self.mollifier.apply(self.div_table)

    @cached_property
    def mollified_grad_div(self) -> np.ndarray:
        if self.mollifier.is_identity:
            return self.grad_div_table
        return self.mollifier.gradient(self.div_table)

    @cached_property
    def boundary_tables(self):
        """Y-basis values on the Neumann faces with their face weights."""
        return [(self.Y.evaluate(pts), w) for pts, w in self.quad.boundary_rules()]

    # -- nodal reconstructions ---------------------------------------------------
    def strain(self, u) -> np.ndarray:
        """``E(u)`` at the nodes for displacement coefficients ``u`` of shape ``(n, k)``."""
        return np.einsum("m,mnab->nab", np.ravel(u), self.strain_table)

    def divergence(self, u) -> np.ndarray:
        return np.ravel(u) @ self.div_table
