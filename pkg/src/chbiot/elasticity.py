"""Visco-elastic displacement solve over the vector Y-basis.

The displacement equation is tested against every vector mode
``eta_{c,i} = y_i e_c``.  With coefficients frozen at the current phase
field it reads ``B u' + C u = f*`` where ``B`` and ``C`` are the Gram
matrices of the viscous and elastic tensors in the symmetric-gradient inner
product.  Time stepping is implicit Euler with a Cholesky solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import Basis, SpectralField
from .errors import ContractViolation
from .material import IsotropicTensor
from .model import Model


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Displacement coefficients ``(n, k)`` in the Y-basis, one row per component."""

    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[1] != self.basis.k:
            raise ValueError("displacement coefficients must have shape (n, k)")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, basis: Basis) -> "DisplacementField":
        return cls(basis, np.zeros((basis.domain.dim, basis.k)))

    @property
    def components(self) -> list[SpectralField]:
        return [SpectralField(self.basis, row) for row in self.coeffs]

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.ravel()


@dataclass(frozen=True, eq=False)
class OperatorPair:
    """Viscous operator ``B`` and elastic operator ``C`` at one phase field."""

    B: np.ndarray
    C: np.ndarray
    phi_tag: bytes = b""

    def certify(self) -> dict:
        """Symmetry error, extreme eigenvalues and inverse norms of both operators."""
        out = {}
        for name, A in (("B", self.B), ("C", self.C)):
            ev = np.linalg.eigvalsh(0.5 * (A + A.T))
            out[f"sym_{name}"] = float(np.abs(A - A.T).max() / max(np.abs(A).max(), 1e-300))
            out[f"min_eig_{name}"] = float(ev[0])
            out[f"max_eig_{name}"] = float(ev[-1])
            out[f"inv_norm_{name}"] = float(1.0 / ev[0]) if ev[0] > 0 else np.inf
            out[f"cond_{name}"] = float(ev[-1] / ev[0]) if ev[0] > 0 else np.inf
        return out


def _gram(tensor: IsotropicTensor, phi, model: Model) -> np.ndarray:
    S = model.strain_table
    D = model.div_table
    w = model.w
    mu = tensor.mu(phi)
    lam = tensor.lam(phi)
    K = np.einsum("mnab,n,lnab->ml", S, 2.0 * mu * w, S, optimize=True)
    K += (D * (lam * w)) @ D.T
    return 0.5 * (K + K.T)


def assemble_operators(phi, model: Model) -> OperatorPair:
    """Assemble ``B(phi)`` and ``C(phi)`` by quadrature.

    ``phi`` may be a Z-basis ``SpectralField`` or nodal values.
    """
    phi_nodal = phi.nodal if isinstance(phi, SpectralField) else np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi_nodal)):
        raise ValueError("non-finite phase field")
    law = model.material.elastic
    return OperatorPair(
        B=_gram(law.viscosity, phi_nodal, model),
        C=_gram(law.stiffness, phi_nodal, model),
        phi_tag=phi_nodal.tobytes(),
    )


def assemble_fstar(phi, theta, p, model: Model) -> np.ndarray:
    """Right-hand side of the displacement equation for every vector mode.

    Collects the eigenstrain stress, the mollified pressure coupling, body
    force, Neumann traction and the regularisation term
    ``-rho * int grad(theta) . grad(alpha(phi) * (div eta * K))``.
    ``phi`` is a Z-field, ``theta`` and ``p`` are Y-fields (or coefficient arrays).
    """
    Z, Y = model.Z, model.Y
    a = _coeffs(phi)
    c = _coeffs(theta)
    pc = _coeffs(p)
    mat = model.material
    n, k, w = model.dim, model.k, model.w

    phi_n = Z.to_nodes(a)
    p_n = Y.to_nodes(pc)
    C = mat.elastic.stiffness
    t = mat.elastic.eigenstrain.scalar(phi_n)
    alpha = mat.alpha(phi_n)

    load = model.div_table @ (w * (2.0 * C.mu(phi_n) + n * C.lam(phi_n)) * t)
    load += model.mollified_div @ (w * alpha * p_n)

    f = mat.sources.f(n)
    g = mat.sources.g(n)
    ybar = Y.values @ w
    for comp in range(n):
        block = slice(comp * k, (comp + 1) * k)
        load[block] += f[comp] * ybar
        for vals, bw in model.boundary_tables:
            load[block] += g[comp] * (vals @ bw)

    if model.rho > 0:
        grad_theta = Y.grad_to_nodes(c)
        grad_phi = Z.grad_to_nodes(a)
        Kdiv = model.mollified_div
        gKdiv = model.mollified_grad_div
        dot_phi = np.einsum("dn,dn->n", grad_theta, grad_phi)
        term = Kdiv @ (w * mat.alpha_prime(phi_n) * dot_phi)
        term += np.einsum("mdn,dn->m", gKdiv, grad_theta * (w * alpha))
        load -= model.rho * term
    return load


def step_viscoelastic(u_old, ops: OperatorPair, load, dt: float) -> np.ndarray:
    """One implicit Euler step of ``B u' + C u = load``.

    Returns the new coefficients with the shape of ``u_old``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    shape = np.shape(u_old)
    u0 = np.ravel(u_old)
    A = ops.B / dt + ops.C
    rhs = ops.B @ u0 / dt + load
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ContractViolation("A3/A4", "visco-elastic operator is not positive definite") from exc
    u1 = scipy.linalg.cho_solve(factor, rhs)
    res = ops.B @ (u1 - u0) / dt + ops.C @ u1 - load
    scale = max(np.linalg.norm(load), np.linalg.norm(ops.C @ u1), np.linalg.norm(ops.B @ u0) / dt, 1e-300)
    if np.linalg.norm(res) > 1e-10 * scale:
        # one step of iterative refinement for ill-conditioned systems
        u1 = u1 - scipy.linalg.cho_solve(factor, res)
    return u1.reshape(shape)


def energy_gradient_u(a, c, u, model: Model) -> np.ndarray:
    """Derivative of elastic plus fluid energy along each vector mode."""
    Z, Y = model.Z, model.Y
    mat = model.material
    phi = Z.to_nodes(a)
    theta = Y.to_nodes(c)
    E = model.strain(u)
    divu = model.divergence(u)
    stress = mat.W_E(phi, E)
    w = model.w
    elastic = np.einsum("mnab,nab->m", model.strain_table, stress * w[:, None, None])
    fluid = model.div_table @ (w * mat.pressure_law(phi, theta, divu) * mat.alpha(phi))
    return elastic - fluid


def _coeffs(x):
    return x.coeffs if isinstance(x, SpectralField) else np.asarray(x, dtype=float)
