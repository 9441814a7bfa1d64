"""Independent reference computations for the test suite.

Nothing here calls the solver's assembly code.  Basis functions are
re-evaluated on a Gauss grid with twice the solver's resolution and every
weak-form term is written out again from the constitutive laws.  The only
shared pieces are the basis definitions, the pointwise constitutive
functions and, for ``delta > 0``, the mollifier operator itself.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .basis import Quadrature
from .model import Model
from .mollifier import Mollifier

EQUATIONS = ("phi", "mu", "u", "theta", "p")


def fd_variational_derivative(F, state, which: str, index: int, h: float = 1e-5) -> float:
    """Central difference of ``F(a, c, u)`` along one coefficient.

    ``state`` is a tuple ``(a, c, u)``; ``which`` picks ``'a'``, ``'c'`` or
    ``'u'`` (flattened index for ``u``).
    """
    if not h > 0:
        raise ValueError("h must be positive")
    a, c, u = (np.array(x, dtype=float) for x in state)
    pos = {"a": 0, "c": 1, "u": 2}[which]

    def shifted(s):
        args = [a.copy(), c.copy(), u.copy()]
        args[pos].reshape(-1)[index] += s
        return F(*args)

    return (shifted(h) - shifted(-h)) / (2.0 * h)


class DenseOracle:
    """Double-resolution re-assembly of every term of the weak formulation."""

    def __init__(self, model: Model, factor: int = 2):
        self.model = model
        shape = tuple(factor * s for s in model.quad.shape)
        self.quad = Quadrature.gauss(model.domain, shape)
        self.w = self.quad.weights
        x = self.quad.nodes
        Z, Y = model.Z, model.Y
        self.z = Z.evaluate(x)
        self.gz = Z.evaluate_grad(x)
        self.lz = Z.evaluate_laplacian(x)
        self.y = Y.evaluate(x)
        self.gy = Y.evaluate_grad(x)
        self.hy = Y.evaluate_hessian(x)
        self.n = model.dim
        self.k = model.k

    # -- fields ----------------------------------------------------------------
    def fields(self, a, c, u):
        n = self.n
        u = np.asarray(u, dtype=float).reshape(n, self.k)
        phi = a @ self.z
        theta = c @ self.y
        grad_u = np.einsum("ck,kdn->ncd", u, self.gy)  # (N, component, direction)
        E = 0.5 * (grad_u + np.swapaxes(grad_u, 1, 2))
        divu = np.trace(grad_u, axis1=1, axis2=2)
        return phi, theta, E, divu

    @cached_property
    def div_eta(self):
        """``div eta_{c,i}`` with flattening ``c k + i``, shape ``(n k, N)``."""
        return np.concatenate([self.gy[:, c, :] for c in range(self.n)])

    @cached_property
    def strain_eta(self):
        n, k = self.n, self.k
        S = np.zeros((n * k, self.quad.size, n, n))
        for c in range(n):
            for d in range(n):
                S[c * k:(c + 1) * k, :, c, d] += 0.5 * self.gy[:, d, :]
                S[c * k:(c + 1) * k, :, d, c] += 0.5 * self.gy[:, d, :]
        return S

    @cached_property
    def mollifier(self):
        return Mollifier(self.model.delta, self.quad)

    @cached_property
    def coupling_div(self):
        if self.model.delta == 0.0:
            return self.div_eta
        return self.mollifier.apply(self.div_eta)

    @cached_property
    def coupling_grad_div(self):
        if self.model.delta == 0.0:
            return np.concatenate([self.hy[:, c, :, :] for c in range(self.n)])
        return self.mollifier.gradient(self.div_eta)

    # -- constitutive pieces written out for the isotropic law --------------------
    def _stress(self, tensor, phi, A):
        tr = np.trace(A, axis1=1, axis2=2)
        return (2.0 * tensor.mu(phi))[:, None, None] * A + (tensor.lam(phi) * tr)[:, None, None] * np.eye(self.n)

    def _elastic_phi_derivative(self, phi, E):
        mat = self.model.material
        C = mat.elastic.stiffness
        t = mat.elastic.eigenstrain.t0 * np.tanh(phi)
        tp = mat.elastic.eigenstrain.t0 / np.cosh(phi) ** 2
        D = E - t[:, None, None] * np.eye(self.n)
        trD = np.trace(D, axis1=1, axis2=2)
        DD = np.einsum("nij,nij->n", D, D)
        dC = 2.0 * C.mu.prime(phi) * DD + C.lam.prime(phi) * trD**2
        CD_tr = (2.0 * C.mu(phi) + self.n * C.lam(phi)) * trD
        return 0.5 * dC - tp * CD_tr

    # -- algebraic maps -------------------------------------------------------
    def H_mu(self, a, c, u):
        m = self.model
        mat = m.material
        phi, theta, E, divu = self.fields(a, c, u)
        q = theta - mat.alpha(phi) * divu
        dens = (
            mat.potential.psi_prime(phi) / m.eps
            + self._elastic_phi_derivative(phi, E)
            - mat.M(phi) * q * mat.alpha_prime(phi) * divu
            + 0.5 * mat.M_prime(phi) * q**2
        )
        lap = a @ self.lz
        grad_phi = np.einsum("k,kdn->dn", a, self.gz)
        w = self.w
        return (
            self.z @ (w * dens)
            + m.eps * np.einsum("kdn,dn->k", self.gz, grad_phi * w)
            + np.sqrt(m.rho) * self.lz @ (w * lap)
        )

    def H_p(self, a, c, u):
        m = self.model
        mat = m.material
        phi, theta, E, divu = self.fields(a, c, u)
        grad_theta = np.einsum("k,kdn->dn", c, self.gy)
        return (self.y @ (self.w * mat.M(phi) * (theta - mat.alpha(phi) * divu))
                + m.rho * np.einsum("kdn,dn->k", self.gy, grad_theta * self.w))

    def operators(self, a):
        mat = self.model.material
        phi = a @ self.z
        out = []
        for tensor in (mat.elastic.viscosity, mat.elastic.stiffness):
            K = np.zeros((self.n * self.k,) * 2)
            for i, Si in enumerate(self.strain_eta):
                sig = self._stress(tensor, phi, Si)
                K[i] = np.einsum("mnab,nab->m", self.strain_eta, sig * self.w[:, None, None])
            out.append(K)
        return tuple(out)

    def fstar(self, a, c, d):
        m = self.model
        mat = m.material
        n, k, w = self.n, self.k, self.w
        phi = a @ self.z
        p = d @ self.y
        t = mat.elastic.eigenstrain.t0 * np.tanh(phi)
        T = t[:, None, None] * np.eye(n)
        CT = self._stress(mat.elastic.stiffness, phi, T)
        load = np.einsum("mnab,nab->m", self.strain_eta, CT * w[:, None, None])
        load += self.coupling_div @ (w * mat.alpha(phi) * p)
        f = mat.sources.f(n)
        g = mat.sources.g(n)
        for comp in range(n):
            blk = slice(comp * k, (comp + 1) * k)
            load[blk] += f[comp] * (self.y @ w)
            for pts, bw in self.quad.boundary_rules():
                load[blk] += g[comp] * (m.Y.evaluate(pts) @ bw)
        if m.rho > 0:
            grad_theta = np.einsum("k,kdn->dn", c, self.gy)
            grad_phi = np.einsum("k,kdn->dn", a, self.gz)
            # grad(alpha Kdiv) = alpha' grad(phi) Kdiv + alpha grad(Kdiv)
            term = self.coupling_div @ (w * mat.alpha_prime(phi) * np.sum(grad_theta * grad_phi, axis=0))
            term += np.einsum("mdn,dn->m", self.coupling_grad_div, grad_theta * (w * mat.alpha(phi)))
            load -= m.rho * term
        return load

    def flux_terms(self, a, b, c, d, u):
        """``(-<m grad mu, grad z> + <R, z>, -<kappa grad p, grad y> + <S_f, y>)``."""
        mat = self.model.material
        phi, theta, E, divu = self.fields(a, c, u)
        w = self.w
        gmu = np.einsum("k,kdn->dn", b, self.gz)
        gp = np.einsum("k,kdn->dn", d, self.gy)
        Fa = -np.einsum("kdn,dn->k", self.gz, gmu * (w * mat.m(phi))) + self.z @ (w * mat.sources.R(phi, E, theta))
        Fc = -np.einsum("kdn,dn->k", self.gy, gp * (w * mat.kappa(phi))) + self.y @ (w * mat.sources.S_f(phi, E, theta))
        return Fa, Fc

    # -- weak residuals ----------------------------------------------------------
    def weak_residual(self, tag: str, index: int, state, prev=None, dt: float | None = None,
                      scheme: str = "imex") -> tuple[float, float]:
        """Residual of one weak equation against one basis test function.

        Returns ``(residual, scale)`` where ``scale`` is the sum of the
        magnitudes of the individual terms, so ``residual / scale`` is a
        relative defect.  The evolution equations (``phi``, ``theta``) and
        the displacement equation need the previous state and ``dt``; the
        time discretisation follows ``scheme`` (``imex``, ``convex`` or
        ``rk4``, the last one checked as a fully implicit end-of-step form).
        """
        if tag not in EQUATIONS:
            raise ValueError(f"equation tag must be one of {EQUATIONS}")
        m = self.model
        a, b, c, d, u = state.a, state.b, state.c, state.d, state.u
        if tag == "mu":
            ref = self.H_mu(a, c, u)
            return float(b[index] - ref[index]), float(abs(b[index]) + abs(ref[index]))
        if tag == "p":
            ref = self.H_p(a, c, u)
            return float(d[index] - ref[index]), float(abs(d[index]) + abs(ref[index]))
        if prev is None or dt is None:
            raise ValueError(f"the {tag!r} equation needs the previous state and dt")
        if tag == "u":
            B, C = self.operators(a)
            rate = (np.ravel(u) - np.ravel(prev.u)) / dt
            load = self.fstar(a, c, d)
            terms = (B[index] @ rate, C[index] @ np.ravel(u), -load[index])
            return float(sum(terms)), float(sum(abs(t) for t in terms))

        # evolution equations
        lz, ly = m.Z.eigenvalues, m.Y.eigenvalues
        if tag == "phi":
            rate = (a[index] - prev.a[index]) / dt
            if scheme == "imex":
                Fa, _ = self.flux_terms(prev.a, self.H_mu(prev.a, prev.c, u), prev.c, self.H_p(prev.a, prev.c, u), u)
                lin = m.material.mobility.upper * lz[index] * (
                    m.eps * lz[index] + np.sqrt(m.rho) * lz[index] ** 2 + m.stabilization)
                terms = (rate, -Fa[index], lin * (a[index] - prev.a[index]))
            elif scheme == "convex":
                terms = (rate,) + self._convex_flux(index, a, prev, u)
            else:
                Fa, _ = self.flux_terms(a, b, c, d, u)
                terms = (rate, -Fa[index])
        else:
            rate = (c[index] - prev.c[index]) / dt
            if scheme in ("imex", "convex"):
                _, Fc = self.flux_terms(prev.a, self.H_mu(prev.a, prev.c, u), prev.c, self.H_p(prev.a, prev.c, u), u)
                lin = m.material.permeability.upper * ly[index] * (m.rho * ly[index] + m.material.compressibility.upper)
                terms = (rate, -Fc[index], lin * (c[index] - prev.c[index]))
            else:
                _, Fc = self.flux_terms(a, b, c, d, u)
                terms = (rate, -Fc[index])
        return float(sum(terms)), float(sum(abs(t) for t in terms))

    def _convex_flux(self, index, a, prev, u):
        # mobility at the old level, convex part of psi at the new level,
        # everything else at the old level
        m = self.model
        mat = m.material
        pot = mat.potential
        w = self.w
        phi0 = prev.a @ self.z
        phi1 = a @ self.z
        b_old = self.H_mu(prev.a, prev.c, u)
        lin_old = m.eps * m.Z.eigenvalues + np.sqrt(m.rho) * m.Z.eigenvalues ** 2
        # swap the convex part and the linear terms to the new level
        b_new = (b_old - lin_old * prev.a - self.z @ (w * pot.psi1_prime(phi0) / m.eps)
                 + self.z @ (w * pot.psi1_prime(phi1) / m.eps) + lin_old * a)
        gmu = np.einsum("k,kdn->dn", b_new, self.gz)
        flux = np.einsum("dn,dn->", self.gz[index], gmu * (w * mat.m(phi0)))
        phi0_, theta0, E0, _ = self.fields(prev.a, prev.c, u)
        react = self.z[index] @ (w * mat.sources.R(phi0_, E0, theta0))
        return (float(flux), float(-react))


def dense_weak_residual(state, index: int, tag: str, prev=None, dt=None, scheme="imex",
                        oracle: DenseOracle | None = None) -> float:
    """Weak-form residual of equation ``tag`` tested with basis function ``index``."""
    oracle = DenseOracle(state.model) if oracle is None else oracle
    return oracle.weak_residual(tag, index, state, prev, dt, scheme)[0]


def audit_step(state, prev, dt: float, scheme: str = "imex", oracle: DenseOracle | None = None,
               tags=EQUATIONS) -> dict:
    """Largest residual of each equation over all test functions.

    Each residual is divided by the largest term magnitude of that equation
    across the test functions, so modes where every term is negligible do
    not dominate the measure.
    """
    oracle = DenseOracle(state.model) if oracle is None else oracle
    k = state.model.k
    out = {}
    for tag in tags:
        n_test = state.model.dim * k if tag == "u" else k
        pairs = [oracle.weak_residual(tag, j, state, prev, dt, scheme) for j in range(n_test)]
        scale = max(s for _, s in pairs)
        out[tag] = 0.0 if scale == 0.0 else max(abs(r) for r, _ in pairs) / scale
    return out
