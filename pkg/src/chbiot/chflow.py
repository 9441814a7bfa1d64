"""Reduced ODE system for the phase-field and fluid-content coefficients.

The algebraic unknowns (chemical potential ``b`` and pressure ``d``) are
eliminated through the maps ``H_mu`` and ``H_p``; what remains is an ODE for
the Z-coefficients ``a`` of the phase field and the Y-coefficients ``c`` of
the fluid content, with the displacement held fixed.

Nonlinear terms are evaluated at the quadrature nodes and projected back.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import StepRejected
from .model import Model

SCHEMES = ("imex", "rk4", "convex")


@dataclass(frozen=True)
class NodalState:
    phi: np.ndarray
    theta: np.ndarray
    E: np.ndarray
    divu: np.ndarray


def nodal_state(a, c, u, model: Model) -> NodalState:
    return NodalState(
        phi=model.Z.to_nodes(a),
        theta=model.Y.to_nodes(c),
        E=model.strain(u),
        divu=model.divergence(u),
    )


def chemical_density(ns: NodalState, model: Model) -> np.ndarray:
    """Pointwise non-gradient part of the chemical potential."""
    mat = model.material
    phi, divu = ns.phi, ns.divu
    q = ns.theta - mat.alpha(phi) * divu
    return (
        mat.psi_prime(phi) / model.eps
        + mat.W_phi(phi, ns.E)
        - mat.M(phi) * q * mat.alpha_prime(phi) * divu
        + 0.5 * mat.M_prime(phi) * q**2
    )


def _linear_mu(model: Model) -> np.ndarray:
    lam = model.Z.eigenvalues
    return model.eps * lam + np.sqrt(model.rho) * lam**2


def compute_H_mu(a, c, u, model: Model) -> np.ndarray:
    """Chemical-potential coefficients ``b`` for given ``(a, c, u)``."""
    ns = nodal_state(a, c, u, model)
    dens = chemical_density(ns, model)
    if not np.all(np.isfinite(dens)):
        raise FloatingPointError("non-finite chemical potential density")
    return model.Z.values @ (model.w * dens) + _linear_mu(model) * np.asarray(a)


def compute_H_p(a, c, u, model: Model) -> np.ndarray:
    """Pressure coefficients ``d``: ``rho lambda_j c_j + <M (theta - alpha div u), y_j>``."""
    ns = nodal_state(a, c, u, model)
    law = model.material.pressure_law(ns.phi, ns.theta, ns.divu)
    if not np.all(np.isfinite(law)):
        raise FloatingPointError("non-finite pressure")
    return model.rho * model.Y.eigenvalues * np.asarray(c) + model.Y.values @ (model.w * law)


def rhs_a(a, b, c, u, model: Model) -> np.ndarray:
    Z, w = model.Z, model.w
    ns = nodal_state(a, c, u, model)
    mat = model.material
    flux = Z.grad_to_nodes(b) * (w * mat.m(ns.phi))
    reaction = mat.sources.R(ns.phi, ns.E, ns.theta)
    return -np.einsum("kdn,dn->k", Z.grads, flux) + Z.values @ (w * reaction)


def rhs_c(a, c, d, u, model: Model) -> np.ndarray:
    Y, w = model.Y, model.w
    ns = nodal_state(a, c, u, model)
    mat = model.material
    flux = Y.grad_to_nodes(d) * (w * mat.kappa(ns.phi))
    source = mat.sources.S_f(ns.phi, ns.E, ns.theta)
    return -np.einsum("kdn,dn->k", Y.grads, flux) + Y.values @ (w * source)


def mobility_matrix(a, model: Model) -> np.ndarray:
    """``G_ij = <m(phi) grad z_i, grad z_j>``."""
    Z = model.Z
    m = model.material.m(Z.to_nodes(a))
    return np.einsum("idn,n,jdn->ij", Z.grads, model.w * m, Z.grads, optimize=True)


@dataclass(frozen=True)
class DAEState:
    a: np.ndarray
    c: np.ndarray
    b: np.ndarray
    d: np.ndarray
    time: float = 0.0

    @classmethod
    def from_coefficients(cls, a, c, u, model: Model, time: float = 0.0) -> "DAEState":
        a = np.asarray(a, dtype=float)
        c = np.asarray(c, dtype=float)
        return cls(a, c, compute_H_mu(a, c, u, model), compute_H_p(a, c, u, model), time)


def ode_rhs(a, c, u, model: Model):
    b = compute_H_mu(a, c, u, model)
    d = compute_H_p(a, c, u, model)
    return rhs_a(a, b, c, u, model), rhs_c(a, c, d, u, model)


def implicit_diagonals(model: Model):
    """Diagonal stiff parts treated implicitly by the IMEX scheme."""
    mat = model.material
    lz, ly = model.Z.eigenvalues, model.Y.eigenvalues
    La = mat.mobility.upper * lz * (_linear_mu(model) + model.stabilization)
    Lc = mat.permeability.upper * ly * (model.rho * ly + mat.compressibility.upper)
    return La, Lc


def step_dae(state: DAEState, u, dt: float, model: Model, scheme: str = "imex",
             max_change: float = np.inf) -> DAEState:
    """Advance ``(a, c)`` by one step with the displacement frozen at ``u``.

    Schemes
    -------
    imex
        Stiff diagonal parts implicit, everything else explicit.  First order.
    rk4
        Classical four-stage Runge-Kutta on the full right-hand side.
    convex
        Convex part of the potential implicit (Newton on the coefficient
        system), concave part and couplings explicit, mobility lagged; the
        fluid content is advanced as in ``imex``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    a, c = state.a, state.c
    if scheme == "imex":
        Fa, Fc = ode_rhs(a, c, u, model)
        La, Lc = implicit_diagonals(model)
        a1 = (a + dt * (Fa + La * a)) / (1.0 + dt * La)
        c1 = (c + dt * (Fc + Lc * c)) / (1.0 + dt * Lc)
    elif scheme == "rk4":
        k1 = ode_rhs(a, c, u, model)
        k2 = ode_rhs(a + 0.5 * dt * k1[0], c + 0.5 * dt * k1[1], u, model)
        k3 = ode_rhs(a + 0.5 * dt * k2[0], c + 0.5 * dt * k2[1], u, model)
        k4 = ode_rhs(a + dt * k3[0], c + dt * k3[1], u, model)
        a1 = a + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        c1 = c + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    elif scheme == "convex":
        a1 = _convex_phase_step(a, c, u, dt, model)
        d = compute_H_p(a, c, u, model)
        Fc = rhs_c(a, c, d, u, model)
        _, Lc = implicit_diagonals(model)
        c1 = (c + dt * (Fc + Lc * c)) / (1.0 + dt * Lc)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")

    change = max(np.abs(a1 - a).max(initial=0), np.abs(c1 - c).max(initial=0))
    if not (np.all(np.isfinite(a1)) and np.all(np.isfinite(c1))) or change > max_change:
        raise StepRejected(f"step at t={state.time:.6g} rejected (max coefficient change {change:.3e})")
    return DAEState.from_coefficients(a1, c1, u, model, state.time + dt)


def _convex_phase_step(a, c, u, dt, model: Model, tol=1e-14, max_iter=50):
    Z, w = model.Z, model.w
    mat = model.material
    pot = mat.potential
    ns = nodal_state(a, c, u, model)
    # everything except the convex part of psi, frozen at the old level
    explicit = chemical_density(ns, model) - (pot.psi_prime(ns.phi) - pot.psi2_prime(ns.phi)) / model.eps
    e = Z.values @ (w * explicit)
    r = Z.values @ (w * mat.sources.R(ns.phi, ns.E, ns.theta))
    G = mobility_matrix(a, model)
    lin = _linear_mu(model)

    x = a.copy()
    for _ in range(max_iter):
        phi = Z.to_nodes(x)
        b = Z.values @ (w * pot.psi1_prime(phi) / model.eps) + lin * x + e
        res = x - a + dt * (G @ b) - dt * r
        J_b = (Z.values * (w * pot.psi1_second(phi) / model.eps)) @ Z.values.T + np.diag(lin)
        J = np.eye(len(x)) + dt * G @ J_b
        dx = np.linalg.solve(J, -res)
        x = x + dx
        if np.abs(dx).max() <= tol * (1.0 + np.abs(x).max()):
            break
    else:
        raise StepRejected("convex-splitting Newton iteration did not converge")
    return x


def mean_value_residual(state: DAEState, u, model: Model) -> float:
    """``b_1`` against the volume-averaged non-gradient chemical density."""
    ns = nodal_state(state.a, state.c, u, model)
    # independent nodal evaluation of the density, not through the projection
    vol = model.domain.volume
    integral = model.quad.integrate(chemical_density(ns, model))
    return abs(state.b[0] - integral / np.sqrt(vol))


def with_time(state: DAEState, time: float) -> DAEState:
    return replace(state, time=time)
