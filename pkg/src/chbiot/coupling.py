"""Fixed-point coupling of the reduced flow system and the displacement solve.

Each time step runs a staggered Picard loop: advance ``(a, c)`` with the
displacement frozen, then solve the visco-elastic step at the new phase
field, fluid content and pressure, and repeat until neither the flow
coefficients nor the displacement change any more.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import SpectralField
from .chflow import DAEState, chemical_density, nodal_state, step_dae
from .elasticity import assemble_fstar, assemble_operators, step_viscoelastic
from .energy import dissipation, total_energy, with_dissipation
from .errors import NonConvergence, StepRejected
from .model import Model
from .mollifier import Mollifier, mollify

__all__ = [
    "Mollifier",
    "mollify",
    "SystemState",
    "PicardInfo",
    "picard_step",
    "run",
    "Trajectory",
    "pressure_identity_residual",
    "mean_value_residual",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SystemState:
    """Time-stamped coefficients of ``(phi, mu, theta, p, u)``.

    ``b`` and ``d`` are the chemical potential and pressure coefficients,
    ``u`` has shape ``(n, k)``.
    """

    time: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    u: np.ndarray
    model: Model = field(repr=False)

    @classmethod
    def from_coefficients(cls, a, c, u, model: Model, time: float = 0.0) -> "SystemState":
        u = np.asarray(u, dtype=float).reshape(model.dim, model.k)
        dae = DAEState.from_coefficients(a, c, u, model, time)
        return cls(float(time), dae.a, dae.b, dae.c, dae.d, u, model)

    @classmethod
    def zeros(cls, model: Model) -> "SystemState":
        k = model.k
        return cls.from_coefficients(np.zeros(k), np.zeros(k), np.zeros((model.dim, k)), model)

    @property
    def phi(self) -> SpectralField:
        return self.model.Z.field(self.a)

    @property
    def mu(self) -> SpectralField:
        return self.model.Z.field(self.b)

    @property
    def theta(self) -> SpectralField:
        return self.model.Y.field(self.c)

    @property
    def p(self) -> SpectralField:
        return self.model.Y.field(self.d)

    @property
    def dae(self) -> DAEState:
        return DAEState(self.a, self.c, self.b, self.d, self.time)

    def nodal(self) -> dict:
        """All fields at the quadrature nodes."""
        Z, Y = self.model.Z, self.model.Y
        out = {
            "phi": Z.to_nodes(self.a),
            "mu": Z.to_nodes(self.b),
            "theta": Y.to_nodes(self.c),
            "p": Y.to_nodes(self.d),
        }
        for comp, name in zip(self.u, ("u_x", "u_y")):
            out[name] = Y.to_nodes(comp)
        return out

    def vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.c, self.u.ravel()])


@dataclass(frozen=True)
class PicardInfo:
    iterations: int
    residuals: tuple


def _rel_change(new, old) -> float:
    scale = max(np.linalg.norm(new), np.linalg.norm(old))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(new - old) / scale)


def picard_step(state: SystemState, dt: float, tol: float = 1e-10, max_iter: int = 30,
                scheme: str = "imex", omega: float = 1.0) -> tuple[SystemState, PicardInfo]:
    """One coupled time step by staggered fixed-point iteration.

    Every pass advances ``(a, c)`` from the old level with the current
    displacement iterate frozen, then solves the visco-elastic step with
    operators and load taken at the new phase field, fluid content and
    pressure.  The loop stops at the first pass whose output reproduces the
    previous pass to relative accuracy ``tol``; ``iterations`` counts the
    passes before that confirming pass, so a decoupled problem reports one.

    Raises
    ------
    NonConvergence
        If ``max_iter`` passes do not settle; carries the last residual.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0.0 < omega <= 1.0:
        raise ValueError("relaxation factor must lie in (0, 1]")
    model = state.model
    dae0 = state.dae
    u_star = state.u
    prev = None
    residuals = []
    for it in range(1, max_iter + 1):
        dae1 = step_dae(dae0, u_star, dt, model, scheme)
        ops = assemble_operators(model.Z.to_nodes(dae1.a), model)
        load = assemble_fstar(dae1.a, dae1.c, dae1.d, model)
        u_new = step_viscoelastic(state.u, ops, load, dt)
        if omega < 1.0 and prev is not None:
            u_new = omega * u_new + (1.0 - omega) * u_star
        x = np.concatenate([dae1.a, dae1.c, u_new.ravel()])
        if prev is not None:
            r = _rel_change(x, prev)
            residuals.append(r)
            if r <= tol:
                final = SystemState.from_coefficients(dae1.a, dae1.c, u_new, model, dae1.time)
                return final, PicardInfo(it - 1, tuple(residuals))
        prev = x
        u_star = u_new
    raise NonConvergence(
        f"fixed-point loop at t={state.time:.6g} did not converge in {max_iter} passes",
        residuals[-1] if residuals else np.inf,
        max_iter,
    )


def pressure_identity_residual(state: SystemState) -> float:
    """Largest deviation of ``d`` from ``rho lambda_j c_j + <M (theta - alpha div u), y_j>``."""
    model = state.model
    ns = nodal_state(state.a, state.c, state.u, model)
    law = model.material.pressure_law(ns.phi, ns.theta, ns.divu)
    expected = model.rho * model.Y.eigenvalues * state.c + model.Y.project(law).coeffs
    return float(np.abs(state.d - expected).max())


def mean_value_residual(state: SystemState) -> float:
    """``|mean(mu) - mean(non-gradient chemical density)|``.

    Testing the chemical-potential equation with the constant mode kills every
    gradient term, so the average of ``mu`` must equal the average of the
    pointwise part.
    """
    model = state.model
    vol = model.domain.volume
    dens = chemical_density(nodal_state(state.a, state.c, state.u, model), model)
    mean_mu = model.quad.integrate(model.Z.to_nodes(state.b)) / vol
    return float(abs(mean_mu - model.quad.integrate(dens) / vol))


@dataclass
class Trajectory:
    states: list
    state_steps: list
    reports: list
    iterations: list
    pressure_residuals: list
    mean_value_residuals: list

    @property
    def final(self) -> SystemState:
        return self.states[-1]


def run(config, initial: SystemState, observer=None) -> Trajectory:
    """Advance ``initial`` to the final time of ``config``.

    ``config`` supplies ``dt``, ``n_steps``, ``scheme``, ``picard_tol``,
    ``picard_max_iter``, ``omega`` and ``keep_every`` (states retained every
    that many steps; the first and last are always kept).  ``observer`` is
    called as ``observer(step, state, report)`` after each accepted step.
    """
    model = initial.model
    dt = float(config.dt)
    keep = max(int(getattr(config, "keep_every", 1)), 1)
    state = initial
    report = total_energy(state, model)
    traj = Trajectory([state], [0], [report], [0], [pressure_identity_residual(state)],
                      [mean_value_residual(state)])
    if observer is not None:
        observer(0, state, report)
    for n in range(1, int(config.n_steps) + 1):
        try:
            new, info = picard_step(state, dt, config.picard_tol, config.picard_max_iter,
                                    config.scheme, config.omega)
        except (NonConvergence, StepRejected, FloatingPointError) as exc:
            log.error("step %d failed at t=%.6g: %s", n, state.time, exc)
            raise
        new = replace(new, time=initial.time + n * dt)
        report = with_dissipation(total_energy(new, model), dissipation(state, new, dt, model))
        state = new
        if n % keep == 0 or n == config.n_steps:
            traj.states.append(state)
            traj.state_steps.append(n)
        traj.reports.append(report)
        traj.iterations.append(info.iterations)
        traj.pressure_residuals.append(pressure_identity_residual(state))
        traj.mean_value_residuals.append(mean_value_residual(state))
        if observer is not None:
            observer(n, state, report)
    return traj
