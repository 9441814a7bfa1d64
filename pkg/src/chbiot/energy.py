"""Gradient-flow energy, dissipation rates and phase mass.

The energy is

    F = F_gl + F_el + F_f,
    F_gl = int eps/2 |grad phi|^2 + psi(phi)/eps + sqrt(rho)/2 |lap phi|^2,
    F_el = int W(phi, E(u)),
    F_f  = int M(phi)/2 (theta - alpha(phi) div u)^2 + rho/2 |grad theta|^2.

The regularisation terms vanish for ``rho = 0``; including them makes the
chemical potential and the pressure exact coefficient derivatives of ``F``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .model import Model

CSV_FIELDS = ("time", "F_gl", "F_el", "F_f", "F_total", "diss_mu", "diss_p", "diss_u", "mass_phi", "mean_mu")


@dataclass(frozen=True)
class EnergyReport:
    time: float
    F_gl: float
    F_el: float
    F_f: float
    diss_mu: float = 0.0
    diss_p: float = 0.0
    diss_u: float = 0.0
    mass_phi: float = 0.0
    mean_mu: float = 0.0

    @property
    def F_total(self) -> float:
        return self.F_gl + self.F_el + self.F_f

    @property
    def dissipation(self) -> float:
        return self.diss_mu + self.diss_p + self.diss_u

    def row(self) -> tuple:
        d = asdict(self)
        d["F_total"] = self.F_total
        return tuple(d[name] for name in CSV_FIELDS)

    @classmethod
    def from_row(cls, row) -> "EnergyReport":
        d = dict(zip(CSV_FIELDS, (float(x) for x in row)))
        d.pop("F_total")
        return cls(**d)


def energy_components(a, c, u, model: Model) -> tuple[float, float, float]:
    """``(F_gl, F_el, F_f)`` for coefficient vectors ``a``, ``c`` and displacement ``u``."""
    Z, Y, w = model.Z, model.Y, model.w
    mat = model.material
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    phi = Z.to_nodes(a)
    grad_phi = Z.grad_to_nodes(a)
    lap_phi = Z.to_nodes(-Z.eigenvalues * a)
    F_gl = np.dot(w, 0.5 * model.eps * np.sum(grad_phi**2, axis=0) + mat.psi(phi) / model.eps)
    F_gl += 0.5 * np.sqrt(model.rho) * np.dot(w, lap_phi**2)

    E = model.strain(u)
    F_el = np.dot(w, mat.W(phi, E))

    theta = Y.to_nodes(c)
    q = theta - mat.alpha(phi) * model.divergence(u)
    F_f = np.dot(w, 0.5 * mat.M(phi) * q**2)
    F_f += 0.5 * model.rho * np.dot(w, np.sum(Y.grad_to_nodes(c) ** 2, axis=0))
    return float(F_gl), float(F_el), float(F_f)


def free_energy(a, c, u, model: Model) -> float:
    return sum(energy_components(a, c, u, model))


def phase_mass(a, model: Model) -> float:
    """``int phi = |Omega|^{1/2} a_1``."""
    return float(np.sqrt(model.domain.volume) * a[0])


def total_energy(state, model: Model) -> EnergyReport:
    """Energy report for a state carrying ``time, a, b, c, u``; dissipations left at zero."""
    F_gl, F_el, F_f = energy_components(state.a, state.c, state.u, model)
    vol = model.domain.volume
    return EnergyReport(
        time=float(state.time),
        F_gl=F_gl,
        F_el=F_el,
        F_f=F_f,
        mass_phi=phase_mass(state.a, model),
        mean_mu=float(state.b[0] / np.sqrt(vol)),
    )


def dissipation(state_prev, state_next, dt: float, model: Model) -> tuple[float, float, float]:
    """``(diss_mu, diss_p, diss_u)``.

    Gradients of ``mu`` and ``p`` and the coefficients are taken at the end
    of the step; the displacement rate is the backward difference.
    """
    Z, Y, w = model.Z, model.Y, model.w
    mat = model.material
    phi = Z.to_nodes(state_next.a)
    grad_mu = Z.grad_to_nodes(state_next.b)
    grad_p = Y.grad_to_nodes(state_next.d)
    diss_mu = np.dot(w * mat.m(phi), np.sum(grad_mu**2, axis=0))
    diss_p = np.dot(w * mat.kappa(phi), np.sum(grad_p**2, axis=0))
    rate = (np.ravel(state_next.u) - np.ravel(state_prev.u)) / dt
    Edot = model.strain(rate)
    visc = mat.elastic.viscosity.apply(phi, Edot)
    diss_u = np.dot(w, np.einsum("nij,nij->n", visc, Edot))
    return float(diss_mu), float(diss_p), float(diss_u)


def with_dissipation(report: EnergyReport, diss) -> EnergyReport:
    d = {f.name: getattr(report, f.name) for f in fields(report)}
    d["diss_mu"], d["diss_p"], d["diss_u"] = diss
    return EnergyReport(**d)
