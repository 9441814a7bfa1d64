"""Initial data: presets, elliptic smoothing of the phase field and projection.

The smoothing solves ``-sqrt(rho) lap phi_r + phi_r = phi_0`` with Neumann
conditions, which is diagonal in the Z-basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Basis, SpectralField
from .coupling import SystemState
from .errors import VerificationFailure
from .model import Model

PHI_PRESETS = ("constant", "single-mode", "random-band-limited", "tanh-interface")
THETA_PRESETS = ("zero", "constant", "single-mode")


def smooth_initial_phi(phi0, rho: float, basis_z: Basis) -> SpectralField:
    """Smoothed phase field ``phi_r`` with coefficients ``a_j / (1 + sqrt(rho) lambda_j)``.

    ``phi0`` is a Z-field or nodal values on the basis grid.
    """
    if not rho > 0:
        raise ValueError("smoothing needs rho > 0")
    coeffs = _z_coeffs(phi0, basis_z)
    return basis_z.field(coeffs / (1.0 + np.sqrt(rho) * basis_z.eigenvalues))


@dataclass(frozen=True)
class SmoothingReport:
    """Slacks (right side minus left side) of the three smoothing estimates."""

    l2_slack: float
    h1_slack: float
    convex_slack: float

    @property
    def ok(self) -> bool:
        return min(self.l2_slack, self.h1_slack, self.convex_slack) >= -1e-8


def verify_smoothing_estimates(phi0, phi_rho0: SpectralField, rho: float, material,
                               C: float = 1.0, raise_on_failure: bool = True) -> SmoothingReport:
    """Check the three a priori bounds of the smoothing solve by quadrature.

    (i)   ``2 sqrt(rho) |grad phi_r|^2 + |phi_r|^2 <= |phi_0|^2``
    (ii)  ``|phi_r|_{H1}^2 + sqrt(rho) |lap phi_r|^2 <= C |phi_0|_{H1}^2``
    (iii) ``int G(phi_r) <= int G(phi_0)``, ``G(v) = psi(v) + C2 v^2 / 2``

    ``C = 1`` holds mode by mode.  ``phi0`` must be a Z-field for (ii); for
    nodal input the projection's gradient is used.
    """
    Z = phi_rho0.basis
    w = Z.quad.weights
    s = np.sqrt(rho)
    if isinstance(phi0, SpectralField):
        phi0_nodal = phi0.nodal
        grad0 = phi0.grad_at_nodes()
    else:
        phi0_nodal = np.asarray(phi0, dtype=float)
        grad0 = Z.grad_to_nodes(Z.project(phi0_nodal).coeffs)
    phi_r = phi_rho0.nodal
    grad_r = phi_rho0.grad_at_nodes()
    lap_r = Z.to_nodes(-Z.eigenvalues * phi_rho0.coeffs)

    l2_0 = np.dot(w, phi0_nodal**2)
    g2_0 = np.dot(w, np.sum(grad0**2, axis=0))
    l2_r = np.dot(w, phi_r**2)
    g2_r = np.dot(w, np.sum(grad_r**2, axis=0))

    l2_slack = l2_0 - (2.0 * s * g2_r + l2_r)
    h1_slack = C * (l2_0 + g2_0) - (l2_r + g2_r + s * np.dot(w, lap_r**2))

    pot = material.potential

    def G(v):
        return pot.psi(v) + 0.5 * pot.C2 * v**2

    convex_slack = np.dot(w, G(phi0_nodal)) - np.dot(w, G(phi_r))
    report = SmoothingReport(float(l2_slack), float(h1_slack), float(convex_slack))
    if raise_on_failure and not report.ok:
        worst = min(("L2 bound", l2_slack), ("H1 bound", h1_slack), ("convex bound", convex_slack),
                    key=lambda t: t[1])
        raise VerificationFailure(f"smoothing estimate violated: {worst[0]} slack {worst[1]:.3e}")
    return report


# -- presets -----------------------------------------------------------------


def phi_preset(name: str, model: Model, amplitude: float = 1.0, mode: int = 2, value: float = 0.0,
               n_modes: int = 8, seed: int = 0, width: float = 0.1, position: float = 0.5) -> np.ndarray:
    """Phase-field preset as nodal values on the model grid.

    constant
        ``value`` everywhere.
    single-mode
        ``amplitude`` times the Z-mode with 1-based index ``mode`` plus ``value``.
    random-band-limited
        Gaussian coefficients on Z-modes ``2..n_modes`` (mean ``value``),
        scaled by ``amplitude / sqrt(1 + lambda_j)``, reproducible from ``seed``.
    tanh-interface
        ``tanh((x - position L_x) / (sqrt(2) width))`` scaled by ``amplitude``.
    """
    Z = model.Z
    x = model.quad.nodes
    if name == "constant":
        return np.full(model.quad.size, float(value))
    if name == "single-mode":
        if not 1 <= mode <= Z.k:
            raise ValueError(f"mode index {mode} outside 1..{Z.k}")
        return value + amplitude * Z.values[mode - 1]
    if name == "random-band-limited":
        return Z.to_nodes(random_band_limited(Z, n_modes, seed, amplitude, value))
    if name == "tanh-interface":
        Lx = model.domain.lengths[0]
        return amplitude * np.tanh((x[:, 0] - position * Lx) / (np.sqrt(2.0) * width))
    raise ValueError(f"unknown phase-field preset {name!r}; choose from {PHI_PRESETS}")


def random_band_limited(Z: Basis, n_modes: int, seed: int, amplitude: float = 1.0,
                        mean: float = 0.0) -> np.ndarray:
    """Seeded Z-coefficients supported on the first ``n_modes`` modes."""
    n_modes = min(int(n_modes), Z.k)
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(Z.k)
    coeffs[1:n_modes] = rng.normal(size=n_modes - 1) * amplitude / np.sqrt(1.0 + Z.eigenvalues[1:n_modes])
    coeffs[0] = mean * np.sqrt(Z.domain.volume)
    return coeffs


def theta_preset(name: str, model: Model, amplitude: float = 0.0, mode: int = 1) -> np.ndarray:
    Y = model.Y
    if name == "zero":
        return np.zeros(model.quad.size)
    if name == "constant":
        return np.full(model.quad.size, float(amplitude))
    if name == "single-mode":
        if not 1 <= mode <= Y.k:
            raise ValueError(f"mode index {mode} outside 1..{Y.k}")
        return amplitude * Y.values[mode - 1]
    raise ValueError(f"unknown fluid-content preset {name!r}; choose from {THETA_PRESETS}")


# -- assembly of the initial state -------------------------------------------


def prepare_initial(model: Model, phi0, theta0=None, u0=None, smooth: bool = True) -> SystemState:
    """Project raw initial data into the bases and derive ``mu``, ``p``.

    Parameters
    ----------
    phi0, theta0 : nodal values on the model grid (``theta0`` defaults to zero)
    u0 : nodal values of shape ``(n, N)`` (defaults to zero)
    smooth : bool
        Apply the elliptic smoothing to ``phi0`` when ``rho > 0``.
    """
    N, n = model.quad.size, model.dim
    phi0 = _finite(phi0, (N,), "phi0")
    theta0 = np.zeros(N) if theta0 is None else _finite(theta0, (N,), "theta0")
    u0 = np.zeros((n, N)) if u0 is None else _finite(u0, (n, N), "u0")

    if smooth and model.rho > 0:
        a = smooth_initial_phi(phi0, model.rho, model.Z).coeffs
    else:
        a = model.Z.project(phi0).coeffs
    c = model.Y.project(theta0).coeffs
    u = np.stack([model.Y.project(comp).coeffs for comp in u0])
    return SystemState.from_coefficients(a, c, u, model)


def _finite(x, shape, name):
    x = np.asarray(x, dtype=float)
    if x.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def _z_coeffs(phi0, Z: Basis) -> np.ndarray:
    if isinstance(phi0, SpectralField):
        if phi0.basis is not Z:
            raise ValueError("phi0 lives on a different basis")
        return phi0.coeffs
    return Z.project(np.asarray(phi0, dtype=float)).coeffs
