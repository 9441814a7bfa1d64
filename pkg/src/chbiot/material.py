"""Constitutive laws of the Cahn-Hilliard-Biot system.

All laws are vectorised over collocation nodes: scalars are arrays of shape
``(N,)`` and strains are arrays of shape ``(N, n, n)``.  Every model runs a
sampled contract suite when it is constructed, so an inadmissible parameter
set fails loudly before any simulation starts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

_CONTRACT_SAMPLES = 1000
_CONTRACT_SEED = 20240611


def _sech2(v):
    return 1.0 / np.cosh(v) ** 2


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DoubleWell:
    """Quartic double well ``alpha_dw * (1 - v**2)**2``.

    Split into the convex part ``alpha_dw * (v**4 + 1)`` and the concave
    remainder ``-2 * alpha_dw * v**2``.
    """

    alpha_dw: float = 0.25
    # growth exponent of the convex part (distinct from the pore pressure)
    p_growth: float = 4.0

    def __post_init__(self):
        if not self.alpha_dw > 0:
            raise ContractViolation("A2", f"alpha_dw must be positive, got {self.alpha_dw}")

    @property
    def C2(self) -> float:
        """Bound on the concave part's second derivative."""
        return 4.0 * self.alpha_dw

    def psi(self, v):
        return self.alpha_dw * (1.0 - v**2) ** 2

    def psi_prime(self, v):
        return 4.0 * self.alpha_dw * v * (v**2 - 1.0)

    def psi_second(self, v):
        return self.alpha_dw * (12.0 * v**2 - 4.0)

    def psi1(self, v):
        return self.alpha_dw * (v**4 + 1.0)

    def psi1_prime(self, v):
        return 4.0 * self.alpha_dw * v**3

    def psi1_second(self, v):
        return 12.0 * self.alpha_dw * v**2

    def psi2(self, v):
        return -2.0 * self.alpha_dw * v**2

    def psi2_prime(self, v):
        return -4.0 * self.alpha_dw * v

    def psi2_second(self, v):
        return np.full_like(np.asarray(v, dtype=float), -4.0 * self.alpha_dw)


@dataclass(frozen=True)
class ZeroPotential:
    """``psi == 0``; used for pure-diffusion and linear test configurations."""

    C2: float = 0.0

    def psi(self, v):
        return np.zeros_like(np.asarray(v, dtype=float))

    psi_prime = psi_second = psi1 = psi1_prime = psi1_second = psi
    psi2 = psi2_prime = psi2_second = psi


# ---------------------------------------------------------------------------
# scalar coefficients and tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarCoefficient:
    """Smooth phase interpolation ``lower + (upper - lower) * (1 + tanh v) / 2``.

    The value stays inside ``[lower, upper]`` for every real argument and the
    derivative is bounded by ``(upper - lower) / 2``.
    """

    lower: float
    upper: float

    @classmethod
    def constant(cls, value: float) -> "ScalarCoefficient":
        return cls(value, value)

    @property
    def is_constant(self) -> bool:
        return self.lower == self.upper

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        half = 0.5 * (self.upper - self.lower)
        return 0.5 * (self.upper + self.lower) + half * np.tanh(v)

    def prime(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * (self.upper - self.lower) * _sech2(v)


@dataclass(frozen=True)
class IsotropicTensor:
    """Isotropic fourth-order tensor ``C(phi) A = 2 mu A + lam tr(A) I``."""

    mu: ScalarCoefficient
    lam: ScalarCoefficient

    def apply(self, phi, A):
        n = A.shape[-1]
        tr = np.trace(A, axis1=-2, axis2=-1)
        out = 2.0 * self.mu(phi)[..., None, None] * A
        out += (self.lam(phi) * tr)[..., None, None] * np.eye(n)
        return out

    def apply_prime(self, phi, A):
        n = A.shape[-1]
        tr = np.trace(A, axis1=-2, axis2=-1)
        out = 2.0 * self.mu.prime(phi)[..., None, None] * A
        out += (self.lam.prime(phi) * tr)[..., None, None] * np.eye(n)
        return out

    def coercivity(self, n: int) -> float:
        """Lower bound ``c`` with ``C E : E >= c |E|^2`` for all phases."""
        mu_lo = min(self.mu.lower, self.mu.upper)
        lam_lo = min(self.lam.lower, self.lam.upper)
        return min(2.0 * mu_lo, 2.0 * mu_lo + n * lam_lo)


@dataclass(frozen=True)
class Eigenstrain:
    """Eigenstrain ``t0 * tanh(phi) * I``."""

    t0: float = 0.0

    def scalar(self, phi):
        return self.t0 * np.tanh(phi)

    def scalar_prime(self, phi):
        return self.t0 * _sech2(phi)


@dataclass(frozen=True)
class ElasticLaw:
    stiffness: IsotropicTensor
    viscosity: IsotropicTensor
    eigenstrain: Eigenstrain = Eigenstrain()


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceSet:
    """Reaction ``R``, fluid source ``S_f``, body force ``f`` and traction ``g``.

    ``R = r_amp * tanh(r_rate * phi / 2)`` is a saturated logistic and
    ``S_f = clip(s0 + s_phi*phi + s_tr*tr(E) + s_theta*theta, +-s_max)``.
    """

    r_amp: float = 0.0
    r_rate: float = 1.0
    s0: float = 0.0
    s_phi: float = 0.0
    s_tr: float = 0.0
    s_theta: float = 0.0
    s_max: float = 1.0
    body_force: tuple = (0.0, 0.0)
    traction: tuple = (0.0, 0.0)

    @property
    def R_max(self) -> float:
        return abs(self.r_amp)

    def R(self, phi, E, theta):
        phi = np.asarray(phi, dtype=float)
        return self.r_amp * np.tanh(0.5 * self.r_rate * phi)

    def S_f(self, phi, E, theta):
        tr = np.trace(E, axis1=-2, axis2=-1)
        raw = self.s0 + self.s_phi * phi + self.s_tr * tr + self.s_theta * theta
        return np.clip(raw, -self.s_max, self.s_max)

    def f(self, n: int) -> np.ndarray:
        return np.asarray(self.body_force[:n], dtype=float)

    def g(self, n: int) -> np.ndarray:
        return np.asarray(self.traction[:n], dtype=float)

    @property
    def is_zero(self) -> bool:
        return (
            self.r_amp == 0.0
            and self.s_max * max(abs(self.s0), abs(self.s_phi), abs(self.s_tr), abs(self.s_theta)) == 0.0
            and not any(self.body_force)
            and not any(self.traction)
        )


# ---------------------------------------------------------------------------
# the full model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaterialModel:
    """All constitutive functions of the coupled system.

    Parameters
    ----------
    potential : DoubleWell or ZeroPotential
    mobility, permeability, compressibility, biot : ScalarCoefficient
        ``m``, ``kappa``, ``M`` and ``alpha``.
    elastic : ElasticLaw
    sources : SourceSet
    dim : int
        Spatial dimension, needed for the tensor contracts.
    """

    potential: DoubleWell | ZeroPotential = field(default_factory=DoubleWell)
    mobility: ScalarCoefficient = ScalarCoefficient(1.0, 1.0)
    permeability: ScalarCoefficient = ScalarCoefficient(1.0, 1.0)
    compressibility: ScalarCoefficient = ScalarCoefficient(1.0, 1.0)
    biot: ScalarCoefficient = ScalarCoefficient(0.0, 0.0)
    elastic: ElasticLaw = field(
        default_factory=lambda: ElasticLaw(
            IsotropicTensor(ScalarCoefficient.constant(1.0), ScalarCoefficient.constant(1.0)),
            IsotropicTensor(ScalarCoefficient.constant(1.0), ScalarCoefficient.constant(0.0)),
        )
    )
    sources: SourceSet = SourceSet()
    dim: int = 1
    check: bool = True

    def __post_init__(self):
        if self.check:
            self.check_contracts()

    # -- pointwise laws ----------------------------------------------------
    def psi(self, v):
        return self.potential.psi(v)

    def psi_prime(self, v):
        return self.potential.psi_prime(v)

    def m(self, v):
        return self.mobility(v)

    def kappa(self, v):
        return self.permeability(v)

    def M(self, v):
        return self.compressibility(v)

    def M_prime(self, v):
        return self.compressibility.prime(v)

    def alpha(self, v):
        return self.biot(v)

    def alpha_prime(self, v):
        return self.biot.prime(v)

    def eigenstrain(self, phi):
        """``T(phi)`` as an ``(N, n, n)`` array."""
        t = self.elastic.eigenstrain.scalar(np.asarray(phi, dtype=float))
        return t[..., None, None] * np.eye(self.dim)

    def W(self, phi, E):
        """Elastic energy density ``1/2 C(phi)(E - T) : (E - T)``."""
        phi, E = _check_strain(phi, E)
        D = E - self.eigenstrain(phi)
        CD = self.elastic.stiffness.apply(phi, D)
        return 0.5 * np.einsum("...ij,...ij->...", CD, D)

    def W_E(self, phi, E):
        """Stress ``C(phi)(E - T(phi))``."""
        phi, E = _check_strain(phi, E)
        D = E - self.eigenstrain(phi)
        return self.elastic.stiffness.apply(phi, D)

    def W_phi(self, phi, E):
        phi, E = _check_strain(phi, E)
        D = E - self.eigenstrain(phi)
        C = self.elastic.stiffness
        t_prime = self.elastic.eigenstrain.scalar_prime(phi)
        first = 0.5 * np.einsum("...ij,...ij->...", C.apply_prime(phi, D), D)
        # C(phi) D : T'(phi) with T' = t' I
        second = np.trace(C.apply(phi, D), axis1=-2, axis2=-1) * t_prime
        return first - second

    def pressure_law(self, phi, theta, divu):
        """Pore pressure ``M(phi) (theta - alpha(phi) div u)``."""
        return self.M(phi) * (theta - self.alpha(phi) * divu)

    # -- contracts -----------------------------------------------------------
    def check_contracts(self, samples: int = _CONTRACT_SAMPLES, seed: int = _CONTRACT_SEED):
        """Sampled checks of the structural assumptions; raises on violation."""
        rng = np.random.default_rng(seed)
        v = rng.uniform(-10.0, 10.0, samples)
        pot = self.potential
        if np.any(pot.psi(v) < 0):
            raise ContractViolation("A2.1", "potential takes negative values")
        if not np.allclose(pot.psi(v), pot.psi1(v) + pot.psi2(v), rtol=1e-13, atol=1e-12):
            raise ContractViolation("A2", "psi != psi1 + psi2")
        if np.any(pot.psi1_second(v) < 0):
            raise ContractViolation("A2", "psi1 is not convex")
        if np.any(np.abs(pot.psi2_second(v)) > pot.C2 * (1 + 1e-14)):
            raise ContractViolation("A2.3", "|psi2''| exceeds C2")

        for name, coef, tag, strict in (
            ("mobility", self.mobility, "A7", True),
            ("permeability", self.permeability, "A8", True),
            ("compressibility", self.compressibility, "A9", True),
            ("biot", self.biot, "A9", False),
        ):
            lo, hi = coef.lower, coef.upper
            if lo > hi:
                raise ContractViolation(tag, f"{name}: lower bound {lo} exceeds upper bound {hi}")
            if (strict and lo <= 0) or lo < 0:
                raise ContractViolation(tag, f"{name}: lower bound must be {'positive' if strict else 'non-negative'}")
            vals = coef(v)
            if np.any(vals < lo * (1 - 1e-14)) or np.any(vals > hi * (1 + 1e-14)):
                raise ContractViolation(tag, f"{name} leaves [{lo}, {hi}]")

        M_bar = self.compressibility.upper
        if np.any(np.abs(self.M_prime(v)) > M_bar):
            raise ContractViolation("A9", "|M'| exceeds the upper bound of M")

        n = self.dim
        for tag, tensor in (("A3", self.elastic.stiffness), ("A4", self.elastic.viscosity)):
            c = tensor.coercivity(n)
            if not c > 0:
                raise ContractViolation(tag, f"tensor is not uniformly positive definite (c = {c})")
            E = _random_symmetric(rng, samples, n)
            D = _random_symmetric(rng, samples, n)
            CE = tensor.apply(v, E)
            quad = np.einsum("sij,sij->s", CE, E)
            if np.any(quad < c * np.einsum("sij,sij->s", E, E) * (1 - 1e-12)):
                raise ContractViolation(tag, "coercivity sample failed")
            lhs = np.einsum("sij,sij->s", tensor.apply(v, D), E)
            rhs = np.einsum("sij,sij->s", D, CE)
            if not np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12):
                raise ContractViolation(tag, "tensor is not symmetric")

        E = _random_symmetric(rng, samples, n)
        theta = rng.uniform(-10.0, 10.0, samples)
        if np.any(np.abs(self.sources.R(v, E, theta)) > self.sources.R_max * (1 + 1e-14)):
            raise ContractViolation("A10", "R is not bounded by R_max")

    @property
    def alpha_bar(self) -> float:
        b = self.biot
        return max(abs(b.lower), abs(b.upper)) + 0.5 * abs(b.upper - b.lower)


def _random_symmetric(rng, samples, n):
    A = rng.normal(size=(samples, n, n))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def _check_strain(phi, E):
    phi = np.asarray(phi, dtype=float)
    E = np.asarray(E, dtype=float)
    if E.ndim < 2 or E.shape[-1] != E.shape[-2]:
        raise ValueError(f"strain must be (..., n, n), got shape {E.shape}")
    if not np.allclose(E, np.swapaxes(E, -1, -2), rtol=0, atol=1e-13 * max(1.0, np.abs(E).max(initial=0))):
        raise ValueError("strain tensor must be symmetric")
    return phi, E
