import numpy as np
import pytest

from chbiot.chflow import (
    DAEState,
    compute_H_mu,
    compute_H_p,
    implicit_diagonals,
    mean_value_residual,
    mobility_matrix,
    ode_rhs,
    step_dae,
)
from chbiot.config import build_model
from chbiot.errors import StepRejected
from chbiot.oracle import DenseOracle
from chbiot.sweeps import pure_diffusion_config
from chbiot.verify import random_state


@pytest.mark.parametrize("fixture", ["model1d", "model2d"])
def test_algebraic_maps_match_dense_oracle(fixture, request):
    model = request.getfixturevalue(fixture)
    oracle = DenseOracle(model)
    rng = np.random.default_rng(11)
    for _ in range(3):
        a, c, u = random_state(model, rng)
        b = compute_H_mu(a, c, u, model)
        d = compute_H_p(a, c, u, model)
        assert np.abs(b - oracle.H_mu(a, c, u)).max() <= 1e-9 * np.abs(b).max()
        assert np.abs(d - oracle.H_p(a, c, u)).max() <= 1e-9 * np.abs(d).max()


def test_pure_diffusion_modes_decay_exactly_under_imex():
    model = build_model(pure_diffusion_config(1))
    lz, ly = model.Z.eigenvalues, model.Y.eigenvalues
    a = np.ones(model.k)
    c = np.ones(model.k)
    u = np.zeros((1, model.k))
    dt = 1e-3
    s = DAEState.from_coefficients(a, c, u, model)
    s1 = step_dae(s, u, dt, model, "imex")
    # with psi = 0 and unit coefficients the rates are eps lam^2 and lam
    assert np.allclose(s1.a, a / (1 + dt * model.eps * lz**2), rtol=1e-12, atol=1e-14)
    assert np.allclose(s1.c, c / (1 + dt * ly), rtol=1e-12)


def test_mass_of_phase_is_conserved_by_every_scheme(model1d):
    a, c, u = random_state(model1d, np.random.default_rng(2))
    for scheme in ("imex", "convex"):
        s = DAEState.from_coefficients(a, c, u, model1d)
        for _ in range(5):
            s = step_dae(s, u, 1e-4, model1d, scheme)
        assert abs(s.a[0] - a[0]) <= 1e-14 * (1 + abs(a[0]))


def test_rhs_phase_has_no_constant_component(model2d):
    a, c, u = random_state(model2d, np.random.default_rng(5))
    Fa, _ = ode_rhs(a, c, u, model2d)
    assert abs(Fa[0]) <= 1e-12 * np.abs(Fa).max()


def test_mobility_matrix_symmetric_semidefinite(model2d):
    a, _, _ = random_state(model2d, np.random.default_rng(6), amplitude=1.0)
    G = mobility_matrix(a, model2d)
    assert np.allclose(G, G.T, atol=1e-12 * np.abs(G).max())
    ev = np.linalg.eigvalsh(G)
    assert ev[0] >= -1e-10 * ev[-1]
    assert np.all(G[0] == 0) or np.abs(G[0]).max() <= 1e-12


def test_implicit_diagonals_nonnegative(model1d):
    La, Lc = implicit_diagonals(model1d)
    assert La[0] == 0.0 and np.all(La >= 0) and np.all(Lc > 0)


def test_mean_value_identity_holds(model1d):
    a, c, u = random_state(model1d, np.random.default_rng(8))
    s = DAEState.from_coefficients(a, c, u, model1d)
    assert mean_value_residual(s, u, model1d) <= 1e-12


def test_unknown_scheme_and_bad_step_rejected(model1d):
    a, c, u = random_state(model1d, np.random.default_rng(9))
    s = DAEState.from_coefficients(a, c, u, model1d)
    with pytest.raises(ValueError):
        step_dae(s, u, 1e-4, model1d, "euler")
    with pytest.raises(ValueError):
        step_dae(s, u, 0.0, model1d)
    with pytest.raises(StepRejected):
        step_dae(s, u, 1e-4, model1d, "imex", max_change=0.0)


def test_rk4_is_fourth_order_on_linear_modes():
    model = build_model(pure_diffusion_config(1))
    lz = model.Z.eigenvalues
    a = np.zeros(model.k)
    a[1] = 1.0
    c = np.zeros(model.k)
    u = np.zeros((1, model.k))
    T = 0.02
    errs = []
    for n in (10, 20):
        s = DAEState.from_coefficients(a, c, u, model)
        for _ in range(n):
            s = step_dae(s, u, T / n, model, "rk4")
        errs.append(abs(s.a[1] - np.exp(-model.eps * lz[1] ** 2 * T)))
    assert 3.5 <= np.log2(errs[0] / errs[1]) <= 4.5
