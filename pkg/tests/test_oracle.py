import numpy as np
import pytest

from chbiot.chflow import compute_H_mu, compute_H_p
from chbiot.config import build_initial, build_model, default_config
from chbiot.coupling import SystemState, picard_step
from chbiot.elasticity import assemble_fstar, assemble_operators
from chbiot.oracle import DenseOracle, audit_step, dense_weak_residual, fd_variational_derivative
from chbiot.verify import random_state


def test_fd_derivative_of_quadratic_is_exact():
    F = lambda a, c, u: float(a @ a + 3 * c @ c + np.sum(u**2))  # noqa: E731
    state = (np.array([1.0, 2.0]), np.array([0.5]), np.array([[0.25, -1.0]]))
    assert np.isclose(fd_variational_derivative(F, state, "a", 1), 4.0)
    assert np.isclose(fd_variational_derivative(F, state, "c", 0), 3.0)
    assert np.isclose(fd_variational_derivative(F, state, "u", 1), -2.0)
    with pytest.raises(ValueError):
        fd_variational_derivative(F, state, "a", 0, h=0.0)


def test_fd_does_not_mutate_state():
    a = np.ones(3)
    fd_variational_derivative(lambda a, c, u: float(a.sum()), (a, a, a), "a", 0)
    assert np.all(a == 1.0)


@pytest.mark.parametrize("dim", [1, 2])
def test_double_resolution_agreement_on_random_states(dim):
    model = build_model(default_config(dim, k=12 if dim == 1 else 10, rho=1e-3))
    oracle = DenseOracle(model)
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(20):
        a, c, u = random_state(model, rng)
        b, d = compute_H_mu(a, c, u, model), compute_H_p(a, c, u, model)
        ops = assemble_operators(model.Z.to_nodes(a), model)
        B, C = oracle.operators(a)
        pairs = [
            (b, oracle.H_mu(a, c, u)),
            (d, oracle.H_p(a, c, u)),
            (ops.B, B),
            (ops.C, C),
            (assemble_fstar(a, c, d, model), oracle.fstar(a, c, d)),
        ]
        for mine, ref in pairs:
            worst = max(worst, np.abs(mine - ref).max() / np.abs(ref).max())
    assert worst <= 1e-9


@pytest.mark.parametrize("scheme", ["imex", "convex"])
def test_solver_step_passes_audit_and_corruption_is_caught(scheme, model1d):
    cfg = default_config(1, k=12, scheme=scheme)
    s0 = build_initial(cfg, model1d)
    s1, _ = picard_step(s0, cfg.dt, tol=1e-13, scheme=scheme)
    oracle = DenseOracle(model1d)
    assert max(audit_step(s1, s0, cfg.dt, scheme, oracle).values()) <= 1e-8

    a = s1.a.copy()
    a[3] += 1e-6
    bad = SystemState.from_coefficients(a, s1.c, s1.u, model1d, s1.time)
    assert audit_step(bad, s0, cfg.dt, scheme, oracle)["phi"] > 1e-6


def test_single_residual_entry_point(model1d):
    cfg = default_config(1, k=12)
    s0 = build_initial(cfg, model1d)
    s1, _ = picard_step(s0, cfg.dt, tol=1e-13)
    r = dense_weak_residual(s1, 2, "mu", s0, cfg.dt)
    assert abs(r) <= 1e-8 * np.abs(s1.b).max()
