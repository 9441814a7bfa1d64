import numpy as np
import pytest

from chbiot.config import build_initial, build_model, default_config
from chbiot.coupling import SystemState, run
from chbiot.energy import (
    CSV_FIELDS,
    EnergyReport,
    dissipation,
    energy_components,
    free_energy,
    phase_mass,
    total_energy,
)


def test_zero_state_energy(plain_model1d):
    # psi(0)/eps = alpha_dw/eps on the unit interval; nothing else contributes
    F_gl, F_el, F_f = energy_components(np.zeros(8), np.zeros(8), np.zeros((1, 8)), plain_model1d)
    assert np.isclose(F_gl, 0.25 / plain_model1d.eps, rtol=1e-14)
    assert F_el == 0.0 and F_f == 0.0


def test_pure_phase_has_no_bulk_energy(plain_model1d):
    a = np.zeros(8)
    a[0] = 1.0  # phi == 1 on the unit interval
    assert abs(free_energy(a, np.zeros(8), np.zeros((1, 8)), plain_model1d)) <= 1e-13


def test_single_mode_gradient_energy(plain_model1d):
    m = plain_model1d.with_params(rho=1e-4)
    a = np.zeros(8)
    a[2] = 0.01
    lam = m.Z.eigenvalues[2]
    F_gl, _, _ = energy_components(a, np.zeros(8), np.zeros((1, 8)), m)
    psi_part = m.quad.integrate(m.material.psi(m.Z.to_nodes(a))) / m.eps
    assert np.isclose(F_gl - psi_part, 0.5 * (m.eps * lam + np.sqrt(m.rho) * lam**2) * 1e-4, rtol=1e-12)


def test_fluid_energy_single_mode(plain_model1d):
    c = np.zeros(8)
    c[1] = 0.2
    m = plain_model1d.with_params(rho=0.01)
    _, _, F_f = energy_components(np.zeros(8), c, np.zeros((1, 8)), m)
    assert np.isclose(F_f, 0.5 * 0.04 + 0.5 * 0.01 * m.Y.eigenvalues[1] * 0.04, rtol=1e-12)


def test_phase_mass(plain_model1d):
    a = np.zeros(8)
    a[0] = 3.0
    assert phase_mass(a, plain_model1d) == 3.0


def test_dissipation_nonnegative_and_zero_at_rest(model1d):
    cfg = default_config(1, k=12, n_steps=5)
    init = build_initial(cfg, model1d)
    traj = run(cfg, init)
    for r in traj.reports[1:]:
        assert r.diss_mu >= 0 and r.diss_p >= 0 and r.diss_u >= 0
    zero = SystemState.zeros(model1d)
    assert dissipation(zero, zero, 1e-3, model1d) == (0.0, 0.0, 0.0)


def test_report_row_round_trip(model2d):
    rep = total_energy(SystemState.zeros(model2d), model2d)
    row = rep.row()
    assert len(row) == len(CSV_FIELDS)
    assert row[CSV_FIELDS.index("F_total")] == rep.F_total
    back = EnergyReport.from_row([repr(v) for v in row])
    assert back == rep


@pytest.mark.parametrize("scheme", ["imex", "convex"])
def test_energy_ledger_second_order(scheme):
    """F(t_{n+1}) - F(t_n) + dt * dissipation shrinks like dt^2 once the initial layer has passed."""
    out = []
    for dt in (2e-4, 1e-4):
        cfg = default_config(1, k=12, dt=dt, n_steps=int(round(0.01 / dt)), scheme=scheme)
        traj = run(cfg, build_initial(cfg))
        F = np.array([r.F_total for r in traj.reports])
        D = np.array([r.dissipation for r in traj.reports])
        ledger = np.diff(F) + dt * D[1:]
        out.append(np.abs(ledger[len(ledger) // 2:]).max())
    assert 3.0 <= out[0] / out[1] <= 5.0
