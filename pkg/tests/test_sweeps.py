import io

import numpy as np
import pytest

from chbiot.config import default_config
from chbiot.sweeps import (
    SweepTable,
    decoupled_config,
    delta_sweep,
    difference_table,
    dt_refinement,
    fitted_order,
    k_refinement,
    observation_quadrature,
    pure_diffusion_config,
    rho_sweep,
)


def test_difference_table_on_synthetic_members():
    obs = observation_quadrature((1.0,), 16)
    vals = [1e-1, 1e-2, 1e-3, 1e-4]
    base = np.ones(obs.size)
    results = [{f: v * base for f in ("phi", "theta", "p", "u")} for v in vals]
    table = difference_table("rho", vals, results, obs)
    assert all(table.monotone.values())
    assert np.allclose(table.orders["phi"], 1.0)
    assert np.isclose(fitted_order(table), 1.0)


def test_table_csv_layout():
    t = SweepTable("dt", [0.1, 0.05, 0.025])
    for f in ("phi", "theta", "p", "u"):
        t.diffs[f] = np.array([2.0, 1.0])
        t.orders[f] = np.array([1.0])
    buf = io.StringIO()
    t.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("dt_member,dt_next,diff_phi")
    assert len(lines) == 3 and lines[1].endswith("nan,nan,nan,nan")


def test_list_validation():
    cfg = pure_diffusion_config(1, n_steps=2)
    with pytest.raises(ValueError, match="at least 3"):
        rho_sweep(cfg, [1e-3, 1e-4])
    with pytest.raises(ValueError, match="strictly decreasing"):
        delta_sweep(cfg, [0.1, 0.2])
    with pytest.raises(ValueError, match="increasing"):
        k_refinement(cfg, [4, 3])
    with pytest.raises(ValueError, match="divide"):
        dt_refinement(cfg, [3e-3, 7e-4])


def test_dt_refinement_first_order_imex():
    cfg = pure_diffusion_config(1, dt=4e-3, n_steps=10)
    table = dt_refinement(cfg, [4e-3, 2e-3, 1e-3])
    assert 0.8 <= fitted_order(table) <= 1.2


def test_k_refinement_converges():
    cfg = decoupled_config(1, k=8, n_steps=20, phi="single-mode", phi_mode=3, theta="single-mode")
    table = k_refinement(cfg, [6, 8, 12])
    # the double well couples modes, so truncation error decays spectrally fast rather than vanishing
    d = table.diffs["phi"]
    assert d[1] < 1e-2 * d[0]
    assert table.values == [6, 8, 12]


def test_parallel_members_match_serial():
    cfg = pure_diffusion_config(1, n_steps=3)
    a = delta_sweep(cfg.replace(alpha_lower=0.2, alpha_upper=0.2), [0.2, 0.1])
    b = delta_sweep(cfg.replace(alpha_lower=0.2, alpha_upper=0.2), [0.2, 0.1], workers=2)
    for f in a.diffs:
        assert np.array_equal(a.diffs[f], b.diffs[f])


def test_rho_sweep_on_small_problem_runs():
    cfg = default_config(1, k=8, n_steps=10)
    table = rho_sweep(cfg, [1e-6, 1e-7, 1e-8])
    assert set(table.diffs) == {"phi", "theta", "p", "u"}
    assert all(np.all(np.isfinite(d)) for d in table.diffs.values())
