"""Parameter-limit studies: regularisation, mollifier width, basis size, time step.

Every member of a sweep is a full simulation from its own configuration.
Members are compared at the final time on one Gauss observation grid that
does not depend on the member, using quadrature L2 norms.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import Domain, Quadrature
from .config import SimConfig, build_initial, build_model
from .coupling import run
from .mollifier import Mollifier

FIELDS = ("phi", "theta", "p", "u")


@dataclass
class SweepTable:
    """Pairwise final-time differences between consecutive members."""

    parameter: str
    values: list
    diffs: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)

    @property
    def monotone(self) -> dict:
        """Per field: is the difference sequence strictly decreasing."""
        return {f: bool(np.all(np.diff(d) < 0)) for f, d in self.diffs.items()}

    def rows(self):
        for i in range(len(self.values) - 1):
            row = {"member": self.values[i], "next": self.values[i + 1]}
            for f in FIELDS:
                row[f"diff_{f}"] = self.diffs[f][i]
                orders = self.orders.get(f)
                row[f"order_{f}"] = orders[i - 1] if orders is not None and i > 0 else float("nan")
            yield row

    def write_csv(self, path_or_stream):
        cols = ["member", "next"] + [f"diff_{f}" for f in FIELDS] + [f"order_{f}" for f in FIELDS]

        def _write(fh):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.parameter + "_" + c if c in ("member", "next") else c for c in cols])
            for row in self.rows():
                w.writerow([format(float(row[c]), ".17g") for c in cols])

        if hasattr(path_or_stream, "write"):
            _write(path_or_stream)
        else:
            with open(path_or_stream, "w", newline="") as fh:
                _write(fh)


def observation_quadrature(lengths, points: int | None = None) -> Quadrature:
    domain = Domain(tuple(lengths))
    if points is None:
        points = 128 if domain.dim == 1 else 40
    return Quadrature.gauss(domain, (points,) * domain.dim)


def final_fields(cfg: SimConfig, obs: Quadrature) -> dict:
    """Run one member and evaluate its final fields on the observation grid."""
    model = build_model(cfg)
    traj = run(cfg, build_initial(cfg, model))
    s = traj.final
    x = obs.nodes
    Zx = model.Z.evaluate(x)
    Yx = model.Y.evaluate(x)
    return {
        "phi": s.a @ Zx,
        "theta": s.c @ Yx,
        "p": s.d @ Yx,
        "u": s.u @ Yx,
    }


def _member(args):
    cfg, obs_points = args
    return final_fields(cfg, observation_quadrature(cfg.lengths, obs_points))


def run_members(configs, obs_points=None, workers: int = 1) -> list[dict]:
    """Final fields of every member, serially or in worker processes."""
    jobs = [(cfg, obs_points) for cfg in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_member, jobs))
    return [_member(job) for job in jobs]


def _l2(diff, w) -> float:
    # vector fields arrive as (n, N); sum the component norms
    return float(np.sqrt(np.sum(np.atleast_2d(diff) ** 2 @ w)))


def difference_table(parameter, values, results, obs: Quadrature, scale=None) -> SweepTable:
    """Differences of consecutive members; orders use ``scale`` (defaults to ``values``)."""
    w = obs.weights
    table = SweepTable(parameter, list(values))
    for f in FIELDS:
        table.diffs[f] = np.array([_l2(results[i + 1][f] - results[i][f], w) for i in range(len(results) - 1)])
    scale = np.asarray(values if scale is None else scale, dtype=float)
    for f in FIELDS:
        d = table.diffs[f]
        with np.errstate(divide="ignore", invalid="ignore"):
            table.orders[f] = np.log(d[:-1] / d[1:]) / np.log(scale[:-2] / scale[1:-1]) if len(d) > 1 else np.array([])
    return table


def _check_descending(values, name, minimum=2):
    values = [float(v) for v in values]
    if len(values) < minimum:
        raise ValueError(f"{name} needs at least {minimum} entries")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly decreasing")
    return values


def rho_sweep(config: SimConfig, rho_list, obs_points=None, workers: int = 1) -> SweepTable:
    rhos = _check_descending(rho_list, "rho_list", minimum=3)
    if min(rhos) <= 0:
        raise ValueError("rho_list entries must be positive")
    cfgs = [config.replace(rho=r) for r in rhos]
    obs = observation_quadrature(config.lengths, obs_points)
    return difference_table("rho", rhos, run_members(cfgs, obs_points, workers), obs)


def delta_sweep(config: SimConfig, delta_list, obs_points=None, workers: int = 1) -> SweepTable:
    deltas = _check_descending(delta_list, "delta_list")
    cfgs = [config.replace(delta=d) for d in deltas]
    obs = observation_quadrature(config.lengths, obs_points)
    return difference_table("delta", deltas, run_members(cfgs, obs_points, workers), obs)


def k_refinement(config: SimConfig, k_list, obs_points=None, workers: int = 1) -> SweepTable:
    ks = [int(k) for k in k_list]
    if len(ks) < 2 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be strictly increasing with at least 2 entries")
    cfgs = [config.replace(k=k, grid=0) for k in ks]
    obs = observation_quadrature(config.lengths, obs_points)
    # difference in k shrinks as k grows: orders against 1/k
    return difference_table("k", ks, run_members(cfgs, obs_points, workers), obs, scale=1.0 / np.asarray(ks))


def dt_refinement(config: SimConfig, dt_list, obs_points=None, workers: int = 1) -> SweepTable:
    """Self-convergence at the fixed final time ``config.T``."""
    dts = _check_descending(dt_list, "dt_list")
    T = config.T
    cfgs = []
    for dt in dts:
        n = int(round(T / dt))
        if not np.isclose(n * dt, T, rtol=1e-12, atol=0):
            raise ValueError(f"dt = {dt} does not divide the final time {T}")
        cfgs.append(config.replace(dt=dt, n_steps=n))
    obs = observation_quadrature(config.lengths, obs_points)
    return difference_table("dt", dts, run_members(cfgs, obs_points, workers), obs)


def fitted_order(table: SweepTable, fields=("phi", "theta")) -> float:
    """Least-squares slope of log(difference) against log(parameter) over ``fields`` combined."""
    total = np.sqrt(sum(table.diffs[f] ** 2 for f in fields))
    x = np.log(np.asarray(table.values[:-1], dtype=float))
    return float(np.polyfit(x, np.log(total), 1)[0])


# -- standalone mollifier convergence -----------------------------------------


def mollifier_error(values, quad: Quadrature, deltas) -> np.ndarray:
    """``|mollify(f) - f|_{L2}`` for each width."""
    values = np.asarray(values, dtype=float)
    return np.array([np.sqrt(quad.integrate((Mollifier(d, quad).apply(values) - values) ** 2)) for d in deltas])


def mollifier_order(values, quad: Quadrature, deltas) -> float:
    err = mollifier_error(values, quad, deltas)
    return float(np.polyfit(np.log(deltas), np.log(err), 1)[0])


# -- reference configurations --------------------------------------------------


def pure_diffusion_config(dim: int = 1, **kw) -> SimConfig:
    """Linear, decoupled, constant-coefficient problem: every mode decays on its own."""
    base = dict(
        lengths=(1.0,) * dim, k=3, potential="zero", rho=0.0, delta=0.0, t0=0.0,
        m_lower=1.0, m_upper=1.0, kappa_lower=1.0, kappa_upper=1.0, M_lower=1.0, M_upper=1.0,
        alpha_lower=0.0, alpha_upper=0.0,
        C_mu_lower=1.0, C_mu_upper=1.0, C_lam_lower=1.0, C_lam_upper=1.0,
        nu_mu_lower=1.0, nu_mu_upper=1.0, nu_lam_lower=0.0, nu_lam_upper=0.0,
        phi="single-mode", phi_mode=2, phi_amplitude=1.0, smooth=False,
        theta="single-mode", theta_mode=1, theta_amplitude=1.0,
        dt=4e-3, n_steps=25,
    )
    base.update(kw)
    return SimConfig(**base)


def decoupled_config(dim: int = 1, **kw) -> SimConfig:
    """Cahn-Hilliard and fluid flow without elastic or pressure coupling."""
    base = dict(
        lengths=(1.0,) * dim, t0=0.0, alpha_lower=0.0, alpha_upper=0.0,
        C_mu_lower=1.0, C_mu_upper=1.0, C_lam_lower=1.0, C_lam_upper=1.0,
        nu_mu_lower=0.1, nu_mu_upper=0.1, nu_lam_lower=0.05, nu_lam_upper=0.05,
    )
    base.update(kw)
    return SimConfig(**base)
