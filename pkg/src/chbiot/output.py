"""Snapshot, energy-table and manifest files.

Floats are written with 17 significant digits so a read-back reproduces
them bit for bit.  Nothing time- or host-dependent goes into the files, so
identical configurations give byte-identical output.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import SimConfig, build_initial, build_model, dump_config
from .coupling import SystemState, Trajectory, run
from .energy import CSV_FIELDS, EnergyReport

_FMT = ".17g"


def _fmt(x) -> str:
    return format(float(x), _FMT)


def snapshot_columns(dim: int) -> list[str]:
    coords = ["x", "y"][:dim]
    return coords + ["phi", "mu", "theta", "p"] + ["u_x", "u_y"][:dim]


def write_snapshot(state: SystemState, path) -> Path:
    """Nodal values of every field as CSV, one row per quadrature node."""
    path = Path(path)
    model = state.model
    cols = snapshot_columns(model.dim)
    nodal = state.nodal()
    data = [model.quad.nodes[:, i] for i in range(model.dim)] + [nodal[c] for c in cols[model.dim:]]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in zip(*data):
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def read_snapshot(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, i] for i, name in enumerate(header)}


def write_energy_header(stream) -> None:
    csv.writer(stream, lineterminator="\n").writerow(CSV_FIELDS)


def write_energy_row(report: EnergyReport, stream) -> None:
    csv.writer(stream, lineterminator="\n").writerow([_fmt(v) for v in report.row()])


def read_energy(path) -> list[EnergyReport]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CSV_FIELDS:
        raise ValueError(f"{path}: unexpected energy header {rows[0]}")
    return [EnergyReport.from_row(r) for r in rows[1:]]


def write_manifest(path, cfg: SimConfig, files) -> Path:
    path = Path(path)
    manifest = {
        "code_version": __version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "files": sorted(str(f) for f in files),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_to_directory(cfg: SimConfig, directory=None) -> tuple[Trajectory, Path]:
    """Run ``cfg`` and write ``energy.csv``, snapshots, the echoed config and a manifest."""
    out = Path(cfg.directory if directory is None else directory)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg)
    initial = build_initial(cfg, model)
    written = []
    energy_path = out / "energy.csv"

    with open(energy_path, "w", newline="") as fh:
        write_energy_header(fh)

        def observer(step, state, report):
            write_energy_row(report, fh)
            every = cfg.snapshot_every
            if (every and step % every == 0) or step == cfg.n_steps:
                written.append(write_snapshot(state, out / f"snapshot_{step:06d}.csv").name)

        traj = run(cfg, initial, observer=observer)

    (out / "config.ini").write_text(dump_config(cfg))
    files = [energy_path.name, "config.ini", *written]
    write_manifest(out / "manifest.json", cfg, files)
    return traj, out
