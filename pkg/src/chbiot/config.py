"""Simulation configuration: sectioned ``key = value`` files.

Sections are ``[domain]``, ``[discretization]``, ``[material]``,
``[regularization]``, ``[sources]``, ``[initial]`` and ``[output]``.  Every
key has a default except ``[domain] lengths``.  :func:`dump_config` writes
every key in a fixed order, so ``dump(load(dump(cfg)))`` is byte-identical.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields, replace

from .basis import Domain
from .chflow import SCHEMES
from .errors import ContractViolation
from .material import (
    DoubleWell,
    ElasticLaw,
    Eigenstrain,
    IsotropicTensor,
    MaterialModel,
    ScalarCoefficient,
    SourceSet,
    ZeroPotential,
)
from .model import Model

SECTIONS = ("domain", "discretization", "material", "regularization", "sources", "initial", "output")
REQUIRED = {"domain": ("lengths",)}


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (section, key, parser); defaults live on SimConfig
_SCHEMA = (
    ("domain", "lengths", _floats),
    ("discretization", "k", int),
    ("discretization", "grid", int),
    ("discretization", "dt", float),
    ("discretization", "n_steps", int),
    ("discretization", "scheme", str),
    ("discretization", "picard_tol", float),
    ("discretization", "picard_max_iter", int),
    ("discretization", "omega", float),
    ("discretization", "keep_every", int),
    ("material", "potential", str),
    ("material", "alpha_dw", float),
    ("material", "m_lower", float),
    ("material", "m_upper", float),
    ("material", "kappa_lower", float),
    ("material", "kappa_upper", float),
    ("material", "M_lower", float),
    ("material", "M_upper", float),
    ("material", "alpha_lower", float),
    ("material", "alpha_upper", float),
    ("material", "C_mu_lower", float),
    ("material", "C_mu_upper", float),
    ("material", "C_lam_lower", float),
    ("material", "C_lam_upper", float),
    ("material", "nu_mu_lower", float),
    ("material", "nu_mu_upper", float),
    ("material", "nu_lam_lower", float),
    ("material", "nu_lam_upper", float),
    ("material", "t0", float),
    ("regularization", "eps", float),
    ("regularization", "rho", float),
    ("regularization", "delta", float),
    ("regularization", "stabilization", float),
    ("sources", "r_amp", float),
    ("sources", "r_rate", float),
    ("sources", "s0", float),
    ("sources", "s_phi", float),
    ("sources", "s_tr", float),
    ("sources", "s_theta", float),
    ("sources", "s_max", float),
    ("sources", "f", _floats),
    ("sources", "g", _floats),
    ("initial", "phi", str),
    ("initial", "phi_amplitude", float),
    ("initial", "phi_value", float),
    ("initial", "phi_mode", int),
    ("initial", "phi_modes", int),
    ("initial", "phi_width", float),
    ("initial", "phi_position", float),
    ("initial", "seed", int),
    ("initial", "smooth", _bool),
    ("initial", "theta", str),
    ("initial", "theta_amplitude", float),
    ("initial", "theta_mode", int),
    ("output", "directory", str),
    ("output", "snapshot_every", int),
)


@dataclass(frozen=True)
class SimConfig:
    lengths: tuple
    k: int = 16
    grid: int = 0
    dt: float = 1e-4
    n_steps: int = 200
    scheme: str = "imex"
    picard_tol: float = 1e-10
    picard_max_iter: int = 30
    omega: float = 1.0
    keep_every: int = 10
    potential: str = "double-well"
    alpha_dw: float = 0.25
    m_lower: float = 0.5
    m_upper: float = 1.0
    kappa_lower: float = 0.5
    kappa_upper: float = 1.0
    M_lower: float = 1.0
    M_upper: float = 1.5
    alpha_lower: float = 0.2
    alpha_upper: float = 0.4
    C_mu_lower: float = 1.0
    C_mu_upper: float = 1.5
    C_lam_lower: float = 0.5
    C_lam_upper: float = 1.0
    nu_mu_lower: float = 0.1
    nu_mu_upper: float = 0.2
    nu_lam_lower: float = 0.05
    nu_lam_upper: float = 0.1
    t0: float = 0.05
    eps: float = 0.1
    rho: float = 1e-6
    delta: float = 0.0
    stabilization: float = -1.0
    r_amp: float = 0.0
    r_rate: float = 1.0
    s0: float = 0.0
    s_phi: float = 0.0
    s_tr: float = 0.0
    s_theta: float = 0.0
    s_max: float = 1.0
    f: tuple = (0.0, 0.0)
    g: tuple = (0.0, 0.0)
    phi: str = "random-band-limited"
    phi_amplitude: float = 0.5
    phi_value: float = 0.0
    phi_mode: int = 2
    phi_modes: int = 8
    phi_width: float = 0.1
    phi_position: float = 0.5
    seed: int = 20240611
    smooth: bool = True
    theta: str = "single-mode"
    theta_amplitude: float = 0.1
    theta_mode: int = 1
    directory: str = "output"
    snapshot_every: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def dim(self) -> int:
        return len(self.lengths)

    def replace(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    def digest(self) -> str:
        return hashlib.sha256(dump_config(self).encode()).hexdigest()


_BOUNDS = (
    ("m", "A7"),
    ("kappa", "A8"),
    ("M", "A9"),
    ("alpha", "A9"),
    ("C_mu", "A3"),
    ("C_lam", "A3"),
    ("nu_mu", "A4"),
    ("nu_lam", "A4"),
)


def validate(cfg: SimConfig) -> None:
    """Field-level checks; material contracts are checked again when the model is built."""
    if len(cfg.lengths) not in (1, 2) or min(cfg.lengths) <= 0:
        raise ContractViolation("A1", "lengths: need one or two positive edge lengths")
    for name in ("k", "n_steps", "picard_max_iter", "keep_every"):
        if getattr(cfg, name) < 1:
            raise ValueError(f"{name} must be at least 1")
    if cfg.grid < 0:
        raise ValueError("grid must be non-negative (0 selects the default)")
    if not cfg.dt > 0:
        raise ValueError("dt must be positive")
    if not cfg.picard_tol > 0:
        raise ValueError("picard_tol must be positive")
    if not 0.0 < cfg.omega <= 1.0:
        raise ValueError("omega must lie in (0, 1]")
    if cfg.scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if cfg.potential not in ("double-well", "zero"):
        raise ValueError("potential must be 'double-well' or 'zero'")
    if not cfg.eps > 0:
        raise ValueError("eps must be positive")
    if cfg.rho < 0:
        raise ValueError("rho must be non-negative")
    if cfg.delta < 0:
        raise ValueError("delta must be non-negative")
    if not cfg.alpha_dw > 0:
        raise ContractViolation("A2", "alpha_dw must be positive")
    for prefix, tag in _BOUNDS:
        lo, hi = getattr(cfg, f"{prefix}_lower"), getattr(cfg, f"{prefix}_upper")
        if lo > hi:
            raise ContractViolation(tag, f"{prefix}_lower = {lo} exceeds {prefix}_upper = {hi}")
    for prefix, tag in (("m", "A7"), ("kappa", "A8"), ("M", "A9")):
        if not getattr(cfg, f"{prefix}_lower") > 0:
            raise ContractViolation(tag, f"{prefix}_lower must be positive")
    if cfg.alpha_lower < 0:
        raise ContractViolation("A9", "alpha_lower must be non-negative")
    if cfg.s_max < 0:
        raise ContractViolation("A6", "s_max must be non-negative")


def load_config(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def parse_config(text: str, source: str = "<string>") -> SimConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValueError(f"{source}: parse error: {exc}") from exc

    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise ValueError(f"{source}: unknown section(s) {sorted(unknown)}")
    for sec, keys in REQUIRED.items():
        if not parser.has_section(sec):
            raise ValueError(f"{source}: missing section [{sec}] with required key(s): {', '.join(keys)}")
        missing = [key for key in keys if not parser.has_option(sec, key)]
        if missing:
            raise ValueError(f"{source}: section [{sec}] is missing required key(s): {', '.join(missing)}")

    known = {(sec, key) for sec, key, _ in _SCHEMA}
    for sec in parser.sections():
        for key in parser[sec]:
            if (sec, key) not in known:
                raise ValueError(f"{source}: unknown key {key!r} in [{sec}]")

    values = {}
    for sec, key, conv in _SCHEMA:
        if parser.has_option(sec, key):
            raw = parser.get(sec, key)
            try:
                values[key] = conv(raw)
            except ValueError as exc:
                line = _line_of(text, sec, key)
                raise ValueError(f"{source}, line {line}: [{sec}] {key} = {raw!r}: {exc}") from exc
    return SimConfig(**values)


def _line_of(text: str, section: str, key: str) -> int:
    """1-based line of ``key`` inside ``[section]`` (0 if not found)."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.partition("=")[0].strip() == key:
            return i
    return 0


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def dump_config(cfg: SimConfig) -> str:
    lines = []
    for sec in SECTIONS:
        lines.append(f"[{sec}]")
        for s, key, _ in _SCHEMA:
            if s == sec:
                lines.append(f"{key} = {_format(getattr(cfg, key))}")
        lines.append("")
    return "\n".join(lines)


def default_config(dim: int = 1, **kw) -> SimConfig:
    return SimConfig(lengths=(1.0,) * dim, **kw)


# -- builders ----------------------------------------------------------------


def _coef(cfg, prefix):
    return ScalarCoefficient(getattr(cfg, f"{prefix}_lower"), getattr(cfg, f"{prefix}_upper"))


def build_material(cfg: SimConfig) -> MaterialModel:
    potential = DoubleWell(cfg.alpha_dw) if cfg.potential == "double-well" else ZeroPotential()
    elastic = ElasticLaw(
        IsotropicTensor(_coef(cfg, "C_mu"), _coef(cfg, "C_lam")),
        IsotropicTensor(_coef(cfg, "nu_mu"), _coef(cfg, "nu_lam")),
        Eigenstrain(cfg.t0),
    )
    sources = SourceSet(
        r_amp=cfg.r_amp, r_rate=cfg.r_rate, s0=cfg.s0, s_phi=cfg.s_phi, s_tr=cfg.s_tr,
        s_theta=cfg.s_theta, s_max=cfg.s_max,
        body_force=tuple(cfg.f) + (0.0,) * (2 - len(cfg.f)),
        traction=tuple(cfg.g) + (0.0,) * (2 - len(cfg.g)),
    )
    return MaterialModel(
        potential=potential,
        mobility=_coef(cfg, "m"),
        permeability=_coef(cfg, "kappa"),
        compressibility=_coef(cfg, "M"),
        biot=_coef(cfg, "alpha"),
        elastic=elastic,
        sources=sources,
        dim=cfg.dim,
    )


def build_model(cfg: SimConfig) -> Model:
    stab = None if cfg.stabilization < 0 else cfg.stabilization
    return Model.build(
        Domain(tuple(cfg.lengths)),
        cfg.k,
        build_material(cfg),
        grid=cfg.grid or None,
        eps=cfg.eps,
        rho=cfg.rho,
        delta=cfg.delta,
        stabilization=stab,
    )


def build_initial(cfg: SimConfig, model: Model | None = None):
    """Initial :class:`SystemState` from the ``[initial]`` presets."""
    from .initdata import phi_preset, prepare_initial, theta_preset

    model = build_model(cfg) if model is None else model
    phi0 = phi_preset(cfg.phi, model, amplitude=cfg.phi_amplitude, mode=cfg.phi_mode, value=cfg.phi_value,
                      n_modes=cfg.phi_modes, seed=cfg.seed, width=cfg.phi_width, position=cfg.phi_position)
    theta0 = theta_preset(cfg.theta, model, amplitude=cfg.theta_amplitude, mode=cfg.theta_mode)
    return prepare_initial(model, phi0, theta0, smooth=cfg.smooth)


def field_names() -> list[str]:
    return [f.name for f in fields(SimConfig)]
