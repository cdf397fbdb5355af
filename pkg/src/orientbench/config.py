"""Benchmark defaults and INI-style configuration files.

Every tunable default lives in one of the section dataclasses below.  A
config file mirrors them section by section; unknown keys are rejected so
typos do not silently fall back to defaults::

    [wahba]
    n_points = 100
    noise_sigma = 0.0

    [quad]
    mass = 1.0
    inertia = 0.01, 0.01, 0.02
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .dynamics import QuadrotorParams
from .ilqr import ILQROptions


@dataclass
class WahbaConfig:
    replicates: int = 200
    n_points: int = 100
    noise_sigma: float = 0.0
    max_iters: int = 50
    tol: float = 1e-13


@dataclass
class FrameConfig:
    replicates: int = 200
    horizon_s: float = 4.0
    dt: float = 0.02
    w_u: float = 0.01
    w_R: float = 100.0
    w_omega: float = 10.0
    u_init_sigma: float = 0.1
    max_iters: int = 40  # SO3 needs <= 6; stalled Euler runs stop here within the time budget
    regularization: str = "control"
    mu_init: float = 1e-6


@dataclass
class QuadConfig:
    replicates: int = 20
    horizon_s: float = 2.0
    dt: float = 0.01
    mass: float = 1.0
    inertia: tuple[float, float, float] = (0.01, 0.01, 0.02)
    g: float = 9.81
    include_gravity: bool = True
    semi_implicit: bool = True
    w_R: float = 10.0
    w_u: float = 1e-3
    w_p: float = 100.0
    thrust_max: float = 40.0
    torque_max: tuple[float, float, float] = (5.0, 5.0, 5.0)
    u_init_sigma: float = 0.1  # thrust
    torque_init_sigma: float = 1e-3
    max_iters: int = 30  # keeps 20 replicates x 5 charts inside ten minutes on one core
    # the box is active for long stretches of the flip; damping the value
    # Hessian (not just Q_uu) keeps the feedback gains from overshooting
    regularization: str = "state"
    mu_init: float = 1.0

    def params(self) -> QuadrotorParams:
        return QuadrotorParams(
            mass=self.mass,
            inertia=np.diag(self.inertia),
            g=self.g,
            dt=self.dt,
            include_gravity=self.include_gravity,
            semi_implicit=self.semi_implicit,
        )


@dataclass
class ILQRConfig:
    tol: float = 1e-7
    mu_min: float = 1e-9
    mu_max: float = 1e9
    mu_increase: float = 10.0
    mu_decrease: float = 0.5
    c1: float = 1e-4
    line_search_steps: int = 11
    max_restarts: int = 3
    restart_sigma: float = 1e-3
    boxqp_tol: float = 1e-8
    boxqp_max_iters: int = 100

    def options(self, scenario, seed: int = 0) -> ILQROptions:
        """Solver options for a scenario section (``FrameConfig`` or ``QuadConfig``)."""
        kwargs = asdict(self)
        steps = kwargs.pop("line_search_steps")
        return ILQROptions(
            max_iters=scenario.max_iters,
            regularization=scenario.regularization,
            mu_init=scenario.mu_init,
            alphas=tuple(2.0**-i for i in range(steps)),
            seed=seed,
            **kwargs,
        )


@dataclass
class BenchConfig:
    seed: int = 0
    # wall-clock columns make output depend on the machine; off by default
    record_wall_time: bool = False
    wahba: WahbaConfig = field(default_factory=WahbaConfig)
    frame: FrameConfig = field(default_factory=FrameConfig)
    quad: QuadConfig = field(default_factory=QuadConfig)
    ilqr: ILQRConfig = field(default_factory=ILQRConfig)


_SECTIONS = ("wahba", "frame", "quad", "ilqr")


def _parse(raw: str, current):
    if isinstance(current, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(current, tuple):
        return tuple(float(p) for p in raw.split(","))
    return type(current)(raw.strip())


def _apply(target, items, where: str) -> None:
    known = {f.name for f in fields(target)} - set(_SECTIONS)
    for key, raw in items:
        if key not in known:
            raise KeyError(f"unknown key {key!r} in [{where}]")
        setattr(target, key, _parse(raw, getattr(target, key)))


def load_config(path: str | Path | None = None) -> BenchConfig:
    """Defaults, overridden by ``path`` when given."""
    cfg = BenchConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep case: w_R
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    _apply(cfg, parser.defaults().items(), "DEFAULT")
    for section in parser.sections():
        if section == "bench":
            _apply(cfg, parser.items(section, raw=True), section)
            continue
        if section not in _SECTIONS:
            raise KeyError(f"unknown section [{section}]")
        own = [(k, v) for k, v in parser.items(section, raw=True) if k not in parser.defaults()]
        _apply(getattr(cfg, section), own, section)
    return cfg


def dump_config(cfg: BenchConfig) -> str:
    """INI text reproducing ``cfg``."""
    lines = ["[bench]", f"seed = {cfg.seed}", f"record_wall_time = {cfg.record_wall_time}", ""]
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        for f in fields(getattr(cfg, section)):
            value = getattr(getattr(cfg, section), f.name)
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        lines.append("")
    return "\n".join(lines)
