"""Experiment configuration: a flat key = value text file plus overrides.

Every run writes the resolved configuration next to its outputs so a
study can be reproduced from the output directory alone.

Recognized keys (all optional, defaults shown by ``ExperimentConfig``):

    lam0, mu0          background Lame parameters
    bumps              residual-stress bumps "cx,cy,radius,amplitude;..."
                       (amplitude = peak stress entry of the bump)
    alpha, beta, gamma, delta   lossy-layer parameters
    h                  inclusion scale for the invariance command
    h_list             comma-separated decreasing scales for the study
    kappa              frequency
    n_max              traction-basis mode cutoff
    h_mesh             target mesh edge length
    order              element order, 1 or 2
    seed               seed for the alternative target medium
    out_dir            output directory
    workers            worker threads for per-scale runs
    rho_min, rho_max, rho_steps, r0, r1   resonance-scan grid
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from .errors import ConfigError
from .ntd import CloakConfig
from .residual import AiryPotential, Bump, ResidualStressField, airy_to_stress

__all__ = ["ExperimentConfig", "load_config", "dump_config"]


@dataclass(frozen=True)
class ExperimentConfig:
    lam0: float = 1.0
    mu0: float = 1.0
    bumps: Tuple[Tuple[float, float, float, float], ...] = ((0.5, 0.0, 0.3, 0.1),)
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    h: float = 0.4
    h_list: Tuple[float, ...] = (0.4, 0.2, 0.1)
    kappa: float = 1.0
    n_max: int = 8
    h_mesh: float = 0.08
    order: int = 2
    seed: int = 0
    out_dir: str = "out"
    workers: int = 1
    rho_min: float = 0.5
    rho_max: float = 20.0
    rho_steps: int = 20
    r0: float = 1.0
    r1: float = 2.0

    def validate(self) -> None:
        if self.mu0 <= 0.0 or 2.0 * self.lam0 + 2.0 * self.mu0 <= 0.0:
            raise ConfigError("background moduli fail strong convexity")
        if self.beta <= 0.0:
            raise ConfigError("beta must be strictly positive")
        if min(self.alpha, self.gamma, self.delta) <= 0.0:
            raise ConfigError("alpha, gamma, delta must be positive")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise ConfigError(f"h_list must be strictly decreasing: {self.h_list}")
        if not all(0.0 < h <= 0.5 for h in self.h_list):
            raise ConfigError("every h must lie in (0, 0.5]")
        if self.order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {self.order}")
        if self.n_max < 0 or self.h_mesh <= 0.0:
            raise ConfigError("need n_max >= 0 and h_mesh > 0")
        if not 0.0 < self.r0 < self.r1:
            raise ConfigError("need 0 < r0 < r1")
        for cx, cy, rad, _amp in self.bumps:
            if (cx * cx + cy * cy) ** 0.5 + rad >= 2.0:
                raise ConfigError(f"bump ({cx},{cy}) radius {rad} touches the boundary")

    def residual_field(self) -> ResidualStressField:
        if not self.bumps:
            return ResidualStressField.zero(2)
        pot = AiryPotential(
            tuple(Bump((cx, cy), rad, amp) for cx, cy, rad, amp in self.bumps), 2.0
        )
        return airy_to_stress(pot)

    def cloak_config(self, h: Optional[float] = None, seed: Optional[int] = None) -> CloakConfig:
        return CloakConfig.default(
            self.residual_field(),
            h=self.h if h is None else h,
            lam0=self.lam0,
            mu0=self.mu0,
            seed=seed,
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            delta=self.delta,
            kappa=self.kappa,
        )


def _format_value(key: str, value) -> str:
    if key == "bumps":
        return "; ".join(",".join(repr(float(v)) for v in b) for b in value)
    if key == "h_list":
        return ",".join(repr(float(h)) for h in value)
    return repr(value) if not isinstance(value, str) else value


def dump_config(cfg: ExperimentConfig, path) -> None:
    lines = [f"{k} = {_format_value(k, v)}" for k, v in asdict(cfg).items()]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "bumps":
        if not raw:
            return ()
        out = []
        for chunk in raw.split(";"):
            parts = [p for p in chunk.strip().split(",") if p]
            if len(parts) != 4:
                raise ConfigError(f"bump needs 4 numbers (cx,cy,radius,amplitude): {chunk!r}")
            out.append(tuple(float(p) for p in parts))
        return tuple(out)
    if key == "h_list":
        return tuple(float(p) for p in raw.split(",") if p.strip())
    if key == "out_dir":
        return raw
    if key in ("n_max", "order", "seed", "workers", "rho_steps"):
        return int(raw)
    return float(raw)


def load_config(path) -> ExperimentConfig:
    cfg = ExperimentConfig()
    known = set(asdict(cfg))
    updates = {}
    for ln_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln_no}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{ln_no}: unknown key {key!r}")
        updates[key] = _parse_value(key, raw)
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg
