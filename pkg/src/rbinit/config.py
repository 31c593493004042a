"""Run configuration: JSON file plus command-line overrides.

Angles are degrees in the file (granularities in deg, heading variance bound
in deg^2); they are converted to radians when the filter objects are built.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from rbinit.initializer import BaseHypotheses, InitializerConfig
from rbinit.sim.harness import DEFAULT_GRANULARITIES, SimSettings
from rbinit.sim.scenario import Scenario, build_default_scenario, load_scenario, static_scenario


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: Optional[str] = None
    static_agent: bool = False
    gamma: float = 0.1
    alpha: float = 1.2
    gamma_cov: list = field(default_factory=lambda: [1.0, 1.0, 1.0, 100.0])
    sigma: Optional[float] = None
    heights: list = field(default_factory=lambda: [-0.5, 0.0, 0.5])
    height_weights: Optional[list] = None
    range_offsets: list = field(default_factory=lambda: [-1.0, 0.0, 1.0])
    bearing_granularity_deg: float = 11.25
    heading_granularity_deg: float = 11.25
    heading_weights: Optional[list] = None
    granularities_deg: list = field(default_factory=lambda: list(DEFAULT_GRANULARITIES))
    latch_termination: bool = False
    gaussian_table: bool = False
    seed: int = 0
    realizations: int = 100
    oracle_realizations: int = 50
    oracle_particles: int = 10000
    workers: int = 1
    out: str = "out"

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        cfg = cls(**data)
        if cfg.scenario is not None and not Path(cfg.scenario).is_absolute():
            cfg.scenario = str((path.parent / cfg.scenario).resolve())
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    # builders ------------------------------------------------------------

    def build_scenario(self) -> Scenario:
        if self.scenario is None:
            sc = build_default_scenario()
        else:
            p = Path(self.scenario)
            if not p.is_file():
                raise ConfigError(f"scenario file not found: {p}")
            try:
                sc = load_scenario(p)
            except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{p}: bad scenario ({exc})") from exc
        return static_scenario(sc) if self.static_agent else sc

    def build_base(self, granularity_deg: float | None = None) -> BaseHypotheses:
        b = self.bearing_granularity_deg if granularity_deg is None else granularity_deg
        h = self.heading_granularity_deg if granularity_deg is None else granularity_deg
        return BaseHypotheses(
            heights=tuple(self.heights),
            range_offsets=tuple(self.range_offsets),
            bearing_granularity=math.radians(b),
            heading_granularity=math.radians(h),
            height_weights=None if self.height_weights is None else tuple(self.height_weights),
            heading_weights=None if self.heading_weights is None else tuple(self.heading_weights),
        )

    def build_init(self) -> InitializerConfig:
        gc = list(self.gamma_cov)
        if len(gc) != 4:
            raise ConfigError("gamma_cov needs 4 entries")
        gc[3] = math.radians(math.sqrt(gc[3])) ** 2 if gc[3] > 0 else gc[3]
        return InitializerConfig(gamma=self.gamma, alpha=self.alpha, gamma_cov=tuple(gc),
                                 latch_termination=self.latch_termination)

    def build_settings(self) -> SimSettings:
        return SimSettings(base=self.build_base(), init=self.build_init(), sigma=self.sigma,
                           gaussian_table=self.gaussian_table)

    def validate(self) -> None:
        """Build every derived object once so bad values surface as :class:`ConfigError`."""
        try:
            self.build_settings()
            for g in self.granularities_deg:
                self.build_base(float(g))
            if self.sigma is not None and not self.sigma > 0:
                raise ValueError("sigma must be positive")
            for name in ("realizations", "oracle_realizations", "oracle_particles", "workers"):
                if int(getattr(self, name)) < 1:
                    raise ValueError(f"{name} must be at least 1")
            if int(self.seed) < 0:
                raise ValueError("seed must be non-negative")
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        self.build_scenario()
