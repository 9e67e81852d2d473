"""Flat ``key = value`` experiment configuration."""
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .sensing import ChannelModel
from .throughput import SnrConstraint
from .traffic import SystemGeometry, TrafficModel

SWEEPABLE = (
    "eta",
    "t_sense_ms",
    "t_frame_ms",
    "alpha",
    "beta",
    "lambda_h",
    "lambda_chi",
    "lambda_g",
    "primary_snr_db",
    "secondary_snr_db",
    "p_p",
    "p_s",
    "gamma_s_db",
    "target_pd",
)


@dataclass(frozen=True)
class ExperimentConfig:
    t_samp_ms: float = 0.1
    t_sense_ms: float = 5.0
    t_frame_ms: float = 25.0
    alpha: float = 1.0
    beta: float = 1.0
    lambda_h: float = 1.0
    lambda_chi: float = 1.0
    lambda_g: float = 1.0
    primary_snr_db: float = 5.0
    secondary_snr_db: float = 20.0
    p_p: float = 1.0
    p_s: float = 1.0
    gamma_s_db: float = 5.0
    target_pd: float = 0.9
    mc_frames: int = 100_000
    seed: int = 0
    sweep_param: Optional[str] = None
    sweep_from: Optional[float] = None
    sweep_to: Optional[float] = None
    sweep_steps: Optional[int] = None
    output_path: Optional[str] = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"{f.name}: must be finite, got {value!r}")
        if not 0 < self.target_pd < 1:
            raise ConfigError(f"target_pd: must lie in (0, 1), got {self.target_pd!r}")
        if self.mc_frames < 1:
            raise ConfigError(f"mc_frames: must be >= 1, got {self.mc_frames!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed!r}")
        sweep = (self.sweep_from, self.sweep_to, self.sweep_steps)
        if self.sweep_param is None:
            if any(v is not None for v in sweep):
                raise ConfigError("sweep_param: sweep_from/sweep_to/sweep_steps given without a sweep parameter")
        else:
            if self.sweep_param not in SWEEPABLE:
                raise ConfigError(f"sweep_param: {self.sweep_param!r} is not sweepable; choose from {', '.join(SWEEPABLE)}")
            if any(v is None for v in sweep):
                raise ConfigError("sweep_param: sweep_from, sweep_to and sweep_steps are all required")
            if self.sweep_steps < 1:
                raise ConfigError(f"sweep_steps: must be >= 1, got {self.sweep_steps!r}")
        try:
            self.geometry()
        except DomainError as exc:
            raise ConfigError(f"t_samp_ms/t_sense_ms/t_frame_ms: {exc}") from None
        try:
            self.traffic()
        except DomainError as exc:
            raise ConfigError(f"alpha/beta: {exc}") from None
        try:
            self.channel()
        except DomainError as exc:
            raise ConfigError(f"channel: {exc}") from None

    def geometry(self) -> SystemGeometry:
        return SystemGeometry(t_samp=self.t_samp_ms * 1e-3, t_sense=self.t_sense_ms * 1e-3, t_frame=self.t_frame_ms * 1e-3)

    def traffic(self) -> TrafficModel:
        return TrafficModel(alpha=self.alpha, beta=self.beta)

    def channel(self) -> ChannelModel:
        return ChannelModel.from_snr_db(
            primary_snr_db=self.primary_snr_db,
            secondary_snr_db=self.secondary_snr_db,
            lambda_h=self.lambda_h,
            lambda_chi=self.lambda_chi,
            lambda_g=self.lambda_g,
            p_primary=self.p_p,
            p_secondary=self.p_s,
        )

    def constraint(self) -> SnrConstraint:
        return SnrConstraint.from_db(self.gamma_s_db)

    def sweep_values(self) -> list:
        if self.sweep_param is None:
            return []
        if self.sweep_steps == 1:
            return [float(self.sweep_from)]
        return [float(v) for v in np.linspace(self.sweep_from, self.sweep_to, self.sweep_steps)]

    def with_value(self, name: str, value) -> "ExperimentConfig":
        """Copy with one field replaced (and the sweep cleared)."""
        try:
            return dataclasses.replace(
                self, **{name: value, "sweep_param": None, "sweep_from": None, "sweep_to": None, "sweep_steps": None}
            )
        except ConfigError as exc:
            raise ConfigError(f"{name}={value!r}: {exc}") from None


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}
_INT_FIELDS = {"mc_frames", "seed", "sweep_steps"}
_STR_FIELDS = {"sweep_param", "output_path"}


def _convert(key, raw):
    if key in _STR_FIELDS:
        return raw
    try:
        if key in _INT_FIELDS:
            try:
                return int(raw)
            except ValueError:
                as_float = float(raw)  # allow 1e5
                if not as_float.is_integer():
                    raise
                return int(as_float)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def serialize_config(config: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {value!r}" if not isinstance(value, str) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
