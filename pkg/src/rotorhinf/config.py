"""Run configuration: a JSON document validated with pydantic.

Every section is optional and falls back to the library defaults.  Unknown
keys are rejected, and validation errors carry the dotted key path.
"""

import json
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .augmentation import (
    DEFAULT_EPS,
    NoiseShaping,
    WeightConfig,
    build_generalized_plant,
    hover_nominal,
)
from .dynamics import ActuatorModel, AttitudeState, InertiaParams
from .environment import DrydenConfig, GyroNoiseConfig
from .exceptions import ConfigError
from .lpv import RHO4_FLOOR, default_rho_box, rho_grid
from .pid import DEFAULT_BANDWIDTH, DEFAULT_DAMPING, DEFAULT_LEAK, tune_axes
from .simulation import PID_SWEEP, SimConfig
from .synthesis import HinfSynthesizer

PerAxis = Union[float, Tuple[float, float, float]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class InertiaSection(_Section):
    mass: float = Field(10.0, gt=0)
    Ix: float = Field(0.25, gt=0)
    Iy: float = Field(0.2, gt=0)
    Iz: float = Field(0.1, gt=0)

    def build(self):
        return InertiaParams(self.mass, self.Ix, self.Iy, self.Iz)


class RhoBoundsSection(_Section):
    rate_bound: float = Field(1.5, gt=0)
    rho4_floor: float = Field(RHO4_FLOOR, gt=0, le=1)

    def build(self):
        return default_rho_box(self.rate_bound, self.rho4_floor)


class NoiseShapingSection(_Section):
    zero: float = Field(10.0, gt=0)
    pole: float = Field(500.0, gt=0)


class WeightsSection(_Section):
    w_att: PerAxis = 20.0
    w_act: PerAxis = 0.15
    w_dist: PerAxis = 0.65
    w_noise: PerAxis = 0.0267
    noise_shaping: Optional[NoiseShapingSection] = None

    @field_validator("w_att", "w_act", "w_dist", "w_noise")
    @classmethod
    def _positive(cls, v):
        vals = (v,) if isinstance(v, (int, float)) else v
        if min(vals) <= 0:
            raise ValueError("weights must be > 0")
        return v

    def build(self):
        shaping = (None if self.noise_shaping is None
                   else NoiseShaping(self.noise_shaping.zero, self.noise_shaping.pole))
        return WeightConfig(self.w_att, self.w_act, self.w_dist, self.w_noise, shaping)


class ActuatorSection(_Section):
    time_constant: float = Field(0.02, gt=0)
    u_max: float = Field(4.0, gt=0)

    def build(self):
        return ActuatorModel(self.time_constant, self.u_max)


class SynthesisSection(_Section):
    eps: float = Field(DEFAULT_EPS, ge=0)
    gamma_min: float = Field(1e-4, gt=0)
    gamma_max: float = Field(1e4, gt=0)
    tol: float = Field(1e-3, gt=0)
    max_iter: int = Field(60, ge=1)


class DrydenSection(_Section):
    enabled: bool = True
    wind_speed: float = Field(15.0, gt=0)
    altitude: float = Field(10.0, gt=0)
    w20: float = Field(15.0, gt=0)
    scale_lengths: Optional[Tuple[float, float, float]] = None
    intensities: Optional[Tuple[float, float, float]] = None
    torque_gains: Optional[Tuple[float, float, float]] = None
    sample_rate: float = Field(1000.0, gt=0)
    seed: int = Field(0, ge=0)

    def build(self):
        kw = self.model_dump(exclude={"enabled"})
        if kw["torque_gains"] is None:
            kw.pop("torque_gains")
        return DrydenConfig(**kw)


class GyroNoiseSection(_Section):
    enabled: bool = True
    snr_db: float = 35.0
    sigma: Optional[PerAxis] = None
    sample_rate: float = Field(1000.0, gt=0)
    seed: int = Field(1, ge=0)

    def build(self):
        return GyroNoiseConfig(self.snr_db, self.sigma, self.sample_rate, self.seed)


class PidSection(_Section):
    bandwidth: float = Field(DEFAULT_BANDWIDTH, gt=0)
    damping: float = Field(DEFAULT_DAMPING, gt=0, le=1)
    leak: float = Field(DEFAULT_LEAK, ge=0)
    sweep: List[float] = Field(default_factory=lambda: list(PID_SWEEP), min_length=1)


class SimSection(_Section):
    duration: float = Field(60.0, gt=0)
    dt: float = Field(1e-3, gt=0)
    initial_state: Tuple[float, float, float, float, float, float] = (0.0,) * 6
    seed: Optional[int] = Field(None, ge=0)
    seeds: List[int] = Field(default_factory=lambda: list(range(10)), min_length=1)
    discrete: bool = False


class GridSection(_Section):
    points_per_axis: int = Field(3, ge=2)
    samples: int = Field(200, ge=0)
    seed: int = Field(0, ge=0)
    include_vertices: bool = True


class OutputSection(_Section):
    directory: str = "out"


class RunConfig(_Section):
    inertia: InertiaSection = InertiaSection()
    rho_bounds: RhoBoundsSection = RhoBoundsSection()
    weights: WeightsSection = WeightsSection()
    actuator: ActuatorSection = ActuatorSection()
    synthesis: SynthesisSection = SynthesisSection()
    dryden: DrydenSection = DrydenSection()
    gyro_noise: GyroNoiseSection = GyroNoiseSection()
    pid: PidSection = PidSection()
    sim: SimSection = SimSection()
    grid: GridSection = GridSection()
    output: OutputSection = OutputSection()

    def generalized_plant(self):
        inertia = self.inertia.build()
        eps = self.synthesis.eps
        return build_generalized_plant(hover_nominal(inertia, eps), self.actuator.build(),
                                       self.weights.build(), inertia=inertia, eps=eps)

    def synthesizer(self):
        s = self.synthesis
        return HinfSynthesizer(s.gamma_min, s.gamma_max, s.tol, s.max_iter)

    def grid_points(self, seed=None):
        g = self.grid
        return rho_grid(self.rho_bounds.build(), g.points_per_axis, g.samples,
                        g.seed if seed is None else seed, g.include_vertices)

    def pid_gains(self, bandwidth=None):
        return tune_axes(self.inertia.build(), bandwidth or self.pid.bandwidth,
                         self.pid.damping, self.pid.leak)

    def sim_config(self, controller="hinf", hinf=None, seed=None, bandwidth=None):
        s = self.sim
        return SimConfig(
            controller=controller,
            hinf=hinf,
            pid=self.pid_gains(bandwidth) if controller == "pid" else None,
            duration=s.duration,
            dt=s.dt,
            initial_state=AttitudeState(*s.initial_state),
            dryden=self.dryden.build() if self.dryden.enabled else None,
            gyro_noise=self.gyro_noise.build() if self.gyro_noise.enabled else None,
            actuator=self.actuator.build(),
            inertia=self.inertia.build(),
            seed=s.seed if seed is None else seed,
            discrete=s.discrete,
        )


def _format_errors(exc):
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def parse_config(doc):
    """Validate a mapping; raise :class:`ConfigError` naming offending keys."""
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path=None):
    """Load and validate a JSON config file; ``None`` gives all defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<root>: config must be a JSON object")
    return parse_config(doc)
