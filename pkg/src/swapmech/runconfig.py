"""Run configuration schemas: one JSON document per subcommand.

Every config carries a mandatory ``units`` declaration: ``"angular"`` means
all frequency-like inputs are already rad/s, ``"hertz"`` multiplies them by
2 pi on the way in.  Validation is strict by default: unknown keys are
rejected and every error names the offending key path.  The stored model
keeps the numbers exactly as the file declared them; conversion happens only
when the physical parameter set is materialized.
"""

from __future__ import annotations

import json
import math
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dynamics import IntegratorConfig
from .params import SystemParams

TWO_PI = 2.0 * math.pi

ComplexLike = Union[float, tuple[float, float]]


class ConfigError(ValueError):
    """Malformed or invalid run configuration; exit code 2 territory."""


def _to_complex(v: ComplexLike) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    re, im = v
    return complex(re, im)


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemParamsModel(_StrictModel):
    """Physical parameters as declared in the config file."""

    Omega: ComplexLike
    g1: ComplexLike
    g2: ComplexLike
    delta: float
    Delta1: float
    Delta2: float
    gprime: float
    n: int
    omega_m: float
    epsilon: float = 0.0
    X0: float = 1.0
    cavity_cutoff: int = 4
    oscillator_mode: Literal["classical", "quantum"] = "classical"
    oscillator_levels: Optional[int] = None
    mass: Optional[float] = None
    omega_eg: float = 0.0
    omega_fg: float = 0.0

    def to_params(self, units: str) -> SystemParams:
        f = TWO_PI if units == "hertz" else 1.0
        return SystemParams(
            Omega=f * _to_complex(self.Omega),
            g1=f * _to_complex(self.g1),
            g2=f * _to_complex(self.g2),
            delta=f * self.delta,
            Delta1=f * self.Delta1,
            Delta2=f * self.Delta2,
            gprime=f * self.gprime,
            n=self.n,
            omega_m=f * self.omega_m,
            epsilon=f * self.epsilon,
            X0=self.X0,
            cavity_cutoff=self.cavity_cutoff,
            oscillator_mode=self.oscillator_mode,
            oscillator_levels=self.oscillator_levels,
            mass=self.mass,
            omega_eg=f * self.omega_eg,
            omega_fg=f * self.omega_fg,
        )


class IntegratorModel(_StrictModel):
    steps_per_fastest_period: int = 200
    sample_stride: int = 10
    max_norm_drift: float = 1e-8

    def to_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            steps_per_fastest_period=self.steps_per_fastest_period,
            sample_stride=self.sample_stride,
            max_norm_drift=self.max_norm_drift,
        )


class _UnitsModel(_StrictModel):
    units: Literal["angular", "hertz"]

    def angular(self, value: Optional[float]) -> Optional[float]:
        if value is None:
            return None
        return TWO_PI * value if self.units == "hertz" else value


class _CouplingSource(_UnitsModel):
    """Shared 'lambda_prime directly or physics params' choice."""

    n: Optional[int] = None
    lambda_prime: Optional[float] = None
    params: Optional[SystemParamsModel] = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if self.params is None:
            if self.lambda_prime is None or self.n is None:
                raise ValueError(
                    "either 'params' or both 'lambda_prime' and 'n' are required"
                )
        elif self.lambda_prime is not None or self.n is not None:
            raise ValueError(
                "give 'lambda_prime'/'n' or 'params', not both; with 'params' "
                "the coupling order and lambda' are derived"
            )
        return self

    def resolve(self) -> tuple[int, float, Optional[SystemParams]]:
        """(n, lambda_prime, params-or-None) in angular units."""
        from .reduction import coefficients

        if self.params is None:
            return int(self.n), float(self.lambda_prime), None
        p = self.params.to_params(self.units)
        return p.n, coefficients(p).lambda_prime, p


class FeasibilityConfig(_UnitsModel):
    params: SystemParamsModel
    s_max: int = 2


class GateTimeConfig(_CouplingSource):
    s_max: int = 0
    omega_m: Optional[float] = None  # for seconds when lambda_prime is direct

    @model_validator(mode="after")
    def _omega_m_source(self):
        if self.params is not None and self.omega_m is not None:
            raise ValueError("'omega_m' comes from 'params' when params are given")
        return self

    def omega_m_angular(self) -> Optional[float]:
        if self.params is not None:
            return self.params.to_params(self.units).omega_m
        return self.angular(self.omega_m)


class SimulateEffectiveConfig(_CouplingSource):
    b0: tuple[ComplexLike, ComplexLike] = (1.0, 0.0)
    tau_span: tuple[float, float] = (0.0, 10.0)
    solver: Literal["rk4", "closed-form"] = "rk4"
    samples: int = Field(default=1001, ge=2)  # closed-form grid size
    integrator: IntegratorModel = IntegratorModel()

    def initial_amplitudes(self) -> tuple[complex, complex]:
        return (_to_complex(self.b0[0]), _to_complex(self.b0[1]))


class SimulateFullConfig(_UnitsModel):
    params: SystemParamsModel
    t_span: tuple[float, float]  # in units of 1/omega_m
    stage: Literal["H1", "H2"] = "H2"  # H1 for lab-frame cross-checks
    initial_state: Literal["g1f2", "f1g2", "g1g2", "f1f2"] = "g1f2"
    audit_cutoff: bool = True
    cutoff_tolerance: float = 1e-3
    integrator: IntegratorModel = IntegratorModel()


SWEEPABLE = ("lambda_prime", "Omega", "g", "delta", "Delta", "gprime",
             "omega_m", "X0", "epsilon")


class SweepAxis(_StrictModel):
    parameter: str
    values: Optional[list[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _check(self):
        if self.parameter not in SWEEPABLE:
            raise ValueError(
                f"parameter must be one of {SWEEPABLE}, got {self.parameter!r}"
            )
        has_list = self.values is not None
        has_range = all(v is not None for v in (self.start, self.stop, self.num))
        if has_list == has_range:
            raise ValueError("give either 'values' or 'start'/'stop'/'num'")
        return self

    def grid(self) -> list[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        step = (self.stop - self.start) / (self.num - 1)
        return [self.start + k * step for k in range(self.num)]


class SweepConfig(_UnitsModel):
    axis: SweepAxis
    n: Optional[int] = None
    params: Optional[SystemParamsModel] = None
    s: int = 0
    integrator: IntegratorModel = IntegratorModel()

    @model_validator(mode="after")
    def _sources(self):
        if self.params is not None and self.n is not None:
            raise ValueError("'n' comes from 'params' when params are given")
        if self.axis.parameter == "lambda_prime":
            if self.n is None and self.params is None:
                raise ValueError("sweeping lambda_prime requires 'n' or 'params'")
        elif self.params is None:
            raise ValueError(f"sweeping {self.axis.parameter!r} requires 'params'")
        return self


class CompareConfig(_UnitsModel):
    file_a: Optional[str] = None
    file_b: Optional[str] = None
    csv_a: Optional[str] = None
    csv_b: Optional[str] = None
    labels: Optional[list[str]] = None

    @model_validator(mode="after")
    def _sources(self):
        a_ok = (self.file_a is None) != (self.csv_a is None)
        b_ok = (self.file_b is None) != (self.csv_b is None)
        if not (a_ok and b_ok):
            raise ValueError(
                "each side needs exactly one of a file path or inline csv"
            )
        return self


CONFIG_TYPES = {
    "feasibility": FeasibilityConfig,
    "gate-time": GateTimeConfig,
    "simulate-effective": SimulateEffectiveConfig,
    "simulate-full": SimulateFullConfig,
    "sweep": SweepConfig,
    "compare": CompareConfig,
}


def _strip_unknown(model_cls, data):
    """Drop keys the model does not declare (non-strict mode)."""
    if not isinstance(data, dict) or not hasattr(model_cls, "model_fields"):
        return data
    fields = model_cls.model_fields
    out = {}
    for key, value in data.items():
        if key not in fields:
            continue
        ann = fields[key].annotation
        sub = getattr(ann, "model_fields", None)
        if sub is not None and isinstance(value, dict):
            value = _strip_unknown(ann, value)
        else:
            inner = [a for a in getattr(ann, "__args__", ()) if hasattr(a, "model_fields")]
            if inner and isinstance(value, dict):
                value = _strip_unknown(inner[0], value)
        out[key] = value
    return out


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for item in err.errors():
        path = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "; ".join(lines)


def parse_config(text: Union[str, bytes], subcommand: str, strict: bool = True):
    """Parse and validate a config document for the given subcommand."""
    if subcommand not in CONFIG_TYPES:
        raise ConfigError(
            f"unknown subcommand {subcommand!r}; expected one of "
            f"{sorted(CONFIG_TYPES)}"
        )
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config is not valid JSON: {err.msg} at line {err.lineno}, "
            f"column {err.colno}"
        ) from None
    model_cls = CONFIG_TYPES[subcommand]
    if not strict:
        data = _strip_unknown(model_cls, data)
    try:
        return model_cls.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_validation_error(err)) from None


def serialize_config(config: BaseModel) -> str:
    """Canonical JSON text for a parsed config (normalized formatting)."""
    data = config.model_dump(mode="json", exclude_none=True)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
