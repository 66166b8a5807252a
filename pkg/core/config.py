"""
Scenario configuration: an INI-style text parsed with configparser and
validated with pydantic. All problems are collected and reported together.
"""

import configparser
import difflib
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError
from core.propagator import OBSERVABLE_NAMES
from core.utils import content_hash, parse_rational, read_text_file

Mode = Literal["counterexample", "evolve", "crosscheck"]
MODES = ("counterexample", "evolve", "crosscheck")


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.replace("\n", ",").split(",") if item.strip()]
    return value


def _check_power_of_two(n: int) -> int:
    if n < 16 or n & (n - 1):
        raise ValueError(f"must be a power of two and at least 16, got {n}")
    return n


class EvolveConfig(BaseModel):
    """Potential, initial Gaussian, grid, time stepping and tolerances."""

    model_config = ConfigDict(extra="forbid")

    potential: Literal["free", "harmonic", "quartic", "barrier"] = "harmonic"
    omega: float = Field(1.0, gt=0)
    coupling: float = Field(1.0, gt=0)
    height: float = 1.0
    center: float = 0.0
    width: float = Field(1.0, gt=0)

    x0: float = 2.0
    p0: float = 0.0
    sigma: float = Field(1.0, gt=0)

    length: float = Field(40.0, gt=0)
    nodes: int = 512
    t_final: float = Field(6.4, gt=0)
    dt: float = Field(1e-3, gt=0)
    save_every: int = Field(10, ge=1)
    integrator: Literal["crank_nicolson", "split_fourier"] = "crank_nicolson"
    observables: list[str] = Field(default_factory=lambda: ["position", "momentum", "hamiltonian"])

    residual_tolerance: float = Field(5e-6, gt=0)
    conserved_tolerance: float = Field(1e-10, gt=0)
    norm_tolerance: float = Field(1e-8, gt=0)
    energy_tolerance: float = Field(1e-6, gt=0)
    coherent_tolerance: float = Field(1e-4, gt=0)

    convergence_study: bool = False
    min_slope: float = 1.9
    sup_norm_tolerance: float = Field(0.01, gt=0)
    compare_integrators: bool = False
    integrator_tolerance: float = Field(1e-4, gt=0)

    @field_validator("observables", mode="before")
    @classmethod
    def _observables_list(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("nodes")
    @classmethod
    def _nodes(cls, n: int) -> int:
        return _check_power_of_two(n)

    @field_validator("observables")
    @classmethod
    def _observables(cls, names: list[str]) -> list[str]:
        unknown = [name for name in names if name not in OBSERVABLE_NAMES]
        if unknown:
            raise ValueError(f"unknown observable(s) {unknown}; choose from {', '.join(OBSERVABLE_NAMES)}")
        if not names:
            raise ValueError("at least one observable is required")
        if len(set(names)) != len(names):
            raise ValueError("observables must not repeat")
        return names

    @model_validator(mode="after")
    def _steps(self) -> "EvolveConfig":
        steps = round(self.t_final / self.dt)
        if abs(steps * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError(f"t_final={self.t_final} is not a whole number of steps of dt={self.dt}")
        if steps % self.save_every:
            raise ValueError(f"save_every={self.save_every} must divide the {steps} steps")
        if steps // self.save_every + 1 < 5:
            raise ValueError("the run must save at least 5 samples")
        return self


class CounterexampleConfig(BaseModel):
    """Exact system size and geometry; every rational is written as p/q."""

    model_config = ConfigDict(extra="forbid")

    n_bumps: int = Field(20, ge=1)
    interval_rule: Literal["harmonic", "uniform"] = "harmonic"
    t0_offset: str = "1/4"
    eta_fraction: str = "1/16"
    orthogonality_samples: int = Field(100, ge=1)
    hermiticity_pairs: int = Field(20, ge=1)
    bounds: list[int] = Field(default_factory=lambda: [10, 100, 1000])
    write_bumps: bool = True

    @field_validator("bounds", mode="before")
    @classmethod
    def _bounds_list(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("t0_offset", "eta_fraction")
    @classmethod
    def _exact(cls, value: str) -> str:
        parse_rational(value)
        return value.strip()

    @model_validator(mode="after")
    def _cell_fits(self) -> "CounterexampleConfig":
        if self.t0 <= 0 or self.eta <= 0:
            raise ValueError("t0_offset and eta_fraction must be positive")
        if self.t0 + 6 * self.eta >= 1:
            raise ValueError("t0_offset + 6 * eta_fraction must be below 1")
        return self

    @property
    def t0(self) -> Fraction:
        return parse_rational(self.t0_offset)

    @property
    def eta(self) -> Fraction:
        return parse_rational(self.eta_fraction)


class CrosscheckConfig(BaseModel):
    """Exact system to discretise and the grid to discretise it on."""

    model_config = ConfigDict(extra="forbid")

    n_bumps: int = Field(5, ge=1)
    interval_rule: Literal["harmonic", "uniform"] = "harmonic"
    refinement: int = Field(1, ge=1)
    refinement_study: bool = True
    length: float | None = Field(None, gt=0)
    nodes: int | None = None
    times: list[str] = Field(default_factory=list)
    relative_tolerance: float = Field(0.05, gt=0)
    zero_tolerance: float = Field(1e-6, gt=0)
    min_refinement_ratio: float = 3.5

    @field_validator("times", mode="before")
    @classmethod
    def _times_list(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("nodes")
    @classmethod
    def _nodes(cls, n: int | None) -> int | None:
        return None if n is None else _check_power_of_two(n)

    @field_validator("times")
    @classmethod
    def _exact_times(cls, times: list[str]) -> list[str]:
        for t in times:
            parse_rational(t)
        return times

    @model_validator(mode="after")
    def _explicit_grid(self) -> "CrosscheckConfig":
        if (self.length is None) != (self.nodes is None):
            raise ValueError("give both length and nodes for an explicit grid, or neither")
        return self


class ScenarioConfig(BaseModel):
    """One run: the mode, a seed, and the section for every mode."""

    model_config = ConfigDict(extra="forbid")

    mode: Mode
    seed: int = Field(0, ge=0)
    evolve: EvolveConfig = Field(default_factory=EvolveConfig)
    counterexample: CounterexampleConfig = Field(default_factory=CounterexampleConfig)
    crosscheck: CrosscheckConfig = Field(default_factory=CrosscheckConfig)

    def fingerprint(self) -> str:
        """SHA-256 of the validated configuration."""
        return content_hash(self.model_dump(mode="json"))


SECTION_MODELS: dict[str, type[BaseModel]] = {
    "evolve": EvolveConfig,
    "counterexample": CounterexampleConfig,
    "crosscheck": CrosscheckConfig,
}
SCENARIO_KEYS = ("mode", "seed")


def _suggest(word: str, choices: list[str] | tuple[str, ...]) -> str:
    match = difflib.get_close_matches(word, choices, n=1)
    return f" (did you mean '{match[0]}'?)" if match else ""


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="__defaults__")
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError([f"line {e.lineno}: expected a [section] header before '{e.line.strip()}'"]) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError([f"line {e.lineno}: duplicate section [{e.section}]"]) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigError([f"line {e.lineno}: duplicate key '{e.option}' in [{e.section}]"]) from e
    except configparser.ParsingError as e:
        raise ConfigError([f"line {lineno}: cannot parse '{line.strip()}'" for lineno, line in e.errors]) from e
    return parser


def parse_config(text: str, default_mode: str | None = None) -> ScenarioConfig:
    """
    Parse and validate scenario text.

    default_mode fills in [scenario] mode when the text leaves it out; a text
    that names a different mode is rejected.
    """
    parser = _read(text)
    errors: list[str] = []
    data: dict[str, Any] = {}

    for section in parser.sections():
        if section != "scenario" and section not in SECTION_MODELS:
            errors.append(f"unknown section [{section}]{_suggest(section, ['scenario', *SECTION_MODELS])}")

    if parser.has_section("scenario"):
        for key, value in parser.items("scenario"):
            if key in SCENARIO_KEYS:
                data[key] = value
            else:
                errors.append(f"[scenario] unknown key '{key}'{_suggest(key, SCENARIO_KEYS)}")

    if default_mode is not None:
        if data.get("mode", default_mode) != default_mode:
            errors.append(f"[scenario] mode is '{data['mode']}' but '{default_mode}' was requested")
        data["mode"] = default_mode

    for name, model in SECTION_MODELS.items():
        if not parser.has_section(name):
            continue
        section = {}
        fields = list(model.model_fields)
        for key, value in parser.items(name):
            if key in fields:
                section[key] = value
            else:
                errors.append(f"[{name}] unknown key '{key}'{_suggest(key, fields)}")
        data[name] = section

    try:
        config = ScenarioConfig(**data)
    except ValidationError as e:
        for err in e.errors():
            location = ".".join(str(part) for part in err["loc"]) or "scenario"
            errors.append(f"{location}: {err['msg']}")
        config = None

    if errors:
        raise ConfigError(errors)
    assert config is not None
    return config


def load_config(path: str | Path, default_mode: str | None = None) -> ScenarioConfig:
    try:
        text = read_text_file(path)
    except FileNotFoundError as e:
        raise ConfigError([str(e)]) from e
    return parse_config(text, default_mode=default_mode)


def default_config(mode: str) -> ScenarioConfig:
    return ScenarioConfig(mode=mode)
