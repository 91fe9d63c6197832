"""Run configuration of the command line laboratory.

Values are layered: built-in defaults, overridden by environment variables
`PUMPWOOD_BIHARMONIC__<FIELD>` (upper case field name), overridden by a
JSON config file, overridden by command line flags. Validation runs once on
the merged result.
"""
import os
import logging
import simplejson as json
from dataclasses import dataclass, field, fields, asdict
from typing import List, Optional
from pumpwood_biharmonic.analytic import Dimension
from pumpwood_biharmonic.solver import SolverConfig, default_schedule
from pumpwood_biharmonic.exceptions import PumpwoodBiharmonicConfigException


ENV_PREFIX = "PUMPWOOD_BIHARMONIC__"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

DEFAULT_TOLERANCES = {
    "newton": 1e-9,
    "quadrature": 1e-9,
    "identity": 1e-4,
    "slope": 0.10,
    "trend": -0.1,
    "energy": 0.25,
    "d_variation": 0.25,
    "d_star": 0.25,
}
"""Verdict and solver tolerances, keys are the names used in reports."""

_FIELD_TYPES = {
    "dim": int, "eps": list, "eps_start": (int, float),
    "eps_ratio": (int, float), "eps_count": int, "nodes": int,
    "threads": int, "output_dir": str, "seed": int, "log_level": str,
    "max_iterations": int, "max_halvings": int, "warmup_iterations": int,
    "grading": (int, float), "quadrature_nodes": int,
    "quadrature_panels": int, "harmonic_degree": int, "region": str,
    "energy_eps": (int, float)}


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one command."""

    dim: int = 5
    eps: List[float] = field(
        default_factory=lambda: [1e-1, 10 ** -1.5, 1e-2])
    """Hole radii of the per eps commands (solve, verify-expansion)."""

    eps_start: float = 0.2
    eps_ratio: float = 0.7
    eps_count: int = 16
    """Geometric continuation schedule of the scaling study."""

    nodes: int = 400
    tolerances: dict = field(
        default_factory=lambda: dict(DEFAULT_TOLERANCES))
    threads: int = 1
    output_dir: str = "output"
    seed: int = 0
    log_level: str = "WARNING"
    max_iterations: int = 50
    max_halvings: int = 8
    warmup_iterations: int = 3
    grading: float = 1.0
    quadrature_nodes: int = 64
    quadrature_panels: int = 8
    harmonic_degree: int = 32
    region: str = "core"
    """Nodes entering the remainder bound verdict, "core" is r <= mu."""

    energy_eps: float = 1e-4

    @property
    def dimension(self) -> Dimension:
        """Dimension object of the run."""
        return Dimension(self.dim)

    @property
    def eps_schedule(self) -> List[float]:
        """Continuation schedule."""
        return default_schedule(self.eps_start, self.eps_ratio,
                                self.eps_count)

    @property
    def solver(self) -> SolverConfig:
        """Knobs of the nonlinear solver."""
        return SolverConfig(
            tolerance=self.tolerances["newton"],
            max_iterations=self.max_iterations,
            max_halvings=self.max_halvings,
            warmup_iterations=self.warmup_iterations)

    def to_dict(self) -> dict:
        """Configuration echoed into outputs."""
        return asdict(self)

    @classmethod
    def load(cls, config_path: Optional[str] = None,
             overrides: Optional[dict] = None) -> "RunConfig":
        """Merge defaults, environment, config file and overrides."""
        environment = {}
        for f in fields(cls):
            raw = os.getenv(ENV_PREFIX + f.name.upper())
            if raw is not None:
                environment[f.name] = _parse_env(raw)
        layers = [environment]
        if config_path is not None:
            layers.append(_read_config_file(config_path))
        layers.append({
            k: v for k, v in (overrides or {}).items() if v is not None})

        values = {}
        tolerances = dict(DEFAULT_TOLERANCES)
        for layer in layers:
            layer = dict(layer)
            if "tolerances" in layer:
                if not isinstance(layer["tolerances"], dict):
                    _require(
                        "tolerances", False,
                        "tolerances must be a mapping name -> value")
                tolerances.update(layer.pop("tolerances"))
            values.update(layer)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            msg = "Unknown configuration fields {fields}"
            raise PumpwoodBiharmonicConfigException(
                message=msg, payload={"fields": unknown})
        values["tolerances"] = tolerances
        try:
            config = cls(**values)
        except TypeError as error:
            msg = "Invalid configuration: {error}"
            raise PumpwoodBiharmonicConfigException(
                message=msg, payload={"error": str(error)})
        config.validate()
        return config

    def validate(self) -> None:
        """Check every field against the preconditions of the modules."""
        for f in fields(self):
            value = getattr(self, f.name)
            expected = _FIELD_TYPES.get(f.name)
            if expected is None:
                continue
            valid = isinstance(value, expected) and not isinstance(
                value, bool)
            if f.name == "eps":
                valid = isinstance(value, list) and all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value)
            _require(
                f.name, valid, "unexpected type {}".format(
                    type(value).__name__))
        Dimension(self.dim)
        _require(
            "eps", len(self.eps) >= 1 and all(
                0.0 < float(e) < 1.0 for e in self.eps),
            "eps values must lie in (0, 1) and at least one is required")
        _require(
            "eps_start", 0.0 < self.eps_start <= 0.2,
            "eps_start must lie in (0, 0.2]")
        _require(
            "eps_ratio", 0.0 < self.eps_ratio < 1.0,
            "eps_ratio must lie in (0, 1)")
        _require(
            "eps_count", isinstance(self.eps_count, int) and
            self.eps_count >= 1, "eps_count must be a positive integer")
        _require("nodes", self.nodes >= 16, "nodes must be >= 16")
        _require("threads", self.threads >= 1, "threads must be >= 1")
        _require(
            "log_level", str(self.log_level).upper() in LOG_LEVELS,
            "log_level must be one of {}".format(LOG_LEVELS))
        _require(
            "region", self.region in ("full", "core"),
            "region must be full or core")
        _require(
            "energy_eps", 0.0 < self.energy_eps < 1.0,
            "energy_eps must lie in (0, 1)")
        for name in ("max_iterations", "quadrature_nodes",
                     "quadrature_panels", "harmonic_degree"):
            _require(name, getattr(self, name) >= 1,
                     "{} must be >= 1".format(name))
        _require("grading", self.grading >= 0.0, "grading must be >= 0")
        for name, value in self.tolerances.items():
            numeric = isinstance(value, (int, float)) and not isinstance(
                value, bool)
            _require(
                "tolerances.{}".format(name), numeric,
                "tolerances must be numbers")
            if name != "trend":
                _require(
                    "tolerances.{}".format(name), value > 0.0,
                    "tolerances must be positive")

    @property
    def logging_level(self) -> int:
        """Numeric logging level."""
        return getattr(logging, str(self.log_level).upper())


def _require(name: str, condition: bool, message: str) -> None:
    if not condition:
        msg = "Invalid configuration field [{field}]: {detail}"
        raise PumpwoodBiharmonicConfigException(
            message=msg, payload={"field": name, "detail": message})


def _parse_env(raw: str):
    """Parse an environment value as JSON, falling back to a string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        if "," in raw:
            try:
                return [float(v) for v in raw.split(",")]
            except ValueError:
                pass
        return raw


def _read_config_file(path: str) -> dict:
    try:
        with open(path, "r") as file:
            data = json.load(file)
    except (OSError, json.JSONDecodeError) as error:
        msg = "Could not read config file [{path}]: {error}"
        raise PumpwoodBiharmonicConfigException(
            message=msg, payload={"path": path, "error": str(error)})
    if not isinstance(data, dict):
        msg = "Config file [{path}] must hold a JSON object"
        raise PumpwoodBiharmonicConfigException(
            message=msg, payload={"path": path})
    return data
