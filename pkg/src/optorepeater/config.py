"""Run configuration: a plain ``key = value`` text file.

Blank lines and ``#`` comments are ignored. Keys (defaults in brackets):

    omega_m        mechanical frequency omegaM / lambda1 (required, > 0)
    g              optomechanical coupling G / lambda1 (required)
    lambda2        second atom-field coupling lambda2 / lambda1 [1.0]
    g_prime        G' / lambda1; must equal g [g]
    t              stage-1 handoff time lambda1 t [0.8]
    t_start        stage-1 grid start [0.0]
    t_stop         stage-1 grid stop [20.0]
    grid_points    stage-1 grid size [2001]
    tau_start      stage-2 grid start [0.0]
    tau_stop       stage-2 grid stop [20.0]
    tau_points     stage-2 grid size [2001]
    sweep_param    omegaM | G | t [unset]
    sweep_values   comma-separated values [unset]
    format         csv | json [csv]
    out            output path [stdout]
    verify_n_max   truncation used by the effective-Hamiltonian check [4]
    verify_samples random times for the interaction-picture check [20]
    seed           RNG seed for verification sampling [0]
    omega_tilde1, omega_tilde2, omega_tilde3, Omega1, Omega2
                   bare frequencies for the interaction-picture check
                   [resonant defaults]
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .hamiltonian import ProtocolParameters

__all__ = ["ConfigError", "RunSpec", "parse_config", "parse_text"]


class ConfigError(ValueError):
    """Schema violation; carries the offending field and line if known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.reason = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class RunSpec:
    omega_m: float
    g: float
    lambda2: float = 1.0
    g_prime: float | None = None
    t: float = 0.8
    t_start: float = 0.0
    t_stop: float = 20.0
    grid_points: int = 2001
    tau_start: float = 0.0
    tau_stop: float = 20.0
    tau_points: int = 2001
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] | None = None
    format: str = "csv"
    out: str | None = None
    verify_n_max: int = 4
    verify_samples: int = 20
    seed: int = 0
    omega_tilde1: float | None = None
    omega_tilde2: float | None = None
    omega_tilde3: float | None = None
    Omega1: float | None = None
    Omega2: float | None = None

    def __post_init__(self):
        if self.g_prime is None:
            object.__setattr__(self, "g_prime", self.g)
        self.validate()

    def validate(self):
        def fail(name, msg):
            raise ConfigError(msg, field=name)

        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                fail(f.name, "must be finite")
        if not self.omega_m > 0:
            fail("omega_m", "must be positive")
        if self.g_prime != self.g:
            fail("g_prime", "protocol mode requires g_prime == g")
        if self.t < 0:
            fail("t", "must be non-negative")
        for name in ("grid_points", "tau_points"):
            if getattr(self, name) < 2:
                fail(name, "must be at least 2")
        if not self.t_stop > self.t_start:
            fail("t_stop", "grid must be ascending (t_stop > t_start)")
        if not self.tau_stop > self.tau_start:
            fail("tau_stop", "grid must be ascending (tau_stop > tau_start)")
        if self.t_start < 0 or self.tau_start < 0:
            fail("t_start" if self.t_start < 0 else "tau_start", "must be non-negative")
        if self.format not in ("csv", "json"):
            fail("format", "must be 'csv' or 'json'")
        if self.sweep_param is not None and self.sweep_param not in ("omegaM", "G", "t"):
            fail("sweep_param", "must be one of omegaM, G, t")
        if (self.sweep_param is None) != (self.sweep_values is None):
            fail("sweep_values", "sweep_param and sweep_values go together")
        if self.sweep_values is not None and len(self.sweep_values) == 0:
            fail("sweep_values", "must not be empty")
        if self.verify_n_max < 3:
            fail("verify_n_max", "must be at least 3")
        if self.verify_samples < 1:
            fail("verify_samples", "must be positive")
        bare = [self.omega_tilde1, self.omega_tilde2, self.omega_tilde3, self.Omega1, self.Omega2]
        if any(v is not None for v in bare) and any(v is None for v in bare):
            fail("omega_tilde1", "bare frequencies must be given all together")

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_stop, self.grid_points)

    @property
    def tau_grid(self) -> np.ndarray:
        return np.linspace(self.tau_start, self.tau_stop, self.tau_points)

    @property
    def has_bare_frequencies(self) -> bool:
        return self.Omega1 is not None

    def to_params(self) -> ProtocolParameters:
        return ProtocolParameters(omegaM=self.omega_m, G=self.g, lambda2=self.lambda2)

    def echo(self) -> dict:
        out = asdict(self)
        if out["sweep_values"] is not None:
            out["sweep_values"] = list(out["sweep_values"])
        return out


_FLOAT_KEYS = {
    "omega_m", "g", "lambda2", "g_prime", "t", "t_start", "t_stop", "tau_start",
    "tau_stop", "omega_tilde1", "omega_tilde2", "omega_tilde3", "Omega1", "Omega2",
}
_INT_KEYS = {"grid_points", "tau_points", "verify_n_max", "verify_samples", "seed"}
_LIST_KEYS = {"sweep_values"}
_REQUIRED = ("omega_m", "g")


def _convert(key: str, raw: str, line: int):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _LIST_KEYS:
            return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r}", field=key, line=line) from None
    return raw


def parse_text(text: str, overrides: dict | None = None) -> RunSpec:
    """Parse config text; ``overrides`` (already typed) win over file values."""
    known = {f.name for f in fields(RunSpec)}
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError("unknown key", field=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", field=key, line=lineno)
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
            lines.pop(key, None)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError("required field missing", field=key)
    try:
        return RunSpec(**values)
    except ConfigError as err:
        raise ConfigError(err.reason, field=err.field, line=lines.get(err.field)) from None


def parse_config(path, overrides: dict | None = None) -> RunSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    return parse_text(path.read_text(), overrides)
