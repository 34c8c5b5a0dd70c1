"""Run configuration: pydantic models plus the dotted-key text format.

Config files are flat `key = value` lines with dotted section names
(`system.name = duffing`); values parse as JSON scalars/lists with a bare-
string fallback.  A JSON object with the same nesting is accepted too, so
reports embedding their resolved config can be re-run directly.  Unknown
keys anywhere are errors.
"""

from __future__ import annotations

import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError

_SYSTEM_DEFAULTS = {
    "example1": {"s0": 0.5, "varkappa": 1, "envelope_kind": "powerlog", "q": 2},
    "duffing": {"s0": 1.5, "varkappa": 2, "envelope_kind": "power", "q": 4},
}


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemBlock(_Block):
    name: Literal["example1", "duffing"]
    params: dict[str, float] = Field(default_factory=dict)
    n: int = Field(2, ge=1)
    p: int = Field(1, ge=1)
    kappa: int = Field(1, ge=1)
    varkappa: int | None = Field(None, ge=1)
    epsilon: float = Field(0.0, ge=0.0)


class EnvelopeBlock(_Block):
    kind: Literal["power", "powerlog"] | None = None
    q: int | None = Field(None, ge=1)
    tau0: float | None = None


class PhaseBlock(_Block):
    s0: float | None = None
    s: list[float] = Field(default_factory=list)


class IntegrationBlock(_Block):
    t0: float | None = None
    T: float = Field(2000.0, gt=0.0)
    dt: float | None = Field(None, gt=0.0)
    order: int = Field(4, ge=1, le=4)


class MonteCarloBlock(_Block):
    n_paths: int = Field(200, ge=1)
    delta1: float = Field(0.2, gt=0.0)
    eps2: float = Field(1.0, gt=0.0)
    l: float = Field(0.5, gt=0.0, lt=1.0)
    t_star: float | None = None
    seed: int = Field(12345, ge=0)
    n_workers: int = Field(1, ge=1)
    t_max: float = Field(1e6, gt=0.0)
    horizon: Literal["t_epsilon", "fixed"] = "t_epsilon"
    T_fixed: float | None = Field(None, gt=0.0)
    boundary: bool = False
    record_every: int = Field(1, ge=1)


class SimulateBlock(_Block):
    n_paths: int = Field(3, ge=1)
    r_offset: float = 0.05  # initial amplitude offset relative to r0
    psi_init: float | None = None  # pin the initial phase shift (else uniform)


class OutputBlock(_Block):
    directory: str = "out"
    formats: list[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])


class RunConfig(_Block):
    system: SystemBlock
    envelope: EnvelopeBlock = Field(default_factory=EnvelopeBlock)
    phase: PhaseBlock = Field(default_factory=PhaseBlock)
    integration: IntegrationBlock = Field(default_factory=IntegrationBlock)
    monte_carlo: MonteCarloBlock = Field(default_factory=MonteCarloBlock)
    simulate: SimulateBlock = Field(default_factory=SimulateBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    def defaults(self) -> dict:
        return _SYSTEM_DEFAULTS[self.system.name]

    def validate_consistency(self) -> "RunConfig":
        d = self.defaults()
        if self.envelope.kind is not None and self.envelope.kind != d["envelope_kind"]:
            raise ConfigError(
                f"system {self.system.name} has envelope kind {d['envelope_kind']}, "
                f"config asks for {self.envelope.kind}"
            )
        if self.envelope.q is not None and self.envelope.q != d["q"]:
            raise ConfigError(
                f"system {self.system.name} has envelope exponent q = {d['q']}, "
                f"config asks for {self.envelope.q}"
            )
        if self.system.name == "example1" and self.system.n != 2:
            raise ConfigError("example1 has forcing order n = 2")
        return self

    @property
    def s0(self) -> float:
        return self.phase.s0 if self.phase.s0 is not None else self.defaults()["s0"]

    @property
    def varkappa(self) -> int:
        return self.system.varkappa if self.system.varkappa is not None else self.defaults()["varkappa"]

    @property
    def dt(self) -> float:
        if self.integration.dt is not None:
            return self.integration.dt
        return 1e-3 * 2.0 * 3.141592653589793 / abs(self.s0)

    def resolved(self) -> dict:
        out = self.model_dump()
        out["phase"]["s0"] = self.s0
        out["system"]["varkappa"] = self.varkappa
        out["integration"]["dt"] = self.dt
        d = self.defaults()
        out["envelope"]["kind"] = d["envelope_kind"]
        out["envelope"]["q"] = d["q"]
        return out


def _nest(flat: dict[str, object]) -> dict:
    tree: dict = {}
    for key, value in flat.items():
        parts = key.split(".")
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"key {key!r} conflicts with a scalar entry")
        node[parts[-1]] = value
    return tree


def parse_dotted(text: str) -> dict:
    """Parse `a.b.c = value` lines into a nested dict; `#` starts a comment."""
    flat: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            flat[key] = json.loads(value)
        except json.JSONDecodeError:
            flat[key] = value
    return _nest(flat)


def load_config(text: str) -> RunConfig:
    """Accept either dotted text or a JSON object with the same nesting."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
    else:
        data = parse_dotted(text)
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate_consistency()


def load_config_file(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())
