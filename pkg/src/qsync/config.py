"""Run configuration: TOML sections, overrides, validation, dumping."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from qsync.bath import BathSpec
from qsync.heom import stability_cap
from qsync.operators import SystemModel
from qsync.states import PRESETS
from qsync.sweep import CellConfig


class ConfigError(ValueError):
    pass


@dataclass
class Physical:
    omega1: float = 1.0
    delta: float = 0.01
    lam: float = 0.05
    gamma: float = 2.0
    beta: float = 0.3
    h: float = -1.0
    channel_count: int = 2


@dataclass
class Numerics:
    m_cut: int = 2
    tier_cap: int = 6
    dt: float = 0.005
    t_final: float = 10.0
    sample_every: int = 20
    steady_method: str = "stationary"
    steady_tolerance: float = 1e-6
    steady_window: float = 50.0
    steady_max_time: float = 2000.0


@dataclass
class InitialState:
    preset: str = "equatorial_product"
    path: str = ""


@dataclass
class Measures:
    n_phi: int = 256


@dataclass
class Sweep:
    delta_min: float = 0.0
    delta_max: float = 0.1
    n_delta: int = 21
    lambda_min: float = 0.0
    lambda_max: float = 0.05
    n_lambda: int = 21
    warm_start: bool = False
    width_threshold: float = 0.5


@dataclass
class Check:
    pairs: list = field(default_factory=lambda: [[2, 4], [2, 6], [3, 6], [3, 8]])
    tolerance: float = 0.01


@dataclass
class Output:
    directory: str = "out"
    plot: bool = True


@dataclass
class RunConfig:
    physical: Physical = field(default_factory=Physical)
    numerics: Numerics = field(default_factory=Numerics)
    initial_state: InitialState = field(default_factory=InitialState)
    measures: Measures = field(default_factory=Measures)
    sweep: Sweep = field(default_factory=Sweep)
    check: Check = field(default_factory=Check)
    output: Output = field(default_factory=Output)

    def cell(self) -> CellConfig:
        p, n, s = self.physical, self.numerics, self.initial_state
        return CellConfig(
            delta=p.delta, lam=p.lam, gamma=p.gamma, beta=p.beta, h=p.h,
            m_cut=n.m_cut, tier_cap=n.tier_cap, channel_count=p.channel_count,
            initial=s.preset, initial_path=s.path or None, method=n.steady_method,
            dt=n.dt, tolerance=n.steady_tolerance, window=n.steady_window,
            max_time=n.steady_max_time,
        )

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return {f.name: _to_toml_section(getattr(self, f.name)) for f in fields(self)}


# the TOML key for Physical.lam
_ALIASES = {"lambda": "lam"}
_REVERSE = {v: k for k, v in _ALIASES.items()}


def _to_toml_section(section) -> dict[str, Any]:
    return {_REVERSE.get(f.name, f.name): getattr(section, f.name) for f in fields(section)}


def _locate(text: str | None, section: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    if not text:
        return None
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return no
    return None


class _Source:
    def __init__(self, path: str | None, text: str | None, overridden=()) -> None:
        self.path = path or "<overrides>"
        self.text = text
        self.overridden = set(overridden)

    def error(self, section: str, key: str | None, msg: str) -> ConfigError:
        if (section, key) in self.overridden:
            return ConfigError(f"--set {section}.{key}: {msg}")
        line = _locate(self.text, section, key)
        where = f"{self.path}:{line}" if line else self.path
        target = f"[{section}]" + (f".{key}" if key else "")
        return ConfigError(f"{where}: {target}: {msg}")


def _coerce(value, default, src: _Source, section: str, key: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise src.error(section, key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise src.error(section, key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise src.error(section, key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise src.error(section, key, f"expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise src.error(section, key, f"expected a list, got {value!r}")
        return value
    return value


def _apply(cfg: RunConfig, data: dict, src: _Source) -> None:
    names = {f.name for f in fields(cfg)}
    for section, body in data.items():
        if section not in names:
            raise src.error(section, None, "unknown section")
        if not isinstance(body, dict):
            raise src.error(section, None, "expected a table")
        target = getattr(cfg, section)
        known = {f.name: getattr(target, f.name) for f in fields(target)}
        for key, value in body.items():
            attr = _ALIASES.get(key, key) if section == "physical" else key
            if attr not in known:
                raise src.error(section, key, "unknown key")
            setattr(target, attr, _coerce(value, known[attr], src, section, key))


def parse_override(item: str) -> dict:
    """``section.key=value`` with a TOML value; bare words are taken as strings."""
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    lhs, raw = item.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    try:
        value = tomli.loads(f"v = {raw.strip()}")["v"]
    except tomli.TOMLDecodeError:
        value = raw.strip()
    return {section: {key: value}}


def validate(cfg: RunConfig, src: _Source) -> None:
    p, n = cfg.physical, cfg.numerics
    if p.omega1 != 1.0:
        raise src.error("physical", "omega1", "omega1 is the unit of frequency and must be 1")
    try:
        SystemModel(p.delta, p.h)
    except ValueError as exc:
        raise src.error("physical", "h", str(exc)) from None
    if p.channel_count not in (1, 2):
        raise src.error("physical", "channel_count", "must be 1 or 2")
    if n.m_cut < 0:
        raise src.error("numerics", "m_cut", "must be non-negative")
    if n.tier_cap < 0:
        raise src.error("numerics", "tier_cap", "must be non-negative")
    try:
        bath = BathSpec(p.lam, p.gamma, p.beta, n.m_cut)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("gamma", "beta") if k in msg), "lambda")
        raise src.error("physical", key, msg) from None
    cap = stability_cap(bath)
    if not 0 < n.dt < cap:
        raise src.error("numerics", "dt", f"dt = {n.dt} must be below the stability cap 1/(2 nu_M) = {cap:.6g}")
    if n.t_final <= 0:
        raise src.error("numerics", "t_final", "must be positive")
    if n.sample_every < 1:
        raise src.error("numerics", "sample_every", "must be >= 1")
    if n.steady_method not in ("stationary", "evolve"):
        raise src.error("numerics", "steady_method", "must be 'stationary' or 'evolve'")
    if cfg.initial_state.preset not in PRESETS:
        raise src.error("initial_state", "preset", f"unknown preset; choose from {PRESETS}")
    if cfg.initial_state.preset == "custom" and not cfg.initial_state.path:
        raise src.error("initial_state", "path", "custom preset needs a matrix file path")
    if cfg.measures.n_phi < 8:
        raise src.error("measures", "n_phi", "need at least 8 phase samples")
    s = cfg.sweep
    if s.n_delta < 1 or s.n_lambda < 1:
        raise src.error("sweep", "n_delta", "grid sizes must be >= 1")
    if s.lambda_min < 0:
        raise src.error("sweep", "lambda_min", "couplings must be non-negative")
    for pair in cfg.check.pairs:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
            raise src.error("check", "pairs", f"each pair must be [M, N_c], got {pair!r}")


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    cfg = RunConfig()
    text = None
    if path is not None:
        text = Path(path).read_text()
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        _apply(cfg, data, _Source(str(path), text))
    over_src = _Source(None, None)
    touched = []
    for item in overrides or []:
        data = parse_override(item)
        _apply(cfg, data, over_src)
        touched += [(sec, key) for sec, body in data.items() for key in body]
    validate(cfg, _Source(str(path) if path else None, text, touched))
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def loads_config(text: str) -> RunConfig:
    cfg = RunConfig()
    _apply(cfg, tomli.loads(text), _Source("<string>", text))
    validate(cfg, _Source("<string>", text))
    return cfg


def replace_section(cfg: RunConfig, **sections) -> RunConfig:
    return dataclasses.replace(cfg, **sections)
