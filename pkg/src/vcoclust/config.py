"""Run configuration: defaults, file parsing and validation.

A config file is plain ``key = value`` lines (``#`` comments allowed);
the keys are exactly the CLI flag names with dashes as underscores, so a
saved config echo can be replayed either way.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class RunConfig:
    j: int = 32                 # embedding size
    hidden: int = 64            # hidden layer width of both encoders
    t1: int = 200               # pretraining epochs (reconstruction + KL only)
    t2: int = 100               # alternating refinement epochs
    interval: int = 5           # per-decade epochs spent on network updates
    lr: float = 0.002
    omega: float = 1.0          # weight of the assignment-hardening loss
    beta: float = 1.0           # weight of the center-separation loss
    alpha: float = 1.0          # Student-t degrees of freedom for soft assignments
    mc_samples: int = 1         # Monte-Carlo samples per loss evaluation
    seed: int = 0
    self_loops: bool = True
    pos_weight: float = 1.0     # optional positive-class weight in edge reconstruction
    cah_input: str = "mean"     # soft assignments from posterior means or samples
    block_rows: int = 512       # streaming block height for reconstruction terms
    edges: str | None = None
    features: str | None = None
    labels: str | None = None
    dataset: str | None = None          # directory with edges/features/labels TSVs
    planetoid_dir: str | None = None    # directory with *.content / *.cites
    out: str | None = None

    def validate(self):
        if self.j < 2:
            raise ConfigError("j must be at least 2")
        if self.hidden < 1:
            raise ConfigError("hidden must be at least 1")
        if self.t1 < 0 or self.t2 < 0:
            raise ConfigError("epoch counts must be non-negative")
        if not 0 <= self.interval <= 10:
            raise ConfigError("interval must lie in [0, 10]")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.omega < 0 or self.beta < 0:
            raise ConfigError("omega and beta must be non-negative")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be at least 1")
        if self.pos_weight <= 0:
            raise ConfigError("pos_weight must be positive")
        if self.cah_input not in ("mean", "sample"):
            raise ConfigError("cah_input must be 'mean' or 'sample'")
        if self.block_rows < 1:
            raise ConfigError("block_rows must be positive")
        return self

    def echo_lines(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            out.append(f"{f.name} = {v}")
        return out


_BOOL_TOKENS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(name, kind, raw):
    raw = raw.strip()
    try:
        if kind is bool or kind == "bool":
            return _BOOL_TOKENS[raw.lower()]
        if kind is int or kind == "int":
            return int(raw)
        if kind is float or kind == "float":
            return float(raw)
        return raw
    except (KeyError, ValueError):
        raise ConfigError(f"config key {name}: cannot parse {raw!r}") from None


def parse_config(path=None, overrides=None):
    """Build a validated RunConfig from an optional file plus overrides.

    ``overrides`` maps field names to already-typed values (CLI flags) or
    strings (parsed like file values). Unknown keys are rejected.
    """
    known = {f.name for f in fields(RunConfig)}
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, _field_kind(key), raw)
    for key, val in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if val is None:
            continue
        values[key] = _coerce(key, _field_kind(key), val) if isinstance(val, str) else val
    return RunConfig(**values).validate()


def _field_kind(name):
    kinds = {
        "j": int, "hidden": int, "t1": int, "t2": int, "interval": int,
        "mc_samples": int, "seed": int, "block_rows": int,
        "lr": float, "omega": float, "beta": float, "alpha": float, "pos_weight": float,
        "self_loops": bool,
    }
    return kinds.get(name, str)


def config_to_dict(config):
    return asdict(config)
