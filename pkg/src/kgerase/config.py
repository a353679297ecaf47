"""Run configuration: a line-oriented ``key = value`` file plus env overrides.

Example::

    # evaluation run
    corpus = data/synth
    rewriter = sentence-drop
    strategy = designated
    seed = 7

``ERASER_ENDPOINT``, ``ERASER_PARALLELISM`` and ``ERASER_TIMEOUT_SECS`` override
the matching keys.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from kgerase.errors import ConfigError
from kgerase.partition import DEFAULT_RATIO, STRATEGIES
from kgerase.reward import GAMMA, RewardParams

REWRITERS = ("identity", "redact", "sentence-drop", "remote")
EXTRACTORS = ("pattern", "sidecar", "remote")
SCOPES = ("global", "per-document")

ENV_OVERRIDES = {
    "ERASER_ENDPOINT": "endpoint",
    "ERASER_PARALLELISM": "parallelism",
    "ERASER_TIMEOUT_SECS": "timeout_secs",
}

# stage ids for seed derivation
STAGE_PARTITION = 1


@dataclass(frozen=True)
class RunConfig:
    corpus: str = ""
    out: str = "runs"
    seed: int = 0
    ratio: float = DEFAULT_RATIO
    strategy: str = "uniform"
    rewriter: str = "identity"
    scope: str = "global"
    extractor: str = "pattern"
    sidecar: str = ""
    endpoint: str = ""
    extractor_endpoint: str = ""
    generator_endpoint: str = ""
    parallelism: int = 4
    workers: int = 4
    timeout_secs: float = 30.0
    iteration: int = 0
    p_init: float = 20.0
    p_step: float = 5.0
    step_interval: int = 350
    p_max: float = 40.0
    gamma: float = GAMMA

    def __post_init__(self) -> None:
        checks = [
            (self.strategy in STRATEGIES, f"strategy must be one of {STRATEGIES}"),
            (self.rewriter in REWRITERS, f"rewriter must be one of {REWRITERS}"),
            (self.extractor in EXTRACTORS, f"extractor must be one of {EXTRACTORS}"),
            (self.scope in SCOPES, f"scope must be one of {SCOPES}"),
            (0.0 < self.ratio < 1.0, "ratio must lie in (0, 1)"),
            (self.parallelism >= 1 and self.workers >= 1, "parallelism and workers must be >= 1"),
            (self.timeout_secs > 0, "timeout_secs must be positive"),
            (self.iteration >= 0, "iteration must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            self.reward_params
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def reward_params(self) -> RewardParams:
        return RewardParams(self.p_init, self.p_step, self.step_interval, self.p_max)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _coerce(k, v) for k, v in d.items()})

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: _coerce(k, v) for k, v in kw.items() if v is not None}
        return replace(self, **kw)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    kind = _TYPES.get(key)
    if kind is None:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot parse {value!r} as {kind}") from None
    return str(value)


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_config(path: str | Path | None = None, env: dict | None = None) -> RunConfig:
    values: dict = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    env = os.environ if env is None else env
    for var, key in ENV_OVERRIDES.items():
        if env.get(var):
            values[key] = env[var]
    return RunConfig.from_dict(values)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())


def derive_seed(seed: int, *keys: int) -> int:
    """Counter-based child seed for ``(seed, *keys)``; stages replay independently."""
    words = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *keys]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
