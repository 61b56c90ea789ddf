"""Flat ``key = value`` run configuration.

Keys without a prefix set priors, sampler and run options. ``upper.<key>``
overrides a prior field for the type layer only, and ``synth.<key>`` sets a
field of the data generator. Lines starting with ``#`` or ``;`` are
comments.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .model import PriorConfig
from .oracle import SynthConfig
from .sampler import GibbsConfig

_SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    dims: int = 8
    holdout_fraction: float = 0.1
    smoothing: float = 0.5
    restarts: int = 1
    init: str = "association"
    init_threshold: float = 0.8
    min_attr_freq: float = 0.0
    priors: PriorConfig = field(default_factory=PriorConfig)
    upper_priors: PriorConfig | None = None
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        if self.dims < 0:
            raise ConfigError("dims must be nonnegative")
        if not 0 < self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must lie in (0, 1)")
        if self.init not in ("association", "random"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, gibbs=dataclasses.replace(self.gibbs, seed=seed),
                                   synth=dataclasses.replace(self.synth, seed=seed))

    def echo(self) -> dict:
        """Plain-dict copy of every setting, for artifacts."""
        return dataclasses.asdict(self)


def _optional(conv):
    def parse(text):
        return None if text.lower() in ("", "none") else conv(text)
    return parse


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _pair(conv):
    def parse(text):
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected two comma-separated values, got {text!r}")
        return tuple(conv(p) for p in parts)
    return parse


_SPECIAL = {
    "burn_in": _optional(int),
    "reliability_range": _pair(float),
    "type_reliability_range": _optional(_pair(float)),
    "type_floor": _optional(float),
    "dims_per_type": _optional(_pair(int)),
}


def _converter(name, default):
    if name in _SPECIAL:
        return _SPECIAL[name]
    if isinstance(default, bool):
        return _bool
    if isinstance(default, (int, float, str)):
        return type(default)
    raise ConfigError(f"{name} cannot be set from a config file")


def _apply(obj, values: dict, where: str):
    fields = {f.name for f in dataclasses.fields(obj)}
    changes = {}
    for key, text in values.items():
        if key not in fields:
            raise ConfigError(f"unknown {where}key {key!r}")
        try:
            changes[key] = _converter(key, getattr(obj, key))(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {where}{key}: {exc}") from None
    return dataclasses.replace(obj, **changes)


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    groups = {"": {}, "upper.": {}, "synth.": {}}
    for key, value in parser.items(_SECTION):
        prefix = next((p for p in ("upper.", "synth.") if key.startswith(p)), "")
        groups[prefix][key[len(prefix):]] = value.strip()

    prior_keys = {f.name for f in dataclasses.fields(PriorConfig)}
    gibbs_keys = {f.name for f in dataclasses.fields(GibbsConfig)}
    top = groups[""]
    base = RunConfig()
    priors = _apply(base.priors, {k: v for k, v in top.items() if k in prior_keys}, "")
    gibbs = _apply(base.gibbs, {k: v for k, v in top.items() if k in gibbs_keys}, "")
    rest = {k: v for k, v in top.items() if k not in prior_keys | gibbs_keys}
    for key in ("priors", "upper_priors", "gibbs", "synth"):
        if key in rest:
            raise ConfigError(f"{key!r} is a group, set its fields instead")
    upper = _apply(priors, groups["upper."], "upper.") if groups["upper."] else None
    synth = _apply(base.synth, groups["synth."], "synth.")
    return _apply(dataclasses.replace(base, priors=priors, upper_priors=upper, gibbs=gibbs, synth=synth),
                  rest, "")


def load_config(path=None) -> RunConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
