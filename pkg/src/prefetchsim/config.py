"""Configuration files: flat ``key = value`` sections, presets, effective config.

A config file is INI-style. Every key has a built-in default, a file may
override any subset, and command-line ``--set section.key=value`` overrides
beat the file (flag > file > default). Unknown sections or keys are errors
that name the offending key, so typos cannot silently fall back to defaults.

Recognized sections and keys (defaults in parentheses):

  [run]             prefetcher (pythia) | stride | nextline | none
                    seed (1), nextline_degree (1)
  [features]        features (pc+delta, none+last4deltas)
                    page_scoped_delta (true), allow_branch_stub (false)
  [actions]         offsets (-6,-3,-1,0,1,3,4,5,10,11,12,16,22,23,30,32)
  [rewards]         r_at (20), r_al (12), r_cl (-12), r_in_h (-14),
                    r_in_l (-8), r_np_h (-2), r_np_l (-4)
  [hyperparameters] alpha (0.0065), gamma (0.556), epsilon (0.002)
  [qvstore]         planes (3), plane_shifts (0,2,5), feature_bins (128),
                    hash (multiply_shift), update_mode (all_vaults)
  [evalqueue]       entries (256)
  [cache]           size_bytes (2097152), line_bytes (64), ways (16),
                    fill_latency_ticks (20)
  [bandwidth]       window_ticks (64), peak_transfers_per_tick (1.0),
                    threshold_fraction (0.5)

The named presets ``basic``, ``strict`` and ``bw-oblivious`` resolve to
config files shipped with the package; the directory can be redirected with
the PREFETCHSIM_CONFIG_DIR environment variable.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .agent import DEFAULT_ACTIONS, DEFAULT_FEATURES, AgentConfig, PREFETCHER_KINDS
from .evalqueue import RewardConfig
from .memsim import BandwidthConfig, CacheConfig

PRESETS = ("basic", "strict", "bw-oblivious")

CONFIG_DIR_ENV = "PREFETCHSIM_CONFIG_DIR"


class ConfigError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple:
    return tuple(int(part.strip()) for part in text.split(",") if part.strip())


def _parse_str_list(text: str) -> tuple:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _parse_feature_list(text: str) -> tuple:
    from .features import parse_feature

    names = _parse_str_list(text)
    for name in names:
        spec = parse_feature(name)  # raises ValueError on malformed names
        if spec.control == "none" and spec.data == "none":
            raise ValueError("feature none+none carries no information")
    return names


# section -> key -> (parser, default)
_SCHEMA = {
    "run": {
        "prefetcher": (str.strip, "pythia"),
        "seed": (int, 1),
        "nextline_degree": (int, 1),
    },
    "features": {
        "features": (_parse_feature_list, DEFAULT_FEATURES),
        "page_scoped_delta": (_parse_bool, True),
        "allow_branch_stub": (_parse_bool, False),
    },
    "actions": {
        "offsets": (_parse_int_list, DEFAULT_ACTIONS),
    },
    "rewards": {
        "r_at": (float, 20.0),
        "r_al": (float, 12.0),
        "r_cl": (float, -12.0),
        "r_in_h": (float, -14.0),
        "r_in_l": (float, -8.0),
        "r_np_h": (float, -2.0),
        "r_np_l": (float, -4.0),
    },
    "hyperparameters": {
        "alpha": (float, 0.0065),
        "gamma": (float, 0.556),
        "epsilon": (float, 0.002),
    },
    "qvstore": {
        "planes": (int, 3),
        "plane_shifts": (_parse_int_list, (0, 2, 5)),
        "feature_bins": (int, 128),
        "hash": (str.strip, "multiply_shift"),
        "update_mode": (str.strip, "all_vaults"),
    },
    "evalqueue": {
        "entries": (int, 256),
    },
    "cache": {
        "size_bytes": (int, 2 * 1024 * 1024),
        "line_bytes": (int, 64),
        "ways": (int, 16),
        "fill_latency_ticks": (int, 20),
    },
    "bandwidth": {
        "window_ticks": (int, 64),
        "peak_transfers_per_tick": (float, 1.0),
        "threshold_fraction": (float, 0.5),
    },
}


@dataclass
class SimConfig:
    """Everything one experiment needs, flattened from the config sections."""

    values: dict = field(default_factory=dict)

    @classmethod
    def defaults(cls) -> "SimConfig":
        vals = {}
        for section, keys in _SCHEMA.items():
            for key, (_, default) in keys.items():
                vals[(section, key)] = default
        return cls(vals)

    def get(self, section: str, key: str):
        return self.values[(section, key)]

    def set_text(self, section: str, key: str, text: str) -> None:
        try:
            parser, _ = _SCHEMA[section][key]
        except KeyError:
            raise ConfigError(f"unknown config key '{key}' in section [{section}]") from None
        try:
            self.values[(section, key)] = parser(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}") from None

    @property
    def prefetcher(self) -> str:
        return self.get("run", "prefetcher")

    def agent_config(self) -> AgentConfig:
        try:
            return AgentConfig(
                alpha=self.get("hyperparameters", "alpha"),
                gamma=self.get("hyperparameters", "gamma"),
                epsilon=self.get("hyperparameters", "epsilon"),
                action_list=self.get("actions", "offsets"),
                features=self.get("features", "features"),
                reward_config=RewardConfig(
                    r_at=self.get("rewards", "r_at"),
                    r_al=self.get("rewards", "r_al"),
                    r_cl=self.get("rewards", "r_cl"),
                    r_in_h=self.get("rewards", "r_in_h"),
                    r_in_l=self.get("rewards", "r_in_l"),
                    r_np_h=self.get("rewards", "r_np_h"),
                    r_np_l=self.get("rewards", "r_np_l"),
                ),
                rng_seed=self.get("run", "seed"),
                eq_entries=self.get("evalqueue", "entries"),
                num_planes=self.get("qvstore", "planes"),
                plane_shifts=self.get("qvstore", "plane_shifts"),
                feature_bins=self.get("qvstore", "feature_bins"),
                hash_kind=self.get("qvstore", "hash"),
                update_mode=self.get("qvstore", "update_mode"),
                page_scoped_delta=self.get("features", "page_scoped_delta"),
                allow_branch_stub=self.get("features", "allow_branch_stub"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def cache_config(self) -> CacheConfig:
        try:
            return CacheConfig(
                size_bytes=self.get("cache", "size_bytes"),
                line_bytes=self.get("cache", "line_bytes"),
                ways=self.get("cache", "ways"),
                fill_latency_ticks=self.get("cache", "fill_latency_ticks"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def bandwidth_config(self) -> BandwidthConfig:
        try:
            return BandwidthConfig(
                window_ticks=self.get("bandwidth", "window_ticks"),
                peak_transfers_per_tick=self.get("bandwidth", "peak_transfers_per_tick"),
                threshold_fraction=self.get("bandwidth", "threshold_fraction"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def canonical_text(self) -> str:
        lines = []
        for (section, key) in sorted(self.values):
            value = self.values[(section, key)]
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{section}.{key}={value}")
        return "\n".join(lines)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:12]


def _preset_path(name: str) -> Path:
    filename = f"{name}.cfg"
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        return Path(env_dir) / filename
    return Path(str(resources.files("prefetchsim").joinpath("configs", filename)))


def load_config(source: str | Path | None = None, overrides=()) -> SimConfig:
    """Build the effective config: defaults, then a file/preset, then overrides.

    source may be a preset name (basic, strict, bw-oblivious), a file path,
    or None for pure defaults. overrides are ``section.key=value`` strings.
    """
    cfg = SimConfig.defaults()
    if source is not None:
        path = _preset_path(str(source)) if str(source) in PRESETS else Path(source)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}] in {path}")
            for key, text in parser.items(section):
                cfg.set_text(section, key, text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, text = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} is not of the form section.key")
        section, key = dotted.split(".", 1)
        cfg.set_text(section.strip(), key.strip(), text.strip())
    return cfg
