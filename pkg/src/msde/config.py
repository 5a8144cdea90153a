"""Run configuration: defaults, flat key=value config files, echo text.

Config files are a TOML-compatible subset: one ``key = value`` per line,
``#`` comments, booleans ``true``/``false``, ints, floats, optionally
quoted strings. CLI flags override file values which override defaults.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

from .exceptions import ConfigError
from .shift import ShiftParams

# Keys that live inside ShiftParams when a flat mapping is folded in.
_SHIFT_KEYS = ("k", "eta", "max_iters", "tol", "t_nbd", "k_umap")
_TOP_KEYS = ("pca_dim", "lam", "standardize", "fit_on_joint", "static_graph",
             "seed", "threads")
# "lambda" is the external spelling; it is a reserved word in Python.
_KEY_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class MsdeConfig:
    """Complete pipeline configuration; defaults reproduce the fixed
    universal hyperparameters."""

    shift: ShiftParams = ShiftParams()
    pca_dim: int = 256
    lam: float = 1e-4
    standardize: bool = True
    fit_on_joint: bool = False
    static_graph: bool = False
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.pca_dim < 1:
            raise ConfigError(f"pca_dim must be >= 1, got {self.pca_dim}")
        if not self.lam > 0.0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def flat(self) -> dict:
        """All settings as a flat mapping with external key spellings."""
        out = {key: getattr(self.shift, key) for key in _SHIFT_KEYS}
        for key in _TOP_KEYS:
            out["lambda" if key == "lam" else key] = getattr(self, key)
        return out


def _parse_scalar(text: str):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config_file(path: str | Path) -> dict:
    """Flat key=value file -> mapping with canonical internal keys."""
    values: dict = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = _KEY_ALIASES.get(key.strip(), key.strip())
        if key not in _SHIFT_KEYS and key not in _TOP_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_scalar(value)
    return values


def build_config(*overrides: dict) -> MsdeConfig:
    """Fold flat mappings onto the defaults, later mappings winning."""
    merged: dict = {}
    for layer in overrides:
        for key, value in layer.items():
            if value is None:
                continue
            merged[_KEY_ALIASES.get(key, key)] = value
    shift_kwargs = {k: merged.pop(k) for k in list(merged) if k in _SHIFT_KEYS}
    unknown = [k for k in merged if k not in _TOP_KEYS]
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        shift = replace(ShiftParams(), **shift_kwargs)
        return MsdeConfig(shift=shift, **merged)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_echo(config: MsdeConfig, inputs: dict[str, str | Path]) -> str:
    """Fully resolved settings plus input digests; enough to rerun exactly."""
    lines = [f"{key} = {_format_value(v)}" for key, v in sorted(config.flat().items())]
    for name, path in sorted(inputs.items()):
        lines.append(f"input.{name} = \"{path}\"")
        lines.append(f"input.{name}.sha256 = \"{file_digest(path)}\"")
    return "\n".join(lines) + "\n"


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# External key -> value type, used to build one CLI flag per setting.
CONFIG_FIELD_TYPES: dict[str, type] = {
    "k": int,
    "eta": float,
    "max_iters": int,
    "tol": float,
    "t_nbd": int,
    "k_umap": int,
    "pca_dim": int,
    "lambda": float,
    "standardize": bool,
    "fit_on_joint": bool,
    "static_graph": bool,
    "seed": int,
    "threads": int,
}
