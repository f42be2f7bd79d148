"""Run configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    warmup_len: int = 100
    kernel_sigma: float | str = "auto"  # number, "auto" or "median"
    uncertainty_c: float = 4.0
    k_max: int | None = None  # None -> min(10, warmup_len - 1)
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-10
    mean_update: str = "exact"
    variance_normalization: str = "mean"
    # aggregation
    pooling: str = "sliding"
    window: int = 30
    stride: int = 1
    bandwidth: float | None = None
    smoothing_sigma: float = 5.0
    k_actions: int | None = None
    # evaluation
    tolerance_frames: int = 2
    credit_rule: str = "credited"

    def validate(self) -> "RunConfig":
        if self.warmup_len < 2:
            raise ConfigError("warmup_len must be >= 2")
        if isinstance(self.kernel_sigma, str):
            if self.kernel_sigma not in ("auto", "median"):
                raise ConfigError("kernel_sigma must be a positive number, 'auto' or 'median'")
        elif not self.kernel_sigma > 0:
            raise ConfigError("kernel_sigma must be > 0")
        if not self.uncertainty_c > 0:
            raise ConfigError("uncertainty_c must be > 0")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        for name in ("max_iter", "window", "stride"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.tol < 0:
            raise ConfigError("tol must be >= 0")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError("bandwidth must be > 0")
        if not self.smoothing_sigma > 0:
            raise ConfigError("smoothing_sigma must be > 0")
        if self.k_actions is not None and self.k_actions < 1:
            raise ConfigError("k_actions must be >= 1")
        if self.tolerance_frames < 0:
            raise ConfigError("tolerance_frames must be >= 0")
        choices = {
            "mean_update": ("exact", "literal"),
            "variance_normalization": ("mean", "sum"),
            "pooling": ("sliding", "peaks"),
            "credit_rule": ("credited", "emitted"),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {', '.join(allowed)}")
        return self

    def init_kwargs(self) -> dict:
        return dict(kernel_sigma=self.kernel_sigma, uncertainty_c=self.uncertainty_c, k_max=self.k_max,
                    seed=self.seed, max_iter=self.max_iter, tol=self.tol,
                    variance_normalization=self.variance_normalization)

    def to_dict(self) -> dict:
        return asdict(self)


_INT = {"warmup_len", "k_max", "seed", "max_iter", "window", "stride", "k_actions", "tolerance_frames"}
_FLOAT = {"uncertainty_c", "tol", "bandwidth", "smoothing_sigma"}
_STR = {"mean_update", "variance_normalization", "pooling", "credit_rule"}


def coerce(key: str, raw: str):
    key = key.strip().replace("-", "_")
    if key not in {f.name for f in fields(RunConfig)}:
        raise ConfigError(f"unknown config key {key!r}")
    value = raw.strip()
    if value.lower() in ("none", "") and key in ("k_max", "bandwidth", "k_actions"):
        return key, None
    try:
        if key in _INT:
            return key, int(value)
        if key in _FLOAT:
            return key, float(value)
        if key in _STR:
            return key, value
        if key == "kernel_sigma":
            return key, value.lower() if value.lower() in ("auto", "median") else float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    raise ConfigError(f"unhandled config key {key!r}")


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        k, v = coerce(key, raw)
        values[k] = v
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file, then ``overrides`` (already typed)."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return RunConfig(**values).validate()
