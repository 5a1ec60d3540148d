"""Run configuration: plain ``key=value`` files overlaid by command-line flags."""

import hashlib
import math
from dataclasses import asdict, dataclass, fields, replace

from .timestepper import parse_initial_spec


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 8
    plate_elements: int = None  # defaults to n
    dt: float = 1e-5
    T: float = 1e-3
    initial: str = "sawtooth(5)"
    seed: int = 0
    eta: float = None
    snapshot_times: tuple = None  # defaults to (0, T)
    out: str = "out"
    beta_min: float = 100.0
    beta_max: float = 1000.0
    beta_count: int = 41
    workers: int = 1

    def __post_init__(self):
        if self.plate_elements is None:
            object.__setattr__(self, "plate_elements", self.n)
        if self.snapshot_times is None:
            object.__setattr__(self, "snapshot_times", (0.0, self.T))
        validate(self)

    def canonical(self):
        """Stable text form of every field except the output directory."""
        d = asdict(self)
        d.pop("out")
        return "\n".join(f"{k}={_format(v)}" for k, v in sorted(d.items()))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _format(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (tuple, list)):
        return ",".join(_format(u) for u in v)
    return str(v)


def _int(key, text):
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {text!r}") from None
    return v


def _float(key, text):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {text!r}")
    return v


def _optional_float(key, text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return _float(key, text)


def _times(key, text):
    if isinstance(text, (tuple, list)):
        return tuple(_float(key, t) for t in text)
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    return tuple(_float(key, p) for p in parts)


def _initial(key, text):
    try:
        parse_initial_spec(text)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    return str(text).strip()


PARSERS = {
    "n": _int,
    "plate_elements": _int,
    "dt": _float,
    "T": _float,
    "initial": _initial,
    "seed": _int,
    "eta": _optional_float,
    "snapshot_times": _times,
    "out": lambda key, text: str(text),
    "beta_min": _float,
    "beta_max": _float,
    "beta_count": _int,
    "workers": _int,
}
ALIASES = {"L_s": "plate_elements", "output_dir": "out"}

assert set(PARSERS) == {f.name for f in fields(SimulationConfig)}


def validate(cfg):
    if cfg.n < 1:
        raise ConfigError("n", "must be >= 1")
    if cfg.plate_elements < 1:
        raise ConfigError("plate_elements", "must be >= 1")
    if not cfg.dt > 0:
        raise ConfigError("dt", "must be > 0")
    if not cfg.T >= 0:
        raise ConfigError("T", "must be >= 0")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be >= 0")
    if cfg.eta is not None and not 0.0 <= cfg.eta <= 1.0:
        raise ConfigError("eta", "must lie in [0, 1]")
    if any(t < 0 or t > cfg.T for t in cfg.snapshot_times):
        raise ConfigError("snapshot_times", "every time must lie in [0, T]")
    if not 0 < cfg.beta_min < cfg.beta_max:
        raise ConfigError("beta_min", "window must satisfy 0 < beta_min < beta_max")
    if cfg.beta_count < 2:
        raise ConfigError("beta_count", "must be >= 2")
    if cfg.workers < 1:
        raise ConfigError("workers", "must be >= 1")


def read_config_file(path):
    """Raw ``key -> text`` pairs from a ``key=value`` file (``#`` starts a comment)."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


def parse_config(path=None, overrides=None):
    """Build a validated config; ``overrides`` (flags) beat the file, which beats defaults."""
    raw = read_config_file(path) if path else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    values = {}
    for key, text in raw.items():
        name = ALIASES.get(key, key)
        if name not in PARSERS:
            raise ConfigError(key, "unknown key")
        values[name] = PARSERS[name](key, text)
    return SimulationConfig(**values)


def with_overrides(cfg, **kw):
    return replace(cfg, **kw)
