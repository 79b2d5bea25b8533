"""Run configuration: plain key=value files with command-line overrides."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .evolution import SchemeConfig
from .harmonics import SpectralField, character, get_dual, parse_group, random_band_limited, torus_mode
from .propagator import WaveParams


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    group: str = "torus2"
    bandlimit: int = 8
    oversample: float = 1.0
    alpha: float = 0.5
    b: float = 1.0
    m2: float = 0.0
    p: float = 2.0
    epsilon: float = 1.0
    t_end: float = 10.0
    dt: float = 1e-2
    scheme: str = "midpoint"
    seed: int = 0
    output_dir: str = "out"
    u0: str = "constant:1"
    u1: str = "constant:1"
    nonlinear: bool = True
    threshold: float = 1e4

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, _coerce(f.name, getattr(self, f.name), f.type))
        try:
            self.group_spec()
            self.wave_params()
            self.scheme_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.epsilon < 0 or not self.t_end > 0:
            raise ConfigError("epsilon must be nonnegative and t_end positive")
        if self.threshold < 1e4:
            raise ConfigError("threshold must be at least 1e4")
        for key in ("u0", "u1"):
            _parse_builder(getattr(self, key))

    def group_spec(self):
        return parse_group(self.group, self.bandlimit, self.oversample)

    def wave_params(self):
        return WaveParams(self.alpha, self.b, self.m2, self.p)

    def scheme_config(self):
        return SchemeConfig(self.scheme, self.dt, True, self.nonlinear)

    def data(self):
        """Initial pair (u0, u1) as SpectralFields, both scaled by epsilon."""
        dual = get_dual(self.group_spec())
        return (build_data(self.u0, dual) * self.epsilon, build_data(self.u1, dual) * self.epsilon)

    def as_dict(self):
        return asdict(self)

    def config_hash(self):
        # where outputs go does not change them
        d = self.as_dict()
        d.pop("output_dir")
        text = json.dumps(d, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **kw):
        d = self.as_dict()
        d.update(kw)
        return RunConfig(**d)


_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(name, value, typ):
    typ = _TYPES.get(typ, typ) if isinstance(typ, str) else typ
    try:
        if typ is bool:
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return low in ("true", "1", "yes")
            return bool(value)
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {value!r}") from None


KNOWN_KEYS = tuple(f.name for f in fields(RunConfig))


def parse_config_text(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        out[key] = value
    return out


def load_config(path=None, overrides=None):
    """RunConfig from a key=value file, then non-None overrides on top."""
    values = {}
    if path:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    for k, v in (overrides or {}).items():
        if k not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {k!r}")
        if v is not None:
            values[k] = v
    return RunConfig(**values)


def _parse_builder(text):
    parts = str(text).split(":")
    kind = parts[0]
    try:
        if kind == "constant" and len(parts) == 2:
            return kind, (float(parts[1]),)
        if kind == "mode" and len(parts) == 3:
            k = tuple(int(x) for x in parts[1].split(","))
            return kind, (k, float(parts[2]))
        if kind == "random" and len(parts) == 3:
            return kind, (int(parts[1]), float(parts[2]))
        if kind == "zero" and len(parts) == 1:
            return kind, ()
    except ValueError:
        pass
    raise ConfigError(f"bad data builder {text!r}; use constant:c, mode:k:amp, random:seed:decay or zero")


def build_data(text, dual) -> SpectralField:
    """Field from a builder name.

    ``mode:k:amp`` is cos(k.x) on the torus (k comma separated) and amp
    times the character of the spin-k representation on SO(3).
    """
    kind, args = _parse_builder(text)
    out = SpectralField.zeros(dual, real=True)
    if kind == "constant":
        out.data[0] = args[0]
    elif kind == "random":
        out = random_band_limited(dual, args[0], args[1])
    elif kind == "mode":
        k, amp = args
        if dual.group.kind == "so3":
            if len(k) != 1:
                raise ConfigError("SO(3) modes take a single spin index")
            out = character(dual, k[0], amp)
            out.real = True
        else:
            if len(k) != dual.group.n:
                raise ConfigError(f"torus mode needs {dual.group.n} indices")
            if max(abs(np.asarray(k))) > dual.group.bandlimit:
                raise ConfigError("mode index exceeds the bandlimit")
            out = torus_mode(dual, k, amp, real=True)
    return out
