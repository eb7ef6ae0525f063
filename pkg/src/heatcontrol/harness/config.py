"""Scenario configuration: INI files with one section per concern.

Example::

    [scenario]
    kind = synthesize_additive
    name = parabola-mobile

    [grid]
    n_points = 4097

    [control]
    T = 1.0
    length_l = 0.4
    epsilon = 0.05

    [state]
    y_d = parabola

State specs are a shape name followed by its parameters: ``sine k``,
``bump a b``, ``parabola``, ``hat a b c``, ``indicator a b`` (mollified),
``zero`` or ``file <path>`` (a CSV of x,y pairs interpolated onto the grid).
"""

import configparser
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..exceptions import ConfigError
from ..fields import Interval, cutoff, grid_points

KINDS = (
    "simulate",
    "synthesize_additive",
    "synthesize_multiplicative",
    "verify_static",
    "verify_boundary",
    "verify_strip",
    "check_p1",
    "study_convergence",
)

COMMAND_KINDS = {
    "simulate": ("simulate",),
    "synthesize": ("synthesize_additive", "synthesize_multiplicative"),
    "verify": ("verify_static", "verify_boundary", "verify_strip", "check_p1"),
    "study": ("study_convergence",),
}

SIMULATE_MODES = ("free", "additive", "multiplicative", "cross_check")
STAGES = ("full", "damping", "lift")
STUDY_PARAMS = ("delta", "dt", "n_points")
SHAPES = ("sine", "bump", "parabola", "hat", "indicator", "zero", "file")

_U64 = 2**64


@dataclass
class ScenarioConfig:
    """Validated scenario parameters; ``to_dict``/``from_dict`` round-trip exactly."""

    kind: str
    name: str = "scenario"
    seed: int = 0
    n_points: int = 1025
    k_max: Optional[int] = None
    dt: float = 1e-4
    T: float = 1.0
    length_l: float = 0.4
    epsilon: float = 0.05
    m: int = 2
    T_budget: Optional[float] = None
    m_grid: tuple = (1e2, 1e3, 1e4, 1e5)
    y0: str = "sine 1"
    y_d: str = "zero"
    mode: str = "free"
    stage: str = "full"
    v: float = 0.0
    v_bound: float = 10.0
    omega: tuple = (0.0, 1.0)
    strip: tuple = (0.6, 0.9)
    n_samples: int = 20
    variant: str = "plain"
    study_param: str = "delta"
    study_values: tuple = ()
    n_targets: int = 20
    target_modes: int = 32
    tolerance: float = 1e-4
    field_max: int = 512
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        for key in ("m_grid", "omega", "strip", "study_values"):
            out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for key in ("m_grid", "omega", "strip", "study_values"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        validate(cfg)
        return cfg

    @property
    def omega_interval(self):
        return Interval(*self.omega)

    @property
    def strip_interval(self):
        return Interval(*self.strip)

    @property
    def effective_k_max(self):
        return self.k_max if self.k_max is not None else self.n_points - 2


# key -> (section, type)
_KEYS = {
    "kind": ("scenario", str),
    "name": ("scenario", str),
    "seed": ("scenario", int),
    "n_points": ("grid", int),
    "k_max": ("grid", int),
    "dt": ("grid", float),
    "T": ("control", float),
    "length_l": ("control", float),
    "epsilon": ("control", float),
    "m": ("control", int),
    "T_budget": ("control", float),
    "m_grid": ("control", "floats"),
    "variant": ("control", str),
    "y0": ("state", str),
    "y_d": ("state", str),
    "mode": ("simulate", str),
    "v": ("simulate", float),
    "stage": ("synthesize", str),
    "omega": ("verify", "floats"),
    "strip": ("verify", "floats"),
    "v_bound": ("verify", float),
    "n_samples": ("verify", int),
    "tolerance": ("verify", float),
    "study_param": ("study", str),
    "study_values": ("study", "floats"),
    "n_targets": ("study", int),
    "target_modes": ("study", int),
    "field_max": ("output", int),
}


def _convert(key, raw, kind):
    try:
        if kind is str:
            return raw.strip()
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return tuple(float(t) for t in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None


def load_config(path, seed=None):
    """Parse and validate an INI scenario file; ``seed`` overrides the file's seed."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    values = {}
    known = {(sec, key) for key, (sec, _) in _KEYS.items()}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if (section, key) not in known:
                raise ConfigError(f"{section}.{key}", "unknown key")
            values[key] = _convert(key, raw, _KEYS[key][1])
    if "kind" not in values:
        raise ConfigError("kind", "missing [scenario] kind")
    if seed is not None:
        values["seed"] = seed
    state_keys = ("y0", "y_d")
    for key in state_keys:
        spec = values.get(key)
        if spec and spec.split()[0] == "file":
            target = Path(spec.split(maxsplit=1)[1])
            if not target.is_absolute():
                values[key] = f"file {(path.parent / target).resolve()}"
    cfg = ScenarioConfig(**values)
    validate(cfg)
    return cfg


def _check(cond, key, message):
    if not cond:
        raise ConfigError(key, message)


def validate(cfg):
    """Range checks with field-level messages."""
    _check(cfg.kind in KINDS, "kind", f"must be one of {KINDS}, got {cfg.kind!r}")
    _check(isinstance(cfg.seed, int) and 0 <= cfg.seed < _U64, "seed", "must be an unsigned 64-bit integer")
    _check(cfg.n_points >= 5, "n_points", f"must be >= 5, got {cfg.n_points}")
    if cfg.k_max is not None:
        _check(1 <= cfg.k_max <= cfg.n_points - 2, "k_max", f"must lie in [1, n_points - 2], got {cfg.k_max}")
    _check(cfg.dt > 0 and math.isfinite(cfg.dt), "dt", "must be positive")
    _check(cfg.T > 0 and math.isfinite(cfg.T), "T", "must be positive")
    _check(0 < cfg.length_l < 1, "length_l", f"must lie in (0, 1), got {cfg.length_l}")
    _check(cfg.epsilon > 0, "epsilon", "must be positive")
    _check(cfg.m >= 2, "m", "must be an integer >= 2")
    if cfg.T_budget is not None:
        _check(0 < cfg.T_budget < cfg.T, "T_budget", "must lie in (0, T)")
    _check(len(cfg.m_grid) > 0 and all(m > 0 for m in cfg.m_grid), "m_grid", "must be a nonempty list of positive values")
    _check(list(cfg.m_grid) == sorted(cfg.m_grid), "m_grid", "must be increasing")
    _check(cfg.mode in SIMULATE_MODES, "mode", f"must be one of {SIMULATE_MODES}")
    _check(cfg.stage in STAGES, "stage", f"must be one of {STAGES}")
    _check(cfg.variant in ("plain", "zero_tail"), "variant", "must be plain or zero_tail")
    for key in ("omega", "strip"):
        iv = getattr(cfg, key)
        _check(len(iv) == 2 and 0 <= iv[0] < iv[1] <= 1, key, f"must be two numbers 0 <= lo < hi <= 1, got {iv}")
    _check(cfg.n_samples >= 0, "n_samples", "must be >= 0")
    _check(cfg.v_bound >= 0, "v_bound", "must be >= 0")
    _check(cfg.tolerance > 0, "tolerance", "must be positive")
    _check(cfg.study_param in STUDY_PARAMS, "study_param", f"must be one of {STUDY_PARAMS}")
    _check(all(v > 0 for v in cfg.study_values), "study_values", "must be positive")
    _check(cfg.n_targets >= 0 and cfg.target_modes >= 1, "n_targets", "must be >= 0 with target_modes >= 1")
    _check(cfg.field_max >= 2, "field_max", "must be >= 2")
    for key in ("y0", "y_d"):
        parse_state(getattr(cfg, key), key)
    return cfg


def parse_state(spec, key="state"):
    """Split a state spec into (shape, params), checking arity and ranges."""
    tokens = spec.split()
    _check(len(tokens) > 0, key, "empty state spec")
    shape = tokens[0]
    _check(shape in SHAPES, key, f"unknown shape {shape!r}; expected one of {SHAPES}")
    if shape == "file":
        _check(len(tokens) == 2, key, "file spec needs exactly one path")
        return shape, (tokens[1],)
    try:
        params = tuple(float(t) for t in tokens[1:])
    except ValueError:
        raise ConfigError(key, f"non-numeric parameter in {spec!r}") from None
    arity = {"sine": 1, "bump": 2, "parabola": 0, "hat": 3, "indicator": 2, "zero": 0}[shape]
    _check(len(params) == arity, key, f"{shape} takes {arity} parameters, got {len(params)}")
    if shape == "sine":
        _check(params[0] >= 1 and params[0] == int(params[0]), key, "sine mode must be a positive integer")
    if shape in ("bump", "indicator"):
        _check(0 <= params[0] < params[1] <= 1, key, f"{shape} needs 0 <= a < b <= 1")
    if shape == "hat":
        _check(0 <= params[0] < params[1] < params[2] <= 1, key, "hat needs 0 <= a < b < c <= 1")
    return shape, params


def make_state(spec, n_points, key="state"):
    """Grid values of a state spec."""
    shape, params = parse_state(spec, key)
    x = grid_points(n_points)
    if shape == "zero":
        y = np.zeros(n_points)
    elif shape == "sine":
        y = np.sin(params[0] * math.pi * x)
    elif shape == "parabola":
        y = x * (1 - x)
    elif shape == "bump":
        a, b = params
        s = 2 * (x - a) / (b - a) - 1
        inside = np.abs(s) < 1
        y = np.zeros(n_points)
        y[inside] = np.exp(1 - 1 / (1 - s[inside] ** 2))
    elif shape == "hat":
        a, b, c = params
        y = np.interp(x, [a, b, c], [0.0, 1.0, 0.0], left=0.0, right=0.0)
    elif shape == "indicator":
        a, b = params
        margin = min(0.05, 0.999 * (b - a) / 4)
        y = cutoff(x, Interval(a, b), margin)
    else:
        try:
            data = np.loadtxt(params[0], delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError(key, f"cannot read {params[0]}: {exc}") from None
        _check(data.shape[1] == 2, key, "state file needs two columns x,y")
        y = np.interp(x, data[:, 0], data[:, 1])
    y = np.asarray(y, dtype=float)
    y[0] = y[-1] = 0.0
    return y
