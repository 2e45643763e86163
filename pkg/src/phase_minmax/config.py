"""Run configuration: INI files (``key = value`` sections) plus flag overrides.

The ``[run]`` section holds the shared settings; each subcommand reads its
own section.  Unknown keys are rejected so a typo cannot silently fall back
to a default.

Example::

    [run]
    manifold = s2
    grid = 800
    epsilon = 0.05
    lambda = 1
    path_nodes = 33

    [competitor]
    samples = 17
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ParameterError

MANIFOLDS = {"s2": 2, "s3": 3}
SUBCOMMANDS = ("minmax", "slide", "tube", "competitor", "index", "errors")


@dataclass
class MinmaxBlock:
    step_fraction: float = 0.5
    tol: float = 1e-10
    max_sweeps: int = 50000
    newton_tol: float = 1e-9


@dataclass
class SlideBlock:
    samples: int = 801
    grid_check: bool = True
    agree_rtol: float = 0.01


@dataclass
class TubeBlock:
    theta_star: float | None = None  # default: the latitude with mean curvature lambda
    samples: int = 2001
    fd_step: float = 1e-5
    ode_tol: float = 1e-6


@dataclass
class CompetitorBlock:
    n: int = 2
    radius: float = 1.0
    c1: float = 1.0
    m: float = 1.0
    s_minus: float = 0.5
    s_plus: float = 3.0
    tau_fraction: float = 0.5
    eps_factor: float = 0.5  # run at eps_factor * eps_tau
    samples: int = 17


@dataclass
class IndexBlock:
    kmax: int = 12
    fd_nodes: int = 400
    fd_tol: float = 1e-3


@dataclass
class ErrorsBlock:
    eps_values: tuple = (1e-10, 1e-11, 1e-12, 1e-13, 1e-14)


BLOCKS = {
    "minmax": MinmaxBlock, "slide": SlideBlock, "tube": TubeBlock,
    "competitor": CompetitorBlock, "index": IndexBlock, "errors": ErrorsBlock,
}


@dataclass
class RunConfig:
    """Resolved settings of one run.

    ``tau = None`` selects the subcommand default (0.05 A2 for ``slide``, the
    ledger value for ``competitor``).  ``tau = 0`` is allowed: it is the
    limiting case in which the verdicts are expected to fail.
    """

    manifold: str = "s2"
    grid: int = 800
    epsilon: float = 0.05
    lam: float = 1.0
    tau: float | None = None
    path_nodes: int = 33
    seed: int = 0
    minmax: MinmaxBlock = field(default_factory=MinmaxBlock)
    slide: SlideBlock = field(default_factory=SlideBlock)
    tube: TubeBlock = field(default_factory=TubeBlock)
    competitor: CompetitorBlock = field(default_factory=CompetitorBlock)
    index: IndexBlock = field(default_factory=IndexBlock)
    errors: ErrorsBlock = field(default_factory=ErrorsBlock)

    @property
    def ambient_dim(self):
        return MANIFOLDS[self.manifold]

    def validate(self):
        if self.manifold not in MANIFOLDS:
            raise ParameterError(f"manifold must be one of {sorted(MANIFOLDS)}, got {self.manifold!r}")
        _positive("grid", self.grid)
        _positive("epsilon", self.epsilon)
        if not self.epsilon < 0.25:
            raise ParameterError(f"epsilon must be < 1/4, got {self.epsilon!r}")
        _positive("lambda", self.lam)
        if self.tau is not None and not (math.isfinite(self.tau) and self.tau >= 0):
            raise ParameterError(f"tau must be >= 0, got {self.tau!r}")
        _positive("path_nodes", self.path_nodes)
        if self.path_nodes < 16:
            raise ParameterError(f"path_nodes must be >= 16, got {self.path_nodes}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        for name in BLOCKS:
            block = getattr(self, name)
            for f in fields(block):
                v = getattr(block, f.name)
                if v is None or isinstance(v, bool):
                    continue
                if isinstance(v, tuple):
                    for x in v:
                        _positive(f"{name}.{f.name}", x)
                else:
                    _positive(f"{name}.{f.name}", v)
        tb = self.tube.theta_star
        if tb is not None and not 0 < tb < math.pi:
            raise ParameterError(f"tube.theta_star must lie in (0, pi), got {tb!r}")
        ev = self.errors.eps_values
        if len(ev) < 2 or any(b >= a for a, b in zip(ev, ev[1:])):
            raise ParameterError("errors.eps_values must be strictly decreasing with >= 2 entries")
        return self

    def as_dict(self):
        raw = asdict(self)
        out = {("lambda" if k == "lam" else k): v for k, v in raw.items()}
        out["errors"]["eps_values"] = list(out["errors"]["eps_values"])
        return out


def _positive(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise ParameterError(f"{name} must be a positive number, got {v!r}")


def _convert(name, text, proto, annotation):
    """Parse ``text`` to the type of the default ``proto``."""
    text = text.strip()
    try:
        if isinstance(proto, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(proto, int):
            return int(text)
        if isinstance(proto, tuple):
            return tuple(float(x) for x in text.replace(",", " ").split())
        if isinstance(proto, str):
            return text.lower()
        if text.lower() in ("", "none", "default"):
            if "None" in str(annotation):
                return None
            raise ValueError(text)
        return float(text)
    except ValueError:
        raise ParameterError(f"cannot parse {name} = {text!r}") from None


RUN_KEYS = {"manifold": "manifold", "grid": "grid", "epsilon": "epsilon", "lambda": "lam",
            "tau": "tau", "path_nodes": "path_nodes", "seed": "seed"}


def _apply_section(obj, section, items, keymap=None):
    names = {f.name: f for f in fields(obj)}
    for key, text in items:
        attr = (keymap or {}).get(key, key)
        if attr not in names or (keymap is not None and key not in keymap):
            raise ParameterError(f"unknown key {key!r} in [{section}]")
        cur = getattr(obj, attr)
        proto = 0.0 if cur is None else cur  # optional fields are floats
        setattr(obj, attr, _convert(f"{section}.{key}", text, proto, names[attr].type))


def load_config(path=None, text=None, validate=True):
    """RunConfig from an INI file or string (defaults for anything missing).

    With ``validate=False`` the range checks are left to the caller, so that
    flag overrides can still correct a value before validation.
    """
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        elif text is not None:
            cp.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed config: {exc}") from None
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc.strerror}") from None
    cfg = RunConfig()
    for sec in cp.sections():
        items = list(cp.items(sec))
        if sec == "run":
            _apply_section(cfg, sec, items, RUN_KEYS)
        elif sec in BLOCKS:
            _apply_section(getattr(cfg, sec), sec, items)
        else:
            raise ParameterError(f"unknown config section [{sec}]")
    return cfg.validate() if validate else cfg


def apply_overrides(cfg: RunConfig, **kw):
    """Flag values (None means not given) take precedence over the file.

    The result is validated.
    """
    for key, val in kw.items():
        if val is not None:
            attr = RUN_KEYS.get(key, key)
            if attr not in RUN_KEYS.values():
                raise ParameterError(f"unknown override {key!r}")
            setattr(cfg, attr, val)
    return cfg.validate()
