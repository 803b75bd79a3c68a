"""Experiment configuration files (TOML).

Grammar::

    [grid]      T = <float > 0>, n_steps = <int >= 1>
    [kernel]    family = "polygonal" | "mollifier", epsilons = [<float>, ...]
    [sde]       x = <float>, interpretation = "stratonovich" | "ito"
    [sde.drift] family = "zero" | "linear" | "affine_sine" | "logistic_clipped",
                a, c, K = <float>
    [sde.sigma] family = "constant" | "piecewise_constant" | "sine",
                value | breakpoints + values | offset + amplitude + frequency
    [mc]        p, q (q > p), n_samples, seed, pairs = ["StraVsWZ", "ItoVsWick"],
                estimator = "mc" | "closed_form"
    [output]    csv, svg, subsample
    [checks]    slope_range = [lo, hi]   (optional; converge exits 2 outside it)

Every key has a default; unknown sections or keys are rejected so typos do
not pass silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .grid import TimeGrid
from .kernels import FAMILIES
from .models import (
    DRIFT_FAMILIES,
    INTERPRETATIONS,
    SIGMA_FAMILIES,
    DriftSpec,
    SDEConfig,
    SigmaSpec,
)
from .rates import PAIRS

ESTIMATORS = ("mc", "closed_form")

_SCHEMA = {
    "grid": {"T", "n_steps"},
    "kernel": {"family", "epsilons"},
    "sde": {"x", "interpretation", "drift", "sigma"},
    "sde.drift": {"family", "a", "c", "K"},
    "sde.sigma": {"family", "value", "breakpoints", "values", "offset", "amplitude", "frequency"},
    "mc": {"p", "q", "n_samples", "seed", "pairs", "estimator"},
    "output": {"csv", "svg", "subsample"},
    "checks": {"slope_range"},
}


@dataclass
class ExperimentConfig:
    T: float = 1.0
    n_steps: int = 256
    kernel_family: str = "polygonal"
    epsilons: list = field(default_factory=lambda: [0.0625])
    drift: DriftSpec = field(default_factory=DriftSpec.zero)
    sigma: SigmaSpec = field(default_factory=lambda: SigmaSpec.constant(1.0))
    x: float = 1.0
    interpretation: str = "stratonovich"
    p: float = 2.0
    q: float = 3.0
    n_samples: int = 1000
    seed: int | None = None
    pairs: list = field(default_factory=lambda: list(PAIRS))
    estimator: str = "mc"
    csv: str | None = None
    svg: str | None = None
    subsample: int = 1
    slope_range: tuple | None = None

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.n_steps)

    def sde(self, interpretation: str | None = None) -> SDEConfig:
        return SDEConfig(self.drift, self.sigma, self.x, self.grid, interpretation or self.interpretation)


def _get(section: dict, key: str, prefix: str, kind, default):
    if key not in section:
        return default
    value = section[key]
    name = f"{prefix}.{key}"
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(name, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(name, f"expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(name, f"expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(name, f"expected a list, got {value!r}")
        return value
    raise AssertionError(kind)


def _check_keys(raw: dict):
    for sec, body in raw.items():
        if sec not in {"grid", "kernel", "sde", "mc", "output", "checks"}:
            raise ConfigError(sec, "unknown section")
        if not isinstance(body, dict):
            raise ConfigError(sec, "expected a table")
        for key, val in body.items():
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
            if sec == "sde" and key in ("drift", "sigma"):
                if not isinstance(val, dict):
                    raise ConfigError(f"sde.{key}", "expected a table")
                for sub in val:
                    if sub not in _SCHEMA[f"sde.{key}"]:
                        raise ConfigError(f"sde.{key}.{sub}", "unknown key")


def _numbers(values, name):
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError(name, "expected a list of numbers")
    return [float(v) for v in values]


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed TOML document and build the config."""
    _check_keys(raw)
    cfg = ExperimentConfig()
    g = raw.get("grid", {})
    cfg.T = _get(g, "T", "grid", float, cfg.T)
    cfg.n_steps = _get(g, "n_steps", "grid", int, cfg.n_steps)
    if not cfg.T > 0:
        raise ConfigError("grid.T", "must be positive")
    if cfg.n_steps < 1:
        raise ConfigError("grid.n_steps", "must be >= 1")

    k = raw.get("kernel", {})
    cfg.kernel_family = _get(k, "family", "kernel", str, cfg.kernel_family)
    if cfg.kernel_family not in FAMILIES:
        raise ConfigError("kernel.family", f"unknown family {cfg.kernel_family!r}; expected one of {FAMILIES}")
    eps = _numbers(_get(k, "epsilons", "kernel", list, cfg.epsilons), "kernel.epsilons")
    if not eps:
        raise ConfigError("kernel.epsilons", "must be nonempty")
    if any(e <= 0 for e in eps):
        raise ConfigError("kernel.epsilons", "must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("kernel.epsilons", "must be strictly decreasing")
    cfg.epsilons = eps

    s = raw.get("sde", {})
    cfg.x = _get(s, "x", "sde", float, cfg.x)
    cfg.interpretation = _get(s, "interpretation", "sde", str, cfg.interpretation)
    if cfg.interpretation not in INTERPRETATIONS:
        raise ConfigError("sde.interpretation", f"expected one of {INTERPRETATIONS}")
    d = s.get("drift", {})
    fam = _get(d, "family", "sde.drift", str, "zero")
    if fam not in DRIFT_FAMILIES:
        raise ConfigError("sde.drift.family", f"unknown family {fam!r}; expected one of {DRIFT_FAMILIES}")
    try:
        cfg.drift = DriftSpec(fam, _get(d, "a", "sde.drift", float, 0.0), _get(d, "c", "sde.drift", float, 0.0),
                              _get(d, "K", "sde.drift", float, 1.0))
    except DomainError as exc:
        raise ConfigError("sde.drift", str(exc)) from None
    sg = s.get("sigma", {})
    fam = _get(sg, "family", "sde.sigma", str, "constant")
    if fam not in SIGMA_FAMILIES:
        raise ConfigError("sde.sigma.family", f"unknown family {fam!r}; expected one of {SIGMA_FAMILIES}")
    try:
        cfg.sigma = SigmaSpec(
            fam,
            value=_get(sg, "value", "sde.sigma", float, 1.0),
            breakpoints=tuple(_numbers(_get(sg, "breakpoints", "sde.sigma", list, []), "sde.sigma.breakpoints")),
            values=tuple(_numbers(_get(sg, "values", "sde.sigma", list, []), "sde.sigma.values")),
            offset=_get(sg, "offset", "sde.sigma", float, 0.0),
            amplitude=_get(sg, "amplitude", "sde.sigma", float, 0.0),
            frequency=_get(sg, "frequency", "sde.sigma", float, 1.0),
        )
    except DomainError as exc:
        raise ConfigError("sde.sigma", str(exc)) from None

    m = raw.get("mc", {})
    cfg.p = _get(m, "p", "mc", float, cfg.p)
    cfg.q = _get(m, "q", "mc", float, cfg.q)
    if cfg.p < 1:
        raise ConfigError("mc.p", "must be >= 1")
    if not cfg.q > cfg.p:
        raise ConfigError("mc.q", f"the rate bound requires q > p (got q={cfg.q:g}, p={cfg.p:g})")
    cfg.n_samples = _get(m, "n_samples", "mc", int, cfg.n_samples)
    if cfg.n_samples < 2:
        raise ConfigError("mc.n_samples", "must be >= 2")
    cfg.seed = _get(m, "seed", "mc", int, None)
    if cfg.seed is not None and cfg.seed < 0:
        raise ConfigError("mc.seed", "must be nonnegative")
    cfg.pairs = _get(m, "pairs", "mc", list, cfg.pairs)
    bad = [pr for pr in cfg.pairs if pr not in PAIRS]
    if bad or not cfg.pairs:
        raise ConfigError("mc.pairs", f"expected a nonempty subset of {PAIRS}, got {cfg.pairs!r}")
    cfg.estimator = _get(m, "estimator", "mc", str, cfg.estimator)
    if cfg.estimator not in ESTIMATORS:
        raise ConfigError("mc.estimator", f"expected one of {ESTIMATORS}")
    if cfg.estimator == "closed_form":
        if not cfg.drift.is_linear:
            raise ConfigError("mc.estimator", "closed_form needs a linear drift family")
        if cfg.p != 2:
            raise ConfigError("mc.estimator", "closed_form is available for p = 2 only")

    o = raw.get("output", {})
    cfg.csv = _get(o, "csv", "output", str, None)
    cfg.svg = _get(o, "svg", "output", str, None)
    cfg.subsample = _get(o, "subsample", "output", int, cfg.subsample)
    if cfg.subsample < 1:
        raise ConfigError("output.subsample", "must be >= 1")

    c = raw.get("checks", {})
    if "slope_range" in c:
        sr = _numbers(_get(c, "slope_range", "checks", list, []), "checks.slope_range")
        if len(sr) != 2 or sr[0] > sr[1]:
            raise ConfigError("checks.slope_range", "expected [lo, hi] with lo <= hi")
        cfg.slope_range = tuple(sr)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("--config", f"malformed TOML in {path}: {exc}") from None
    return config_from_dict(raw)
