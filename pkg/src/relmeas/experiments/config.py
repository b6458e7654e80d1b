"""Flat ``key = value`` experiment configuration (a TOML subset).

One assignment per line, ``#`` comments, no tables. Values are parsed with a
TOML reader line by line so every error can name its line.
"""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..core import GridSpec, make_gaussian_packet
from ..errors import BandLimitError, ConfigError
from ..measurement import KERNEL_KINDS

EXPERIMENTS = ("lightcone", "smoothing", "unitarity_sweep", "completeness", "check")

DEFAULT_TOLERANCES = {
    "tol_decay": 0.25,            # relative, light-cone decay length vs Compton length
    "tol_smoothing": 0.5,         # max weight ratio at the report separation
    "tol_completeness": 1e-9,
    "tol_kolmogorov": 1e-9,
    "tol_defect": 1e-3,           # max in-band defect in the unitary regime
    "tol_violation": 0.1,         # minimum D(0) in the violating regime
}


@dataclass
class ExperimentConfig:
    experiment: str = "check"
    # grid
    n_modes: int = 256
    extent: float = 200.0
    mass: float = 1.0
    band_limit: float | None = None
    # packet
    x0: float = 0.0
    p0: float = 0.0
    sigma: float = 2.0
    t0: float = 0.0
    # measurement
    t_meas: float = 5.0
    kernel: str = "sharp"
    delta_a: float | list = 1.0
    # lightcone
    n_outcomes: int = 400
    fit_min: float = 3.0
    fit_max: float = 8.0
    # smoothing
    smoothing_spacing: float = 0.05
    smoothing_span: float = 30.0
    smoothing_max_sep: float = 3.0
    smoothing_report_sep: float = 0.5
    # unitarity sweep
    band: float = 0.5
    # completeness
    refinement_levels: int = 2
    kolmogorov_split: float = 0.5
    # check
    seed: int = 20240601
    output_path: str = ""
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source_text: str = field(default="", repr=False)
    key_lines: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n_modes, self.extent, self.mass, self.band_limit)

    @property
    def delta_a_list(self) -> list[float]:
        d = self.delta_a
        return [float(v) for v in d] if isinstance(d, list) else [float(d)]

    def echo(self) -> list[str]:
        """The non-blank, non-comment config lines as parsed."""
        return [ln.strip() for ln in self.source_text.splitlines()
                if ln.strip() and not ln.strip().startswith("#")]


_INTERNAL = {"tolerances", "source_text", "key_lines"}
_FIELDS = {f.name: f for f in fields(ExperimentConfig) if f.name not in _INTERNAL}
VALID_KEYS = tuple(sorted(set(_FIELDS) | set(DEFAULT_TOLERANCES)))

_INT_KEYS = {"n_modes", "n_outcomes", "refinement_levels", "seed"}
_STR_KEYS = {"experiment", "kernel", "output_path"}


def _coerce(key, value, line):
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string", line)
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer", line)
        return value
    if key == "delta_a" and isinstance(value, list):
        if not value or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError("delta_a list must be a non-empty list of numbers", line)
        return [float(v) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number", line)
    return float(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config; raises :class:`ConfigError` with line numbers."""
    cfg = ExperimentConfig(source_text=text)
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("["):
            raise ConfigError("tables are not supported; use flat key = value lines", lineno)
        try:
            doc = tomllib.loads(s)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {s!r}: {exc}", lineno) from None
        if len(doc) != 1:
            raise ConfigError("expected exactly one key = value assignment", lineno)
        (key, value), = doc.items()
        if isinstance(value, dict):
            raise ConfigError("dotted keys and inline tables are not supported", lineno)
        if key not in VALID_KEYS:
            near = difflib.get_close_matches(key, VALID_KEYS, n=1, cutoff=0.0)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            raise ConfigError(f"unknown key {key!r}{hint}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno)
        seen[key] = lineno
        if key in DEFAULT_TOLERANCES:
            cfg.tolerances[key] = _coerce(key, value, lineno)
        else:
            setattr(cfg, key, _coerce(key, value, lineno))
    cfg.key_lines = seen
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def validate(cfg: ExperimentConfig) -> None:
    """Re-check module preconditions, attributing failures to config lines."""
    ln = cfg.key_lines.get

    def first_line(*keys):
        for k in keys:
            if k in cfg.key_lines:
                return cfg.key_lines[k]
        return None

    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}",
                          ln("experiment"))
    try:
        grid = cfg.grid
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}",
                          first_line("n_modes", "extent", "mass", "band_limit")) from None
    try:
        make_gaussian_packet(grid, cfg.x0, cfg.p0, cfg.sigma, t=cfg.t0)
    except BandLimitError as exc:
        raise ConfigError(f"packet violates the band limit: {exc}",
                          first_line("sigma", "p0", "band_limit", "n_modes")) from None
    if cfg.t_meas < cfg.t0:
        raise ConfigError("t_meas must not precede the packet slice t0", first_line("t_meas", "t0"))
    if cfg.kernel not in KERNEL_KINDS + ("sharp",):
        raise ConfigError(f"kernel must be one of {KERNEL_KINDS + ('sharp',)}", ln("kernel"))
    if any(d <= 0 for d in cfg.delta_a_list):
        raise ConfigError("delta_a must be positive", ln("delta_a"))
    if cfg.experiment == "unitarity_sweep":
        if cfg.kernel == "sharp":
            raise ConfigError("unitarity_sweep needs a gaussian or rectangular kernel",
                              ln("kernel"))
        if not 0 < cfg.band <= grid.band_limit:
            raise ConfigError(f"band must lie in (0, band_limit={grid.band_limit:.4g}]",
                              ln("band"))
    if cfg.experiment == "lightcone":
        if not 0 < cfg.fit_min < cfg.fit_max:
            raise ConfigError("need 0 < fit_min < fit_max", first_line("fit_min", "fit_max"))
        if cfg.n_outcomes < 8:
            raise ConfigError("n_outcomes must be at least 8", ln("n_outcomes"))
    if cfg.experiment == "smoothing":
        if not 0 < cfg.smoothing_spacing <= cfg.smoothing_max_sep < cfg.smoothing_span:
            raise ConfigError("need 0 < smoothing_spacing <= smoothing_max_sep < smoothing_span",
                              first_line("smoothing_spacing", "smoothing_max_sep", "smoothing_span"))
    if cfg.experiment == "completeness":
        if not 1 <= cfg.refinement_levels <= 4:
            raise ConfigError("refinement_levels must be between 1 and 4", ln("refinement_levels"))
        if not 0 < cfg.kolmogorov_split < 1:
            raise ConfigError("kolmogorov_split must lie in (0, 1)", ln("kolmogorov_split"))
    for k, v in cfg.tolerances.items():
        if not v > 0:
            raise ConfigError(f"{k} must be positive", ln(k))
