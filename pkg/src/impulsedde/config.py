"""Plain-text run configuration: parse, validate, emit.

The schema is INI-style sections of key = value lines; lists are comma
separated. Unknown sections or keys are errors that name the offender,
so a typo cannot silently fall back to a default. emit_config writes the
canonical form (every key explicit, floats at 17 significant digits), and
parse_config(emit_config(cfg)) reproduces cfg exactly; a file already in
canonical form round-trips byte for byte.

The command line fixes the period at omega = 2*pi: both built-in problem
kinds drive 2*pi-periodic forcing. The library API underneath takes any
omega. Defaults: scheme ETD2, tol 1e-8, max_iter 200, seed 0. The
default step is the nominal 1e-3 landed on the period grid: the linear
kind uses omega / round(omega / 1e-3) = omega/6283 so the period is a
whole number of steps, and the heat kind uses the impulse-aligned grid
of heat_grid (6284 nodes per period). An explicit h is honored exactly
and must make the period, the delay, and the impulse times grid
multiples.
"""
import configparser
import dataclasses
import math

from .errors import ConfigurationError
from .heat import HeatConfig

OMEGA = 2.0 * math.pi

# nominal 1e-3 landed on the period grid, so the default is commensurate
_LINEAR_DEFAULT_H = OMEGA / round(OMEGA / 1e-3)

_FLOAT_FMT = "%.17g"


@dataclasses.dataclass
class RunConfig:
    """Everything a subcommand needs, after validation and defaulting."""

    kind: str = "heat"
    eigenvalues: tuple = (1.0,)
    forcing_amplitude: float = 1.0
    delay_r: float = 0.0
    impulse_times: tuple = ()
    impulse_values: tuple = ()
    heat: HeatConfig = dataclasses.field(default_factory=HeatConfig)
    grid_step: float = None
    scheme: str = "ETD2"
    tol: float = 1e-8
    max_iter: int = 200
    n_periods: int = 10
    t_end: float = OMEGA
    out_dir: str = "run_out"
    seed: int = 0
    subcommand: str = None


# section -> key -> (parser, default). Defaults of None mean "resolved
# later from the problem kind" and are omitted by emit_config.
def _floats(text):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


_SCHEMA = {
    "problem": {
        "kind": str,
        "eigenvalues": _floats,
        "forcing_amplitude": float,
        "delay_r": float,
        "impulse_times": _floats,
        "impulse_values": _floats,
    },
    "heat": {
        "n_modes": int,
        "p": int,
        "r": float,
        "history": str,
        "history_norm": float,
        "forcing_amplitude": float,
        "lipschitz_scale": str,
    },
    "integrator": {
        "h": float,
        "scheme": str,
    },
    "solver": {
        "tol": float,
        "max_iter": int,
        "n_periods": int,
    },
    "simulate": {
        "t_end": float,
    },
    "output": {
        "directory": str,
    },
    "random": {
        "seed": int,
    },
}


def _read_ini(text):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError("config syntax: %s" % exc) from exc
    return parser


def parse_config_text(text):
    """Parse and validate the documented schema from a string."""
    parser = _read_ini(text)
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError("unknown config section [%s]" % section)
        keys = _SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigurationError(
                    "unknown key '%s' in section [%s]" % (key, section))
            try:
                values[(section, key)] = keys[key](raw)
            except ValueError as exc:
                raise ConfigurationError(
                    "bad value for '%s' in [%s]: %s" % (key, section, exc)
                ) from exc

    def get(section, key, default):
        return values.get((section, key), default)

    kind = get("problem", "kind", "heat")
    if kind not in ("heat", "linear"):
        raise ConfigurationError(
            "problem kind must be 'heat' or 'linear', got '%s'" % kind)

    heat = HeatConfig(
        n_modes=get("heat", "n_modes", 16),
        impulse_count_p=get("heat", "p", 2),
        delay_r=get("heat", "r", 0.1),
        grid_step=get("integrator", "h", None),
        initial_history=get("heat", "history", "random"),
        history_norm=get("heat", "history_norm", 1.0),
        forcing_amplitude=get("heat", "forcing_amplitude", 1.0),
        lipschitz_scale=get("heat", "lipschitz_scale", "declared"),
        seed=get("random", "seed", 0),
    )

    cfg = RunConfig(
        kind=kind,
        eigenvalues=get("problem", "eigenvalues", (1.0,)),
        forcing_amplitude=get("problem", "forcing_amplitude", 1.0),
        delay_r=get("problem", "delay_r", 0.0),
        impulse_times=get("problem", "impulse_times", ()),
        impulse_values=get("problem", "impulse_values", ()),
        heat=heat,
        grid_step=get("integrator", "h", None),
        scheme=get("integrator", "scheme", "ETD2"),
        tol=get("solver", "tol", 1e-8),
        max_iter=get("solver", "max_iter", 200),
        n_periods=get("solver", "n_periods", 10),
        t_end=get("simulate", "t_end", OMEGA),
        out_dir=get("output", "directory", "run_out"),
        seed=get("random", "seed", 0),
    )
    _validate(cfg)
    return cfg


def parse_config(path):
    """Parse and validate the documented schema from a file."""
    with open(path, "r") as fh:
        return parse_config_text(fh.read())


def resolved_step(cfg):
    """The grid step after kind-dependent defaulting.

    The nominal default is h = 1e-3 * omega / (2*pi); both kinds land it
    on the period grid (omega/6283 for linear, heat_grid for heat) so a
    bare config is always commensurate. An explicit h is used as given.
    """
    if cfg.kind == "heat":
        from .heat import heat_grid
        return heat_grid(cfg.heat)[1]
    return cfg.grid_step if cfg.grid_step is not None else _LINEAR_DEFAULT_H


def _validate(cfg):
    if cfg.scheme.upper() not in ("ETD1", "ETD2"):
        raise ConfigurationError("scheme must be ETD1 or ETD2")
    if not (cfg.tol > 0.0 and math.isfinite(cfg.tol)):
        raise ConfigurationError("tol must be finite and > 0")
    if cfg.max_iter < 1:
        raise ConfigurationError("max_iter must be >= 1")
    if cfg.n_periods < 1:
        raise ConfigurationError("n_periods must be >= 1")
    if not (cfg.t_end > 0.0 and math.isfinite(cfg.t_end)):
        raise ConfigurationError("t_end must be finite and > 0")
    if len(cfg.impulse_times) != len(cfg.impulse_values):
        raise ConfigurationError(
            "impulse_times and impulse_values must have equal length")
    if cfg.kind == "linear":
        if not cfg.eigenvalues:
            raise ConfigurationError("linear kind needs eigenvalues")
        h = cfg.grid_step if cfg.grid_step is not None else _LINEAR_DEFAULT_H
        gaps = [b - a for a, b in zip(cfg.impulse_times, cfg.impulse_times[1:])]
        gap = min(gaps) if gaps else OMEGA
        for name, value in (("delay_r", cfg.delay_r), ("t_end", cfg.t_end)):
            if value and abs(value / h - round(value / h)) > 1e-9 * max(1.0, abs(value / h)):
                raise ConfigurationError(
                    "%s = %s is not a grid multiple: h = %s, delay r = %s, "
                    "smallest impulse gap = %s" % (name, value, h,
                                                   cfg.delay_r, gap))
        for t in cfg.impulse_times:
            if abs(t / h - round(t / h)) > 1e-9 * max(1.0, abs(t / h)):
                raise ConfigurationError(
                    "impulse time %s is not a grid multiple: h = %s, "
                    "delay r = %s, smallest impulse gap = %s"
                    % (t, h, cfg.delay_r, gap))
            if not 0.0 < t < OMEGA:
                raise ConfigurationError(
                    "impulse times must lie strictly inside (0, 2*pi)")
    else:
        # heat defaults are validated by heat_grid at build time; surface
        # grid errors now so a bad config fails before any work is done
        from .heat import heat_grid
        heat_grid(cfg.heat)


def _fmt(value):
    if isinstance(value, float):
        return _FLOAT_FMT % value
    if isinstance(value, tuple):
        return ", ".join(_FLOAT_FMT % v for v in value)
    return str(value)


def emit_config(cfg):
    """Render cfg in canonical form; parse_config inverts this exactly."""
    _validate(cfg)
    lines = []

    def section(name, pairs):
        pairs = [(k, v) for k, v in pairs if v is not None]
        if not pairs:
            return
        if lines:
            lines.append("")
        lines.append("[%s]" % name)
        for key, value in pairs:
            lines.append("%s = %s" % (key, _fmt(value)))

    section("problem", [
        ("kind", cfg.kind),
        ("eigenvalues", cfg.eigenvalues if cfg.kind == "linear" else None),
        ("forcing_amplitude",
         cfg.forcing_amplitude if cfg.kind == "linear" else None),
        ("delay_r", cfg.delay_r if cfg.kind == "linear" else None),
        ("impulse_times",
         cfg.impulse_times if cfg.kind == "linear" and cfg.impulse_times
         else None),
        ("impulse_values",
         cfg.impulse_values if cfg.kind == "linear" and cfg.impulse_values
         else None),
    ])
    if cfg.kind == "heat":
        h = cfg.heat
        section("heat", [
            ("n_modes", h.n_modes),
            ("p", h.impulse_count_p),
            ("r", h.delay_r),
            ("history", h.initial_history
             if isinstance(h.initial_history, str) else None),
            ("history_norm", h.history_norm),
            ("forcing_amplitude", h.forcing_amplitude),
            ("lipschitz_scale", h.lipschitz_scale),
        ])
    section("integrator", [
        ("h", cfg.grid_step),
        ("scheme", cfg.scheme),
    ])
    section("solver", [
        ("tol", cfg.tol),
        ("max_iter", cfg.max_iter),
        ("n_periods", cfg.n_periods),
    ])
    section("simulate", [("t_end", cfg.t_end)])
    section("output", [("directory", cfg.out_dir)])
    section("random", [("seed", cfg.seed)])
    return "\n".join(lines) + "\n"
