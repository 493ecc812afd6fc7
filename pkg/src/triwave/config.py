"""
Line-oriented run configuration.

A config file holds ``section.key = value`` lines; ``#`` starts a comment.
Values are parsed against the defaults file, which lists every recognised key
(see ``docs/config_schema.md``). Lists are comma-separated; lists of triples
(``sweep.masses``) separate triples with ``;``. ``none`` clears an optional
value.

Errors carry a ``path:LINE:`` prefix pointing at the offending line.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .exceptions import ConfigurationError, InputError
from .grid import GridSpec
from .model import ModelParams
from .solver import SolverOptions

DEFAULTS_ENV = "TRIWAVE_DEFAULTS"

_INT = {"grid.dimension", "grid.n", "solver.max_iters", "solver.seed", "solver.max_halvings",
        "solver.checkpoint_every", "verify.trials"}
_FLOAT = {"grid.half_width", "model.beta", "model.p", "solver.tol_residual", "solver.tol_energy",
          "verify.residual_tol", "verify.mass_tol"}
_OPT_FLOAT = {"solver.step_size"}
_BOOL = {"solver.line_search", "output.fields", "output.history", "output.report"}
_FLOAT_LIST = {"model.mu", "model.masses", "potential.offsets", "potential.weights",
               "sweep.betas"}
_TRIPLE_LIST = {"sweep.masses"}
_PATH = {"potential.path", "solver.init_path", "output.dir", "verify.constants"}


@dataclass
class Entry:
    value: object
    source: str
    line: int

    @property
    def where(self):
        return f"{self.source}:{self.line}"


def _convert(key, text, where):
    low = text.lower()
    try:
        if key in _INT:
            return int(text)
        if key in _FLOAT:
            return float(text)
        if key in _OPT_FLOAT:
            return None if low == "none" else float(text)
        if key in _BOOL:
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"expected true/false, got {text!r}")
        if key in _FLOAT_LIST:
            if low in ("none", ""):
                return None
            return [float(x) for x in text.split(",")]
        if key in _TRIPLE_LIST:
            if low in ("none", ""):
                return None
            out = []
            for chunk in text.split(";"):
                vals = [float(x) for x in chunk.split(",")]
                if len(vals) != 3:
                    raise ValueError(f"mass triple needs 3 values, got {chunk.strip()!r}")
                out.append(tuple(vals))
            return out
        if key in _PATH:
            return None if low in ("none", "") else text
        return text
    except ValueError as exc:
        raise ConfigurationError(f"{where}: bad value for {key}: {exc}", key=key) from None


def parse_text(text, source="<string>", known=None):
    """Parse config text into ``{key: Entry}``.

    ``known`` restricts the accepted keys; unknown keys are errors.
    """
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationError(f"{where}: expected 'section.key = value', got {raw.strip()!r}")
        if "." not in key:
            raise ConfigurationError(f"{where}: key {key!r} has no section prefix", key=key)
        if known is not None and key not in known:
            raise ConfigurationError(f"{where}: unknown key {key!r}", key=key)
        if key in entries:
            raise ConfigurationError(f"{where}: duplicate key {key!r} "
                                     f"(first set at line {entries[key].line})", key=key)
        entries[key] = Entry(_convert(key, value, where), source, lineno)
    return entries


def defaults_path():
    env = os.environ.get(DEFAULTS_ENV)
    if env:
        return Path(env)
    return None


def load_defaults():
    path = defaults_path()
    if path is None:
        text = (resources.files("triwave") / "data" / "defaults.cfg").read_text()
        return parse_text(text, source="defaults.cfg")
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read defaults file {path}: {exc}") from exc
    return parse_text(text, source=str(path))


def load_entries(path=None, text=None):
    """Defaults overlaid with the config file (or ``text``)."""
    entries = load_defaults()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        source = str(path)
    else:
        source = "<string>"
    if text is not None:
        entries.update(parse_text(text, source=source, known=set(entries)))
    return entries


@dataclass
class OutputSpec:
    dir: str = "triwave_out"
    fields: bool = True
    history: bool = True
    report: bool = True


@dataclass
class RunConfig:
    grid: GridSpec
    potential: dict
    model: ModelParams
    solver: SolverOptions
    outputs: OutputSpec
    sweep: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    entries: dict = field(default_factory=dict, repr=False)

    def where(self, key):
        e = self.entries.get(key)
        return e.where if e else "<config>"

    def with_seed(self, seed):
        return replace(self, solver=replace(self.solver, seed=int(seed)))

    def as_dict(self):
        return {
            "grid": self.grid.as_dict(),
            "potential": {k: v for k, v in self.potential.items()},
            "model": self.model.as_dict(),
            "solver": {k: getattr(self.solver, k) for k in self.solver.__dataclass_fields__},
            "outputs": vars(self.outputs).copy(),
        }


def _section(entries, name):
    prefix = name + "."
    return {k[len(prefix):]: e.value for k, e in entries.items() if k.startswith(prefix)}


def _resolve(base, value):
    if value is None or base is None:
        return value
    p = Path(value)
    return str(p if p.is_absolute() else Path(base).parent / p)


def build_config(entries, base=None) -> RunConfig:
    """Validate parsed entries into a RunConfig.

    Relative paths are resolved against the directory of ``base``. Validation
    errors are re-raised with the ``path:LINE:`` of the key that caused them.
    """
    try:
        g = _section(entries, "grid")
        grid = GridSpec(dimension=g["dimension"], half_width=g["half_width"], points=g["n"],
                        discretization=g["discretization"])
        m = _section(entries, "model")
        model = ModelParams(mu=m["mu"], beta=m["beta"], p=m["p"], masses=m["masses"],
                            dimension=grid.dimension)
        s = _section(entries, "solver")
        s["init_path"] = _resolve(base, s.get("init_path"))
        solver = SolverOptions(**s)
        pot = _section(entries, "potential")
        pot["path"] = _resolve(base, pot.get("path"))
        if pot["kind"] == "shifted_harmonic" and not pot.get("offsets"):
            raise ConfigurationError("potential.kind = shifted_harmonic needs potential.offsets",
                                     key="potential.offsets")
        if pot["kind"] == "from_file" and not pot.get("path"):
            raise ConfigurationError("potential.kind = from_file needs potential.path",
                                     key="potential.path")
        o = _section(entries, "output")
        outputs = OutputSpec(**o)
        sweep = _section(entries, "sweep")
        verify = _section(entries, "verify")
        verify["constants"] = _resolve(base, verify.get("constants"))
    except ConfigurationError as exc:
        key = getattr(exc, "key", None)
        e = entries.get(key) if key else None
        msg = str(exc)
        if e is not None and not msg.startswith(e.where):
            msg = f"{e.where}: {msg}"
        raise ConfigurationError(msg, key=key) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from exc
    return RunConfig(grid=grid, potential=pot, model=model, solver=solver, outputs=outputs,
                     sweep=sweep, verify=verify, entries=entries)


def load_config(path=None, text=None) -> RunConfig:
    return build_config(load_entries(path, text), base=path)
