"""Run configuration: YAML in, validated dataclasses out, and back."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .levy import LevyExponent
from .measures import MeasureRepr
from .model import ModelSpec


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


PSI_PRESETS = {
    # psi(lam) = lam^2/2
    "brownian": {"drift": 0.0, "gaussian": 1.0, "jumps": []},
    # psi(lam) = lam^2/2 + lam/2: Brownian motion with drift -1/2
    "bm_drift": {"drift": 0.5, "gaussian": 1.0, "jumps": []},
    # psi(lam) = 2 lam + (exp(-lam) - 1 + lam): drift -3 with unit jumps at rate 1
    "cpp_jump": {"drift": 2.0, "gaussian": 0.0, "jumps": [[1.0, 1.0]]},
}

GAMMA_PRESETS = {
    "dirac0": {"atoms": [[0.0, 1.0]]},
    "lebesgue": {"lebesgue": {"rate": 1.0, "start": 0.0}},
    "lattice": {"atoms": [[1.0, 1.0]]},
}

SOLVERS = ("auto", "levy", "lattice", "series", "volterra", "csbp")


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _num(d, key, default, where, lo=None, hi=None, lo_open=False, integer=False, msg=None):
    v = d.get(key, default)
    if isinstance(v, str):
        try:
            v = float(v)
        except ValueError:
            raise ConfigError(f"{where}.{key} must be a number") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    if integer:
        if float(v) != int(v):
            raise ConfigError(f"{where}.{key} must be an integer")
        v = int(v)
    else:
        v = float(v)
    if math.isnan(v):
        raise ConfigError(f"{where}.{key} must not be NaN")
    bad_lo = lo is not None and (v <= lo if lo_open else v < lo)
    bad_hi = hi is not None and v > hi
    if bad_lo or bad_hi:
        if msg:
            raise ConfigError(msg)
        rng = f"{'(' if lo_open else '['}{lo}, {hi if hi is not None else 'inf'}]"
        raise ConfigError(f"{where}.{key}={v} outside {rng}")
    return v


def _num_list(d, key, default, where, **kw):
    v = d.get(key, default)
    if not isinstance(v, (list, tuple)):
        v = [v]
    if not v:
        raise ConfigError(f"{where}.{key} must not be empty")
    return tuple(_num({key: x}, key, None, where, **kw) for x in v)


@dataclass(frozen=True)
class PsiConfig:
    preset: str | None = None
    drift: float = 0.0
    gaussian: float = 0.0
    jumps: tuple = ()

    @classmethod
    def parse(cls, d) -> "PsiConfig":
        where = "model.psi"
        _check_keys(d, ("preset", "drift", "gaussian", "jumps"), where)
        preset = d.get("preset")
        base = {}
        if preset is not None:
            if preset not in PSI_PRESETS:
                raise ConfigError(f"unknown psi preset {preset!r} (choose from {', '.join(PSI_PRESETS)})")
            base = dict(PSI_PRESETS[preset])
        merged = {**base, **{k: v for k, v in d.items() if k != "preset"}}
        jumps = []
        for j in merged.get("jumps", []) or []:
            if not isinstance(j, (list, tuple)) or len(j) != 2:
                raise ConfigError(f"{where}.jumps entries must be [size, rate]")
            size = _num({"s": j[0]}, "s", None, f"{where}.jumps", lo=0.0, lo_open=True)
            rate = _num({"r": j[1]}, "r", None, f"{where}.jumps", lo=0.0, lo_open=True)
            jumps.append((size, rate))
        return cls(
            preset,
            _num(merged, "drift", 0.0, where),
            _num(merged, "gaussian", 0.0, where, lo=0.0),
            tuple(jumps),
        )

    def build(self) -> LevyExponent:
        sizes = tuple(j[0] for j in self.jumps)
        rates = tuple(j[1] for j in self.jumps)
        try:
            return LevyExponent(self.drift, self.gaussian, sizes, rates)
        except ValueError as exc:
            raise ConfigError(f"model.psi: {exc}") from None

    def to_dict(self) -> dict:
        d = {"drift": self.drift, "gaussian": self.gaussian, "jumps": [list(j) for j in self.jumps]}
        if self.preset is not None:
            d["preset"] = self.preset
        return d


@dataclass(frozen=True)
class GammaConfig:
    preset: str | None = None
    atoms: tuple = ()
    bins: tuple = ()  # (start, stop, spacing, density) uniform blocks
    lebesgue: tuple | None = None  # (rate, start)

    @classmethod
    def parse(cls, d) -> "GammaConfig":
        where = "model.gamma"
        _check_keys(d, ("preset", "atoms", "uniform", "lebesgue"), where)
        preset = d.get("preset")
        base = {}
        if preset is not None:
            if preset not in GAMMA_PRESETS:
                raise ConfigError(f"unknown gamma preset {preset!r} (choose from {', '.join(GAMMA_PRESETS)})")
            base = dict(GAMMA_PRESETS[preset])
        merged = {**base, **{k: v for k, v in d.items() if k != "preset"}}
        atoms = []
        for a in merged.get("atoms", []) or []:
            if not isinstance(a, (list, tuple)) or len(a) != 2:
                raise ConfigError(f"{where}.atoms entries must be [location, mass]")
            atoms.append(
                (
                    _num({"z": a[0]}, "z", None, f"{where}.atoms", lo=0.0),
                    _num({"m": a[1]}, "m", None, f"{where}.atoms", lo=0.0, lo_open=True),
                )
            )
        bins = []
        for b in merged.get("uniform", []) or []:
            _check_keys(b, ("start", "stop", "spacing", "density"), f"{where}.uniform")
            start = _num(b, "start", None, f"{where}.uniform", lo=0.0)
            stop = _num(b, "stop", None, f"{where}.uniform", lo=start, lo_open=True)
            spacing = _num(b, "spacing", None, f"{where}.uniform", lo=0.0, lo_open=True)
            density = _num(b, "density", 1.0, f"{where}.uniform", lo=0.0, lo_open=True)
            bins.append((start, stop, spacing, density))
        leb = merged.get("lebesgue")
        if leb is not None:
            _check_keys(leb, ("rate", "start"), f"{where}.lebesgue")
            leb = (
                _num(leb, "rate", 1.0, f"{where}.lebesgue", lo=0.0, lo_open=True),
                _num(leb, "start", 0.0, f"{where}.lebesgue", lo=0.0),
            )
        if not atoms and not bins and leb is None:
            raise ConfigError("model.gamma must be non-zero")
        return cls(preset, tuple(atoms), tuple(bins), leb)

    def build(self) -> MeasureRepr:
        mu = MeasureRepr.from_atoms([a[0] for a in self.atoms], [a[1] for a in self.atoms])
        try:
            for start, stop, spacing, density in self.bins:
                mu = mu + MeasureRepr.uniform(start, stop, spacing, density)
        except ValueError as exc:
            raise ConfigError(f"model.gamma.uniform: {exc}") from None
        if self.lebesgue is not None:
            mu = mu + MeasureRepr.lebesgue_measure(*self.lebesgue)
        return mu

    def to_dict(self) -> dict:
        d = {
            "atoms": [list(a) for a in self.atoms],
            "uniform": [dict(zip(("start", "stop", "spacing", "density"), b)) for b in self.bins],
            "lebesgue": None if self.lebesgue is None else {"rate": self.lebesgue[0], "start": self.lebesgue[1]},
        }
        if self.preset is not None:
            d["preset"] = self.preset
        return d


@dataclass(frozen=True)
class ModelConfig:
    psi: PsiConfig
    gamma: GammaConfig
    killing: float = 0.0
    interval_lower: float = -math.inf
    interval_included: bool = False

    @classmethod
    def parse(cls, d) -> "ModelConfig":
        _check_keys(d, ("psi", "gamma", "killing", "interval"), "model")
        if "psi" not in d or "gamma" not in d:
            raise ConfigError("model needs both psi and gamma")
        psi = PsiConfig.parse(d["psi"] or {})
        gamma = GammaConfig.parse(d["gamma"] or {})
        killing = _num(d, "killing", 0.0, "model", lo=0.0, msg="killing rate must be nonnegative")
        # A = identity lives on [0, inf) unless told otherwise
        default_lower, default_inc = (0.0, True) if gamma.lebesgue is not None else (-math.inf, False)
        iv = d.get("interval") or {}
        _check_keys(iv, ("lower", "included"), "model.interval")
        lower = _num(iv, "lower", default_lower, "model.interval")
        inc = iv.get("included", default_inc if "lower" not in iv else False)
        if not isinstance(inc, bool):
            raise ConfigError("model.interval.included must be true or false")
        return cls(psi, gamma, killing, lower, inc)

    def build(self) -> ModelSpec:
        try:
            return ModelSpec(self.psi.build(), self.killing, self.gamma.build(), self.interval_lower, self.interval_included)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "psi": self.psi.to_dict(),
            "gamma": self.gamma.to_dict(),
            "killing": self.killing,
            "interval": {"lower": self.interval_lower, "included": self.interval_included},
        }


@dataclass(frozen=True)
class MCConfig:
    n: int = 100000
    dt: float = 1e-3
    seed: int = 42
    u_budget: float = 1e4
    discount_floor: float = 1e-6
    adapt_scale: float = 1.0
    eps_jump: float = 1e-3

    @classmethod
    def parse(cls, d) -> "MCConfig":
        w = "task.mc"
        _check_keys(d, [f.name for f in fields(cls)], w)
        return cls(
            _num(d, "n", cls.n, w, lo=100, integer=True),
            _num(d, "dt", cls.dt, w, lo=0.0, lo_open=True, hi=1.0),
            _num(d, "seed", cls.seed, w, lo=0, hi=2**63 - 1, integer=True),
            _num(d, "u_budget", cls.u_budget, w, lo=0.0, lo_open=True),
            _num(d, "discount_floor", cls.discount_floor, w, lo=0.0, lo_open=True, hi=1.0),
            _num(d, "adapt_scale", cls.adapt_scale, w, lo=0.0),
            _num(d, "eps_jump", cls.eps_jump, w, lo=0.0, lo_open=True, hi=1.0),
        )


@dataclass(frozen=True)
class CMConfig:
    points: int = 64
    max_order: int = 6
    span: float = 5.0
    tol: float = 1e-7
    speed: str | None = None  # expression for A(y) replacing the model's 1/laplace(gamma)

    @classmethod
    def parse(cls, d) -> "CMConfig":
        w = "task.cm"
        _check_keys(d, [f.name for f in fields(cls)], w)
        points = _num(d, "points", cls.points, w, lo=2, integer=True)
        max_order = _num(d, "max_order", cls.max_order, w, lo=1, integer=True)
        if points < max_order + 1:
            raise ConfigError(f"{w}: grid too coarse: {points} points cannot carry order {max_order}")
        speed = d.get("speed")
        if speed is not None and not isinstance(speed, str):
            raise ConfigError(f"{w}.speed must be an expression in y")
        return cls(
            points,
            max_order,
            _num(d, "span", cls.span, w, lo=0.0, lo_open=True),
            _num(d, "tol", cls.tol, w, lo=0.0),
            speed,
        )


@dataclass(frozen=True)
class TaskConfig:
    q: tuple = (1.0,)
    x: tuple = (1.0,)
    level: tuple = (0.0,)
    solver: str = "auto"
    tol: float = 1e-14
    k_max: int = 200
    lattice_terms: int = 80
    spacing: float = 1e-3
    z_max: float = 40.0
    richardson: bool = True
    residual_points: int = 8
    mc: MCConfig = field(default_factory=MCConfig)
    cm: CMConfig = field(default_factory=CMConfig)
    solver_csv: str | None = None

    @classmethod
    def parse(cls, d) -> "TaskConfig":
        w = "task"
        _check_keys(d, [f.name for f in fields(cls)], w)
        solver = d.get("solver", "auto")
        if solver not in SOLVERS:
            raise ConfigError(f"task.solver must be one of {', '.join(SOLVERS)}")
        rich = d.get("richardson", True)
        if not isinstance(rich, bool):
            raise ConfigError("task.richardson must be true or false")
        csv = d.get("solver_csv")
        if csv is not None and not isinstance(csv, str):
            raise ConfigError("task.solver_csv must be a path")
        return cls(
            _num_list(d, "q", [1.0], w, lo=0.0, lo_open=True, msg="q must be positive"),
            _num_list(d, "x", [1.0], w),
            _num_list(d, "level", [0.0], w),
            solver,
            _num(d, "tol", cls.tol, w, lo=0.0, lo_open=True, hi=1.0),
            _num(d, "k_max", cls.k_max, w, lo=1, integer=True),
            _num(d, "lattice_terms", cls.lattice_terms, w, lo=1, integer=True),
            _num(d, "spacing", cls.spacing, w, lo=0.0, lo_open=True),
            _num(d, "z_max", cls.z_max, w, lo=0.0, lo_open=True),
            rich,
            _num(d, "residual_points", cls.residual_points, w, lo=1, integer=True),
            MCConfig.parse(d.get("mc") or {}),
            CMConfig.parse(d.get("cm") or {}),
            csv,
        )

    def pairs(self):
        """``(x, level)`` pairs with ``level < x``, in config order."""
        out = [(x, l) for x in self.x for l in self.level if l < x]
        if not out:
            raise ConfigError("task needs at least one (x, level) pair with level < x")
        return out


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    verbosity: int = 1

    @classmethod
    def parse(cls, d) -> "OutputConfig":
        _check_keys(d, ("dir", "verbosity"), "output")
        out_dir = d.get("dir", cls.dir)
        if not isinstance(out_dir, str):
            raise ConfigError("output.dir must be a path")
        return cls(out_dir, _num(d, "verbosity", cls.verbosity, "output", lo=0, hi=2, integer=True))


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    task: TaskConfig = field(default_factory=TaskConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        if d is None:
            raise ConfigError("empty configuration")
        _check_keys(d, ("model", "task", "output"), "config")
        if "model" not in d:
            raise ConfigError("config needs a model block")
        cfg = cls(ModelConfig.parse(d["model"] or {}), TaskConfig.parse(d.get("task") or {}), OutputConfig.parse(d.get("output") or {}))
        cfg.model.build()
        return cfg

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None

    def to_dict(self) -> dict:
        task = asdict(self.task)
        for k in ("q", "x", "level"):
            task[k] = list(task[k])
        return {"model": self.model.to_dict(), "task": task, "output": asdict(self.output)}

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def speed_from_expression(expr: str):
    """Compile ``A(y)`` from an expression over numpy functions, e.g. ``1 + sin(y)**2``."""
    names = {k: getattr(np, k) for k in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "pi", "e", "sinh", "cosh", "tanh")}
    try:
        code = compile(expr, "<speed>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"task.cm.speed: {exc.msg}") from None
    for name in code.co_names:
        if name not in names and name != "y":
            raise ConfigError(f"task.cm.speed: unknown name {name!r}")

    def speed(y):
        return np.asarray(eval(code, {"__builtins__": {}}, {**names, "y": np.asarray(y, dtype=float)}), dtype=float) + 0.0 * np.asarray(y)

    return speed
