"""Run configuration: TOML parsing, schema validation, and model/grid builders."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coefficients import CloseToPeriodic, PeriodicField, PeriodicLogistic, ReactionModel
from .floquet import DispersionData, dispersion_for
from .solver import Grid, SchemeConfig

FORMAT_VERSION = 1

INIT_KINDS = ("bump", "exp_tail", "heaviside", "front_phase", "zero")

DEFAULTS = {
    "format_version": FORMAT_VERSION,
    "model": {
        "kind": "logistic",
        "period": 1.0,
        "mu_hat": [1.0],
        "mu_hat_sin": [],
        "kappa": [1.0],
        "kappa_sin": [],
        "mu_hat_samples": None,
        "kappa_samples": None,
        "samples": 64,
    },
    "grid": {"x_min": -20.0, "x_max": None, "n": None, "points_per_period": 32},
    "scheme": {"dt": None, "theta": 1.0, "monotone": True, "boundary_left": None},
    "init": {"kind": "bump", "params": {}},
    "run": {"t_end": 150.0, "snapshot_dt": None, "track_dt": 1.0},
    "scenario": {
        "checkpoint_dt": 5.0,
        "n_phase": 16,
        "tol_front": 1e-3,
        "reference_tol": 2.5e-4,
        "horizon": None,
        "window": [-40.0, 60.0],
        "c": None,
        "c_offset": 0.0,
        "shift_burn": 50.0,
        "alpha": "sqrt",
        "alpha_factor": 0.5,
        "threshold": 0.02,
        "inner_factor": 0.9,
        "outer_factor": 1.1,
        "n_pairs": 100,
        "seed": 0,
        "deadband": 1e-9,
        "lam_min": None,
        "lam_max": None,
        "n_scan": 161,
        "n_cell": 128,
        "offsets": [],
    },
    "output": {"dir": None},
}

PERTURBATION_KEYS = {"C": 1.0, "rho": None, "rho_factor": 2.0}
MODEL_KINDS = ("logistic", "PeriodicLogistic", "CloseToPeriodic")
INIT_PARAMS = {
    "bump": {"a": -1.0, "b": 1.0, "height": None},
    "exp_tail": {"amplitude": 1.0, "rate": None, "rate_factor": None},
    "heaviside": {"a": 0.0},
    "front_phase": {},
    "zero": {},
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    model: dict
    grid: dict
    scheme: dict
    init: dict
    run: dict
    scenario: dict
    output_dir: str | None = None
    format_version: int = FORMAT_VERSION
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def tree(self) -> dict:
        return {
            "format_version": self.format_version,
            "model": self.model,
            "grid": self.grid,
            "scheme": self.scheme,
            "init": self.init,
            "run": self.run,
            "scenario": self.scenario,
            "output": {"dir": self.output_dir},
        }

    @property
    def sha256(self) -> str:
        canon = json.dumps(self.tree(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @property
    def period(self) -> float:
        return float(self.model["period"])

    @property
    def dx(self) -> float:
        g = self.grid
        if g["n"] is not None and g["x_max"] is not None:
            return (g["x_max"] - g["x_min"]) / (g["n"] - 1)
        return self.period / g["points_per_period"]

    def with_updates(self, **blocks) -> "RunConfig":
        """Copy with some blocks merged (``scenario={"seed": 3}``); revalidated."""
        tree = copy.deepcopy(self.tree())
        for name, upd in blocks.items():
            if isinstance(tree.get(name), dict) and isinstance(upd, dict):
                _deep_merge(tree[name], upd)
            else:
                tree[name] = upd
        return from_dict(tree)

    # -- builders -----------------------------------------------------------

    def base_model(self) -> ReactionModel:
        if "base" not in self._cache:
            m = self.model
            L, n = float(m["period"]), int(m["samples"])

            def coefficient(name):
                if m[f"{name}_samples"] is not None:
                    return PeriodicField(L, m[f"{name}_samples"])
                return PeriodicField.from_fourier(m[name], m[f"{name}_sin"], L, n)

            self._cache["base"] = PeriodicLogistic(coefficient("mu_hat"), coefficient("kappa"))
        return self._cache["base"]

    def dispersion(self, threads: int = 1) -> DispersionData:
        if "disp" not in self._cache:
            s = self.scenario
            lam_range = None
            if s["lam_min"] is not None and s["lam_max"] is not None:
                lam_range = (s["lam_min"], s["lam_max"])
            self._cache["disp"] = dispersion_for(self.base_model(), n_cell=s["n_cell"],
                                                 lam_range=lam_range, n_scan=s["n_scan"],
                                                 threads=threads)
        return self._cache["disp"]

    def build_model(self) -> ReactionModel:
        """The configured model; a ``[model.perturbation]`` table wraps the
        periodic base into a close-to-periodic model."""
        if "model" not in self._cache:
            base = self.base_model()
            pert = self.model.get("perturbation")
            if pert is None:
                self._cache["model"] = base
            else:
                rho = pert["rho"]
                if rho is None:
                    rho = pert["rho_factor"] * self.dispersion().lambda_star
                self._cache["model"] = CloseToPeriodic(base, float(pert["C"]), float(rho))
        return self._cache["model"]

    def spreading_speed(self) -> float:
        """Asymptotic speed of the configured datum: c*, or the speed selected
        by a slowly decaying exponential tail."""
        disp = self.dispersion()
        rate = datum_rate(self, disp)
        if rate is not None and rate < disp.lambda_star:
            return disp.c_of(rate)
        return disp.c_star

    def required_x_max(self, c_spread: float | None = None) -> float:
        c = self.spreading_speed() if c_spread is None else c_spread
        t = float(self.run["t_end"])
        reach = max(1.1 * c * t, c * t + 6 * math.sqrt(t))
        return datum_support(self) + reach + 10 * self.period

    def build_grid(self) -> Grid:
        g = self.grid
        L = self.period
        x_max = g["x_max"]
        if x_max is None:
            x_max = math.ceil(self.required_x_max() / L) * L
        if g["n"] is not None:
            return Grid(float(g["x_min"]), float(x_max), int(g["n"]))
        return Grid.for_period(g["x_min"], x_max, L, g["points_per_period"])

    def build_scheme(self, dx: float, boundary_left: str = "dirichlet_p",
                     dt: float | None = None) -> SchemeConfig:
        s = self.scheme
        dt = s["dt"] if s["dt"] is not None else (dt if dt is not None else 0.25 * dx)
        return SchemeConfig(dt, s["theta"], s["boundary_left"] or boundary_left,
                            "dirichlet_zero", s["monotone"])


def datum_rate(cfg: RunConfig, disp: DispersionData):
    init = cfg.init
    if init["kind"] != "exp_tail":
        return None
    p = init["params"]
    if p["rate"] is not None:
        return float(p["rate"])
    if p["rate_factor"] is not None:
        return float(p["rate_factor"]) * disp.lambda_star
    return disp.lambda_star


def datum_support(cfg: RunConfig) -> float:
    """Rightmost point of the bulk of the initial datum."""
    kind, p = cfg.init["kind"], cfg.init["params"]
    if kind == "bump":
        return float(p["b"])
    if kind == "heaviside":
        return float(p["a"])
    if kind == "front_phase":
        return float(cfg.scenario["window"][1])
    return 0.0


# -- parsing ------------------------------------------------------------------

def _deep_merge(dst, src):
    for k, v in src.items():
        if isinstance(v, dict) and isinstance(dst.get(k), dict):
            _deep_merge(dst[k], v)
        else:
            dst[k] = v


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_keys(block, allowed, prefix, errors):
    for k in block:
        if k not in allowed:
            errors.append(f"unknown key {prefix}{k}")


def parse_config(text: str, check_domain: bool = True) -> RunConfig:
    """Parse and validate a TOML config; all schema errors are reported together."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax error: {exc}"]) from None
    return from_dict(raw, check_domain=check_domain)


def load_config(path, check_domain: bool = True) -> RunConfig:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ConfigError([f"{path}: not valid UTF-8"]) from None
    return parse_config(text, check_domain=check_domain)


def from_dict(raw: dict, check_domain: bool = True) -> RunConfig:
    errors: list[str] = []
    raw = copy.deepcopy(raw)
    tree = copy.deepcopy(DEFAULTS)
    _check_keys(raw, tree, "", errors)

    version = raw.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        errors.append(f"format_version {version!r} not supported (expected {FORMAT_VERSION})")

    for name in ("model", "grid", "scheme", "run", "scenario", "output"):
        block = raw.get(name, {})
        if not isinstance(block, dict):
            errors.append(f"{name} must be a table")
            continue
        allowed = dict(tree[name])
        if name == "model":
            allowed["perturbation"] = None
        _check_keys(block, allowed, f"{name}.", errors)
        for k, v in block.items():
            if k in allowed:
                tree[name][k] = v

    init = raw.get("init", {})
    if not isinstance(init, dict):
        errors.append("init must be a table")
        init = {}
    _check_keys(init, {"kind": 0, "params": 0}, "init.", errors)
    kind = init.get("kind", "bump")
    if kind not in INIT_KINDS:
        errors.append(f"init.kind must be one of {INIT_KINDS}, got {kind!r}")
        kind = "bump"
    params = dict(INIT_PARAMS[kind])
    given = init.get("params", {})
    if not isinstance(given, dict):
        errors.append("init.params must be a table")
        given = {}
    _check_keys(given, params, "init.params.", errors)
    params.update({k: v for k, v in given.items() if k in params})
    tree["init"] = {"kind": kind, "params": params}

    pert = tree["model"].get("perturbation")
    if pert is None and tree["model"]["kind"] == "CloseToPeriodic":
        pert = {}
    if pert is not None:
        if not isinstance(pert, dict):
            errors.append("model.perturbation must be a table")
            pert = None
        else:
            _check_keys(pert, PERTURBATION_KEYS, "model.perturbation.", errors)
            full = dict(PERTURBATION_KEYS)
            full.update({k: v for k, v in pert.items() if k in full})
            pert = full
        tree["model"]["perturbation"] = pert

    _validate_values(tree, errors)
    if errors:
        raise ConfigError(errors)
    cfg = RunConfig(tree["model"], tree["grid"], tree["scheme"], tree["init"], tree["run"],
                    tree["scenario"], tree["output"]["dir"], tree["format_version"])
    _validate_model(cfg, errors)
    if not errors and check_domain:
        _validate_domain(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate_values(tree, errors):
    m, g, s, r, sc = tree["model"], tree["grid"], tree["scheme"], tree["run"], tree["scenario"]

    def positive(block, key, name, allow_none=False):
        v = block[key]
        if v is None and allow_none:
            return
        if not _is_num(v) or not v > 0:
            errors.append(f"{name}.{key} must be positive")

    positive(m, "period", "model")
    if m["kind"] not in MODEL_KINDS:
        errors.append(f"model.kind must be one of {MODEL_KINDS}, got {m['kind']!r}")
    for key in ("mu_hat_samples", "kappa_samples"):
        v = m[key]
        if v is not None and (not isinstance(v, list) or len(v) < 8
                              or not all(_is_num(a) for a in v)):
            errors.append(f"model.{key} must be a list of at least 8 numbers")
    for key in ("mu_hat", "mu_hat_sin", "kappa", "kappa_sin"):
        v = m[key]
        if not isinstance(v, list) or not all(_is_num(a) for a in v):
            errors.append(f"model.{key} must be a list of numbers")
    for key in ("mu_hat", "kappa"):
        if isinstance(m[key], list) and not m[key]:
            errors.append(f"model.{key} needs at least the mean coefficient")
    if not isinstance(m["samples"], int) or m["samples"] < 8:
        errors.append("model.samples must be an integer >= 8")
    pert = m.get("perturbation")
    if pert is not None:
        if not _is_num(pert["C"]) or pert["C"] < 0:
            errors.append("model.perturbation.C must be >= 0")
        if pert["rho"] is not None and (not _is_num(pert["rho"]) or pert["rho"] <= 0):
            errors.append("model.perturbation.rho must be positive")
        if not _is_num(pert["rho_factor"]) or pert["rho_factor"] <= 0:
            errors.append("model.perturbation.rho_factor must be positive")

    if not _is_num(g["x_min"]):
        errors.append("grid.x_min must be a number")
    if g["x_max"] is not None:
        if not _is_num(g["x_max"]):
            errors.append("grid.x_max must be a number")
        elif _is_num(g["x_min"]) and g["x_max"] <= g["x_min"]:
            errors.append("grid.x_max must exceed grid.x_min")
    if g["n"] is not None:
        if not isinstance(g["n"], int) or g["n"] < 2:
            errors.append("grid.n must be an integer >= 2")
        elif g["x_max"] is None:
            errors.append("grid.n requires grid.x_max")
    if not isinstance(g["points_per_period"], int) or g["points_per_period"] < 1:
        errors.append("grid.points_per_period must be a positive integer")

    positive(s, "dt", "scheme", allow_none=True)
    if not _is_num(s["theta"]) or not 0 <= s["theta"] <= 1:
        errors.append("scheme.theta must lie in [0, 1]")
    if not isinstance(s["monotone"], bool):
        errors.append("scheme.monotone must be true or false")
    if s["boundary_left"] not in (None, "dirichlet_p", "neumann_zero"):
        errors.append("scheme.boundary_left must be 'dirichlet_p' or 'neumann_zero'")

    positive(r, "t_end", "run")
    positive(r, "snapshot_dt", "run", allow_none=True)
    positive(r, "track_dt", "run")

    for key in ("checkpoint_dt", "tol_front", "reference_tol", "alpha_factor", "threshold", "inner_factor",
                "outer_factor", "n_scan", "n_cell", "n_phase", "n_pairs"):
        positive(sc, key, "scenario")
    positive(sc, "horizon", "scenario", allow_none=True)
    for key in ("n_phase", "n_pairs", "n_scan", "n_cell", "seed"):
        if not isinstance(sc[key], int) or isinstance(sc[key], bool):
            errors.append(f"scenario.{key} must be an integer")
    w = sc["window"]
    if not (isinstance(w, list) and len(w) == 2 and all(_is_num(a) for a in w) and w[0] < 0 < w[1]):
        errors.append("scenario.window must be [z_lo, z_hi] with z_lo < 0 < z_hi")
    if sc["alpha"] not in ("sqrt", "linear"):
        errors.append("scenario.alpha must be 'sqrt' or 'linear'")
    if sc["c"] is not None and not _is_num(sc["c"]):
        errors.append("scenario.c must be a number")
    if not isinstance(sc["offsets"], list) or not all(_is_num(a) for a in sc["offsets"]):
        errors.append("scenario.offsets must be a list of numbers")
    if not _is_num(sc["deadband"]) or sc["deadband"] < 0:
        errors.append("scenario.deadband must be >= 0")


def _validate_model(cfg: RunConfig, errors):
    try:
        cfg.build_model()
    except ValueError as exc:
        errors.append(f"model: {exc}")


def _validate_domain(cfg: RunConfig, errors):
    grid = cfg.build_grid()
    L = cfg.period
    errors.extend(f"grid: {p}" for p in grid.problems(L))
    cells = L / grid.dx
    if abs(cells - round(cells)) > 1e-9 * cells:
        errors.append(f"grid: L/dx = {cells:.12g} must be an integer")
    elif abs(grid.x_min / grid.dx - round(grid.x_min / grid.dx)) > 1e-9:
        errors.append("grid.x_min must be a multiple of dx")
    if cfg.grid["x_max"] is not None:
        try:
            need = cfg.required_x_max()
        except Exception as exc:          # dispersion failure is reported, not raised
            errors.append(f"model: {exc}")
            return
        if grid.x_max < need:
            errors.append(f"grid.x_max = {grid.x_max:g} too small for t_end = "
                          f"{cfg.run['t_end']:g}: required x_max >= {need:.6g} "
                          f"(front reach at speed {cfg.spreading_speed():.6g} plus 10 L margin)")


def default_config(**blocks) -> RunConfig:
    """Defaults with optional block overrides, e.g. ``model={"kappa": [1, 0.5]}``."""
    return from_dict(blocks)


def cosine_medium() -> dict:
    """Model block for ``f = u (1 + 0.5 cos(2 pi x) - u)``."""
    return {"kappa": [1.0, 0.5]}


def config_echo(cfg: RunConfig) -> dict:
    return json.loads(json.dumps(cfg.tree()))
