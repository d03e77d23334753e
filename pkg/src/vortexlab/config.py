"""Problem configuration: strict JSON documents with defaults filled in."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .families import AlmostComplexFamily, HamiltonianFamily
from .flow import pde
from .flow.bvp import BVPSettings
from .group_action import TorusAction

DEFAULTS = {
    "action": {"A": [[1]], "tau": [-0.5]},
    "grid": {"nt": 64, "ds": 2e-3, "s_max": 1.0},
    "system": {"kind": "higgs", "epsilon": 1e-8, "tau_double_shift": False},
    "hamiltonian": {"kind": "zero"},
    "jfamily": {"kind": "standard"},
    "solver": {
        "scheme": "rk4",
        "tol": 1e-8,
        "seed": 0,
        "sample_every": 10,
        "snapshot_every": 100,
        "label_tol": 1e-4,
        "norm_bound": 1e6,
        "perturbation": 1e-3,
        "bvp": {"half_length": 16.0, "ns": 128, "tol": 1e-5, "max_iter": 40, "guess_noise": 1e-3},
    },
    "output": {"dir": "runs", "formats": ["json", "csv"]},
}

BUMP_KEYS = {"kind", "amplitude", "center", "radius", "modulation"}
FORMATS = {"json", "csv"}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


def _merge(defaults, given, prefix=""):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        dotted = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(dotted, "unknown key")
        if isinstance(defaults[key], dict) and key != "hamiltonian":
            if not isinstance(value, dict):
                raise ConfigError(dotted, "expected an object")
            out[key] = _merge(defaults[key], value, dotted + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class ProblemConfig:
    data: dict

    @classmethod
    def from_dict(cls, given: dict | None = None):
        given = given or {}
        if not isinstance(given, dict):
            raise ConfigError("<root>", "expected a JSON object")
        data = _merge(DEFAULTS, given)
        cfg = cls(data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        try:
            given = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"malformed JSON: {exc}") from exc
        return cls.from_dict(given)

    def with_overrides(self, **sections):
        data = copy.deepcopy(self.data)
        for section, values in sections.items():
            data[section].update(values)
        return ProblemConfig.from_dict(data)

    # --- validation ---------------------------------------------------------

    def validate(self):
        d = self.data
        try:
            self.action
        except ValueError as exc:
            raise ConfigError("action", str(exc)) from exc
        nt = d["grid"]["nt"]
        if not isinstance(nt, int) or isinstance(nt, bool) or nt < 8:
            raise ConfigError("grid.nt", "must be an integer >= 8")
        if not (isinstance(d["grid"]["ds"], (int, float)) and d["grid"]["ds"] > 0):
            raise ConfigError("grid.ds", "must be positive")
        if not (isinstance(d["grid"]["s_max"], (int, float)) and d["grid"]["s_max"] >= 0):
            raise ConfigError("grid.s_max", "must be nonnegative")
        kind = d["system"]["kind"]
        if kind not in pde.SYSTEMS:
            raise ConfigError("system.kind", f"unknown kind {kind!r}; expected one of {pde.SYSTEMS}")
        eps = d["system"]["epsilon"]
        if not (isinstance(eps, (int, float)) and 0 <= eps <= 1e-2):
            raise ConfigError("system.epsilon", "must lie in [0, 1e-2]")
        if not isinstance(d["system"]["tau_double_shift"], bool):
            raise ConfigError("system.tau_double_shift", "must be true or false")
        try:
            self.system
        except ValueError as exc:
            raise ConfigError("system.kind", str(exc)) from exc
        h = d["hamiltonian"]
        if not isinstance(h, dict):
            raise ConfigError("hamiltonian", "expected an object")
        if h.get("kind") not in ("zero", "bump"):
            raise ConfigError("hamiltonian.kind", f"unknown kind {h.get('kind')!r}; expected 'zero' or 'bump'")
        allowed = {"kind"} if h["kind"] == "zero" else BUMP_KEYS
        for key in h:
            if key not in allowed:
                raise ConfigError(f"hamiltonian.{key}", "unknown key")
        if h["kind"] == "bump":
            for key in ("amplitude", "radius"):
                if key not in h:
                    raise ConfigError(f"hamiltonian.{key}", "required for kind 'bump'")
            if not h["radius"] > 0:
                raise ConfigError("hamiltonian.radius", "must be positive")
            try:
                self.hamiltonian
            except (ValueError, TypeError) as exc:
                raise ConfigError("hamiltonian.center", str(exc)) from exc
        if d["jfamily"]["kind"] != "standard":
            raise ConfigError("jfamily.kind", f"unknown kind {d['jfamily']['kind']!r}; expected 'standard'")
        sol = d["solver"]
        if sol["scheme"] not in pde.SCHEMES:
            raise ConfigError("solver.scheme", f"unknown scheme {sol['scheme']!r}; expected one of {pde.SCHEMES}")
        for key in ("tol", "label_tol", "norm_bound"):
            if not (isinstance(sol[key], (int, float)) and sol[key] > 0):
                raise ConfigError(f"solver.{key}", "must be positive")
        for key in ("seed", "sample_every", "snapshot_every"):
            if not isinstance(sol[key], int) or isinstance(sol[key], bool) or sol[key] < 0:
                raise ConfigError(f"solver.{key}", "must be a nonnegative integer")
        for key, value in sol["bvp"].items():
            if not (isinstance(value, (int, float)) and value >= 0):
                raise ConfigError(f"solver.bvp.{key}", "must be a nonnegative number")
        for key in ("ns", "max_iter"):
            if not isinstance(sol["bvp"][key], int) or sol["bvp"][key] < 2:
                raise ConfigError(f"solver.bvp.{key}", "must be an integer >= 2")
        fmts = d["output"]["formats"]
        if not isinstance(fmts, list) or not set(fmts) <= FORMATS:
            raise ConfigError("output.formats", f"must be a list drawn from {sorted(FORMATS)}")
        limit = self.nominal_stability_bound()
        if d["grid"]["ds"] > limit:
            raise ConfigError("grid.ds", f"{d['grid']['ds']:g} exceeds the stability bound {limit:.3e} "
                                         f"for scheme {sol['scheme']!r} at nt = {nt}")

    def nominal_stability_bound(self):
        """Stability bound at a reference state with |v| = 1 and |eta| = pi."""
        nt = self.data["grid"]["nt"]
        act = self.action
        ref = pde.PathState(np.ones((nt + 1, act.n)), np.full((nt + 1, act.k), np.pi))
        return pde.stability_bound(self.system, ref, self.data["solver"]["scheme"])

    # --- typed views ----------------------------------------------------------

    @property
    def action(self) -> TorusAction:
        a = self.data["action"]
        return TorusAction(np.array(a["A"]), np.array(a["tau"], dtype=float))

    @property
    def system(self) -> pde.PDESystem:
        s = self.data["system"]
        return pde.PDESystem(s["kind"], self.action, float(s["epsilon"]), bool(s["tau_double_shift"]))

    @property
    def hamiltonian(self) -> HamiltonianFamily | None:
        h = self.data["hamiltonian"]
        if h["kind"] == "zero":
            return None
        n = self.action.n
        center = h.get("center", [[0.0, 0.0]] * n)
        z0 = np.array([complex(float(c[0]), float(c[1])) for c in center])
        if len(z0) != n:
            raise ValueError(f"center needs {n} [re, im] pairs")
        return HamiltonianFamily.bump(h["amplitude"], z0, h["radius"], h.get("modulation", 0.0))

    @property
    def jfamily(self) -> AlmostComplexFamily | None:
        return None

    @property
    def nt(self) -> int:
        return self.data["grid"]["nt"]

    @property
    def seed(self) -> int:
        return self.data["solver"]["seed"]

    def flow_settings(self) -> pde.FlowSettings:
        g, s = self.data["grid"], self.data["solver"]
        return pde.FlowSettings(
            ds=float(g["ds"]), s_max=float(g["s_max"]), tol=float(s["tol"]), scheme=s["scheme"],
            sample_every=s["sample_every"], snapshot_every=s["snapshot_every"],
            label_tol=float(s["label_tol"]), norm_bound=float(s["norm_bound"]),
        )

    def bvp_settings(self) -> BVPSettings:
        b = self.data["solver"]["bvp"]
        return BVPSettings(half_length=float(b["half_length"]), ns=int(b["ns"]), tol=float(b["tol"]),
                           max_iter=int(b["max_iter"]), guess_noise=float(b["guess_noise"]))

    def to_dict(self):
        return copy.deepcopy(self.data)

    def canonical_json(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()
