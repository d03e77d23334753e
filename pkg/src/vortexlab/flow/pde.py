"""s-evolution of the gauged Floer equations in temporal gauge.

All three systems share the v-equation

    d_s v + J(d_t v + X_eta(v) - X_H(v)) = 0

and differ in the eta-equation:

    higgs          d_s eta + mu(v) = 0
    vortex         same, circle action only, H = 0, standard J
    chern_simons   d_s eta + (|v|^2 + eps) mu(v) = 0

The Chern-Simons system is the gradient flow for the metric with weight
1 / (|v|^2 + eps) on the eta-sector; the energy is accumulated in the
metric of the system being integrated.

The initial-value problem in s is ill-posed: the operator J d_t has
spectrum of both signs, so high t-modes grow like exp(pi j s).  Forward
integration is still useful for short s-intervals (energy identity,
monotonicity, equivariance) and is the fallback of the flow-line search.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .. import grid
from ..families import AlmostComplexFamily, HamiltonianFamily
from ..group_action import TorusAction, moment_map
from ..loopspace import (
    PathState,
    Tangent,
    action_gradient_L2,
    action_value,
    match_vortex_label,
    metric_gJ,
)

SYSTEMS = ("higgs", "vortex", "chern_simons")
SCHEMES = ("rk4", "euler", "semi_implicit")
# size of the stability region of each scheme along the real axis
_SCHEME_RADIUS = {"rk4": 2.78, "euler": 1.0, "semi_implicit": 1.0}
STABILITY_SAFETY = 0.8

CONVERGED = "converged"
MAX_S = "max_s"
DIVERGED = "diverged"


class FlowInstability(RuntimeError):
    pass


@dataclass(frozen=True)
class PDESystem:
    kind: str
    action: TorusAction
    epsilon: float = 1e-8
    tau_double_shift: bool = False

    def __post_init__(self):
        if self.kind not in SYSTEMS:
            raise ValueError(f"unknown system {self.kind!r}; expected one of {SYSTEMS}")
        if not (0.0 <= self.epsilon <= 1e-2):
            raise ValueError("epsilon must lie in [0, 1e-2]")
        if self.kind == "vortex" and not self.action.is_circle():
            raise ValueError("the classical vortex system needs the circle action")

    @property
    def effective_action(self) -> TorusAction:
        """Action whose shifted moment map drives eta.

        Subtracting tau a second time (the literal reading of the flow
        equation with an already shifted mu) is the same as doubling tau.
        """
        if self.tau_double_shift:
            return self.action.with_tau(2.0 * np.asarray(self.action.tau))
        return self.action

    def warp(self, path: PathState):
        """Per-node weight on d_s eta; 1 except for Chern-Simons."""
        if self.kind != "chern_simons":
            return np.ones(path.nt + 1)
        return np.sum(np.abs(path.v) ** 2, axis=1) + self.epsilon


@dataclass
class FlowState:
    path: PathState
    s: float = 0.0
    step_index: int = 0
    energy_accum: float = 0.0
    residual_log: list = field(default_factory=list)  # (s, gradient norm)

    def copy(self):
        return replace(self, residual_log=list(self.residual_log))


@dataclass(frozen=True)
class FlowSettings:
    ds: float = 1e-3
    s_max: float = 1.0
    tol: float = 1e-8
    scheme: str = "rk4"
    sample_every: int = 10
    snapshot_every: int = 100
    label_tol: float = 1e-4
    norm_bound: float = 1e6
    check_stability: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.ds <= 0 or self.s_max < 0:
            raise ValueError("need ds > 0 and s_max >= 0")


def _hamiltonian(system, H):
    if system.kind == "vortex":
        return None
    return H


def _jfamily(system, J):
    return None if system.kind == "vortex" else J


def gradient(system: PDESystem, path: PathState, H=None, J=None) -> Tangent:
    """Gradient of the action for the metric of ``system``."""
    act = system.effective_action
    g = action_gradient_L2(act, path, _hamiltonian(system, H), _jfamily(system, J))
    if system.kind == "chern_simons":
        g = Tangent(g.v, g.eta * system.warp(path)[:, None])
    return g


def gradient_norm_sq(system: PDESystem, path: PathState, g: Tangent, J=None):
    """|g|^2 in the metric of ``system`` (the energy density integrated in t)."""
    if system.kind == "chern_simons":
        w = 1.0 / system.warp(path)
        scaled = Tangent(g.v, g.eta * np.sqrt(w)[:, None])
        return metric_gJ(path, scaled, scaled, _jfamily(system, J))
    return metric_gJ(path, g, g, _jfamily(system, J))


def system_action(system: PDESystem, path: PathState, H=None):
    return action_value(system.effective_action, path, _hamiltonian(system, H))


def stability_bound(system: PDESystem, path: PathState, scheme="rk4"):
    """Largest admissible ds for the explicit schemes.

    The fastest rate of the linearized right-hand side is about
    pi nt (from J d_t on the grid) plus |A eta| plus the moment-map sector;
    the bound is the scheme's stability radius over that rate, times 0.8.
    It scales like 1/nt because the operator is first order in t.
    """
    nt = path.nt
    A = np.abs(system.action.A).astype(float)
    rate = np.pi * nt + float(np.max(np.abs(path.eta) @ A.T)) + 1.0
    rate += float(np.max(np.sum(np.abs(path.v) ** 2, axis=1))) * float(np.max(A.sum(axis=0))) ** 2
    return STABILITY_SAFETY * _SCHEME_RADIUS[scheme] / rate


def _check(path: PathState, bound: float, s: float):
    if not (np.all(np.isfinite(path.v)) and np.all(np.isfinite(path.eta))):
        raise FlowInstability(f"non-finite state at s = {s:g}; reduce ds or shorten s_max")
    size = max(float(np.max(np.abs(path.v))), float(np.max(np.abs(path.eta))))
    if size > bound:
        raise FlowInstability(f"state norm {size:.3e} exceeds {bound:g} at s = {s:g}; "
                              "reduce ds or shorten s_max")


def _advance(system, path, H, J, ds, scheme):
    def rate(p):
        return -gradient(system, p, H, J)

    if scheme == "euler":
        return path + ds * rate(path)
    if scheme == "semi_implicit":
        # eta first from the current v, then v with the updated eta
        k = rate(path)
        mid = PathState(path.v, path.eta + ds * k.eta)
        kv = rate(mid)
        return PathState(path.v + ds * kv.v, mid.eta)
    k1 = rate(path)
    k2 = rate(path + (0.5 * ds) * k1)
    k3 = rate(path + (0.5 * ds) * k2)
    k4 = rate(path + ds * k3)
    return path + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: FlowState, system: PDESystem, H: HamiltonianFamily | None = None,
         J: AlmostComplexFamily | None = None, ds=1e-3, scheme="rk4", norm_bound=1e6,
         check_stability=False) -> FlowState:
    """One s-step of d_s(v, eta) = -gradient; energy by the trapezoid rule in s."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if check_stability:
        limit = stability_bound(system, state.path, scheme)
        if ds > limit:
            raise FlowInstability(f"ds = {ds:g} exceeds the stability bound {limit:.3e} "
                                  f"for scheme {scheme!r}")
    p0 = state.path
    e0 = gradient_norm_sq(system, p0, gradient(system, p0, H, J), J)
    p1 = _advance(system, p0, H, J, ds, scheme)
    n = state.step_index + 1
    s1 = n * ds
    _check(p1, norm_bound, s1)
    g1 = gradient(system, p1, H, J)
    e1 = gradient_norm_sq(system, p1, g1, J)
    log = list(state.residual_log)
    log.append((s1, float(np.sqrt(e1))))
    return FlowState(p1, s1, n, state.energy_accum + 0.5 * ds * (e0 + e1), log)


@dataclass
class FlowResult:
    samples: list            # (s, PathState)
    state: FlowState
    terminal: str
    label: tuple | None
    E: float
    action_start: float
    action_end: float
    message: str = ""
    history: list = field(default_factory=list)   # (s, energy, gradient norm) at samples

    @property
    def converged(self):
        return self.terminal == CONVERGED

    def summary(self):
        return {
            "terminal": self.terminal,
            "terminal_label": None if self.label is None else f"{self.label[0]},{'+' if self.label[1] > 0 else '-'}",
            "converged": self.converged,
            "E": self.E,
            "action_start": self.action_start,
            "action_end": self.action_end,
            "action_drop": self.action_start - self.action_end,
            "s": self.state.s,
            "steps": self.state.step_index,
            "final_gradient_norm": self.state.residual_log[-1][1] if self.state.residual_log else None,
            "message": self.message,
        }


def _label(system, path, tol):
    act = system.action
    if not (act.is_circle() and np.isclose(act.tau[0], -0.5)) or system.tau_double_shift:
        return None
    return match_vortex_label(act, path, tol)


def run_flow(initial, system: PDESystem, H=None, J=None, settings: FlowSettings | None = None,
             snapshot: Callable | None = None, start_action: float | None = None) -> FlowResult:
    """Integrate until the gradient norm is below ``tol`` or s reaches s_max.

    ``initial`` is a PathState or a FlowState (resume).  ``snapshot`` is
    called with the FlowState every ``snapshot_every`` steps.  Step k sits at
    s = k ds exactly, so a resumed run reproduces the uninterrupted one.
    """
    settings = settings or FlowSettings()
    if isinstance(initial, FlowState):
        state = initial.copy()
    else:
        state = FlowState(initial)
    ds = settings.ds
    a0 = system_action(system, state.path, H) if start_action is None else start_action
    if settings.check_stability:
        limit = stability_bound(system, state.path, settings.scheme)
        if ds > limit:
            raise FlowInstability(f"ds = {ds:g} exceeds the stability bound {limit:.3e} "
                                  f"for scheme {settings.scheme!r} at nt = {state.path.nt}")
    n_total = int(round(settings.s_max / ds))
    if not state.residual_log:
        g0 = gradient(system, state.path, H, J)
        state.residual_log.append((state.s, float(np.sqrt(gradient_norm_sq(system, state.path, g0, J)))))
    samples = [(state.s, state.path)]
    history = [(state.s, state.energy_accum, state.residual_log[-1][1])]
    terminal, message = MAX_S, ""
    while True:
        if state.residual_log[-1][1] <= settings.tol:
            terminal = CONVERGED
            break
        if state.step_index >= n_total:
            break
        try:
            state = step(state, system, H, J, ds, settings.scheme, settings.norm_bound)
        except FlowInstability as exc:
            terminal, message = DIVERGED, str(exc)
            break
        if settings.sample_every and state.step_index % settings.sample_every == 0:
            samples.append((state.s, state.path))
            history.append((state.s, state.energy_accum, state.residual_log[-1][1]))
        if snapshot is not None and settings.snapshot_every and state.step_index % settings.snapshot_every == 0:
            snapshot(state)
    if samples[-1][0] != state.s:
        samples.append((state.s, state.path))
        history.append((state.s, state.energy_accum, state.residual_log[-1][1]))
    a1 = system_action(system, state.path, H)
    label = _label(system, state.path, settings.label_tol)
    return FlowResult(samples, state, terminal, label, state.energy_accum, a0, a1, message, history)


def perturb(path: PathState, rng, amplitude=1e-3, modes=3):
    """Smooth perturbation that keeps the boundary condition."""
    rng = np.random.default_rng(rng)
    t = grid.nodes(path.nt)[:, None]
    j = np.arange(modes)[None, :]
    cos = np.cos(np.pi * t * j)
    sin = np.sin(np.pi * t * (j + 1))
    re = cos @ rng.normal(size=(modes, path.n))
    im = sin @ rng.normal(size=(modes, path.n))
    eta = cos @ rng.normal(size=(modes, path.k))
    return PathState(path.v + amplitude * (re + 1j * im), path.eta + amplitude * eta)


def moment_residual(system: PDESystem, path: PathState):
    return float(np.max(np.abs(moment_map(system.effective_action, path.v))))
