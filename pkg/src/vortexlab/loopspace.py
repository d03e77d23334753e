"""Discretized path space with Lagrangian boundary condition.

A path is a pair (v, eta) sampled at t_i = i / nt, with v(0), v(1) real.
The action functional is

    A_H(v, eta) = int lambda(v) d_t v - int H_t(v) dt + int <mu(v), eta> dt

and its gradient for g_J is (J (d_t v + X_eta(v) - X_H(v)), mu(v)), whose
negative flow is the generalized vortex equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid
from .families import AlmostComplexFamily, HamiltonianFamily
from .group_action import (
    GroupElement,
    TorusAction,
    in_isotropy,
    infinitesimal_action,
    isotropy_lattice,
    moment_map,
    omega,
    real_inner,
    rotate,
)

BOUNDARY_ATOL = 1e-9


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class PathState:
    """Nodal values v (nt+1, n) complex and eta (nt+1, k) real."""

    v: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=complex)
        eta = np.array(self.eta, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if eta.ndim == 1:
            eta = eta[:, None]
        if v.shape[0] != eta.shape[0] or v.shape[0] < 3:
            raise ValueError(f"inconsistent grid sizes {v.shape} and {eta.shape}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(eta))):
            raise ValueError("path contains non-finite values")
        scale = max(1.0, float(np.max(np.abs(v))))
        ends = np.abs(np.imag(v[[0, -1]]))
        if np.any(ends > BOUNDARY_ATOL * scale):
            raise BoundaryError(f"v(0), v(1) must be real; max |Im| = {ends.max():.3e}")
        # snap the rounding-level imaginary parts to exact zeros
        v[[0, -1]] = np.real(v[[0, -1]])
        v.setflags(write=False)
        eta.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "eta", eta)

    @property
    def nt(self) -> int:
        return self.v.shape[0] - 1

    @property
    def n(self) -> int:
        return self.v.shape[1]

    @property
    def k(self) -> int:
        return self.eta.shape[1]

    @property
    def t(self):
        return grid.nodes(self.nt)

    def eta_is_constant(self, atol=1e-12) -> bool:
        return bool(np.max(np.abs(self.eta - self.eta[0])) <= atol * max(1.0, np.max(np.abs(self.eta))))

    def __add__(self, other: "Tangent"):
        return PathState(self.v + other.v, self.eta + other.eta)


@dataclass(frozen=True)
class Tangent:
    """Tangent vector (vhat, etahat) on the same grid as a path."""

    v: np.ndarray
    eta: np.ndarray

    def __mul__(self, c):
        return Tangent(self.v * c, self.eta * c)

    __rmul__ = __mul__

    def __add__(self, other):
        return Tangent(self.v + other.v, self.eta + other.eta)

    def __sub__(self, other):
        return Tangent(self.v - other.v, self.eta - other.eta)

    def __neg__(self):
        return Tangent(-self.v, -self.eta)


def project_tangent(vhat):
    """Zero Im vhat at the ends (linearized Lagrangian boundary condition)."""
    vhat = np.array(vhat, dtype=complex)
    vhat[[0, -1]] = np.real(vhat[[0, -1]])
    return vhat


# --- action functional and its gradient -----------------------------------


def dv_dt(path: PathState, scheme="spectral"):
    return grid.derivative(path.v, grid.CONJ, scheme)


def action_value(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None,
                 scheme="spectral"):
    """Trapezoidal discretization of A_H."""
    t = path.t
    dx = np.real(dv_dt(path, scheme))
    lam = np.sum(np.imag(path.v) * dx, axis=1)
    mu = moment_map(action, path.v)
    density = lam + np.sum(mu * path.eta, axis=1)
    if H is not None:
        density = density - H.value(t, path.v)
    return float(grid.integrate(density))


def _flow_term(action, path, H, scheme):
    """d_t v + X_eta(v) - X_H(v)."""
    u = dv_dt(path, scheme) + infinitesimal_action(action, path.eta, path.v)
    if H is not None:
        u = u - H.hamiltonian_vector_field(path.t, path.v)
    return u


def action_gradient_L2(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None,
                       J: AlmostComplexFamily | None = None, scheme="spectral"):
    """g_J-gradient of A_H as a Tangent (projected onto the boundary condition)."""
    u = _flow_term(action, path, H, scheme)
    if J is None or J.is_standard:
        vhat = 1j * u
    else:
        vhat = J.apply(path.t, path.v, u)
    return Tangent(project_tangent(vhat), moment_map(action, path.v))


def metric_gJ(path: PathState, a: Tangent, b: Tangent, J: AlmostComplexFamily | None = None):
    """g_J(a, b) = int omega(a_v, J b_v) dt + int <a_eta, b_eta> dt."""
    if J is None or J.is_standard:
        vv = real_inner(a.v, b.v)
    else:
        vv = omega(a.v, J.apply(path.t, path.v, b.v))
    ee = np.sum(np.asarray(a.eta) * np.asarray(b.eta), axis=-1)
    return float(grid.integrate(vv) + grid.integrate(np.broadcast_to(ee, vv.shape)))


def critical_residual(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None,
                      scheme="spectral"):
    """Sup norm of (d_t v + X_eta - X_H, mu(v)) over the nodes."""
    u = _flow_term(action, path, H, scheme)
    mu = moment_map(action, path.v)
    return float(max(np.max(np.abs(u)), np.max(np.abs(mu))))


# --- gauge group ------------------------------------------------------------


@dataclass(frozen=True)
class GaugeTransform:
    """h(t) = e^{i xi(t)} with e^{i xi(0)}, e^{i xi(1)} in the isotropy of R^n.

    ``xi`` is a continuous lift, shape (nt+1, k).
    """

    xi: np.ndarray
    action: TorusAction = field(repr=False)

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if xi.ndim == 1:
            xi = xi[:, None]
        if xi.shape[1] != self.action.k:
            raise ValueError("xi has the wrong number of components")
        for end in (xi[0], xi[-1]):
            if not in_isotropy(self.action, end, atol=1e-9):
                raise BoundaryError("gauge transform must take boundary values in the isotropy group")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def nt(self):
        return self.xi.shape[0] - 1

    @property
    def boundary_start(self) -> GroupElement:
        return GroupElement(self.xi[0])

    @property
    def boundary_end(self) -> GroupElement:
        return GroupElement(self.xi[-1])

    @classmethod
    def identity(cls, action, nt):
        return cls(np.zeros((nt + 1, action.k)), action)

    def dxi_dt(self):
        """d_t xi, exact on the linear part xi(0) + t (xi(1) - xi(0))."""
        t = grid.nodes(self.nt)[:, None]
        jump = self.xi[-1] - self.xi[0]
        xi0 = self.xi - self.xi[0] - t * jump
        return grid.derivative(xi0, grid.ODD) + jump

    def __mul__(self, other: "GaugeTransform") -> "GaugeTransform":
        return GaugeTransform(self.xi + other.xi, self.action)

    def inverse(self) -> "GaugeTransform":
        return GaugeTransform(-self.xi, self.action)


def gauge_apply(h: GaugeTransform, path: PathState) -> PathState:
    """h_*(v, eta) = (rho(h) v, eta - d_t xi)."""
    if h.nt != path.nt:
        raise ValueError("gauge transform and path live on different grids")
    return PathState(rotate(h.action, h.xi, path.v), path.eta - h.dxi_dt())


def transport_tangent(h: GaugeTransform, w: Tangent) -> Tangent:
    """Differential of gauge_apply: rotate the v-part, keep the eta-part."""
    return Tangent(rotate(h.action, h.xi, w.v), np.array(w.eta))


def gauge_decompose(h: GaugeTransform):
    """Split h = h0 * exp(i t B m) * b.

    ``b`` = h(0) in the isotropy group, ``m`` the integer coordinates of
    xi(1) - xi(0) in the basis B of the lattice {theta : A theta in pi Z^n},
    and ``h0`` has xi0(0) = xi0(1) = 0.
    """
    B, _, _ = isotropy_lattice(h.action)
    jump = h.xi[-1] - h.xi[0]
    m_real = np.linalg.solve(B, jump)
    m = np.rint(m_real).astype(np.int64)
    if np.max(np.abs(m_real - m)) > 1e-8:
        raise BoundaryError("boundary jump is not in the isotropy lattice")
    t = grid.nodes(h.nt)[:, None]
    xi0 = h.xi - h.xi[0] - t * jump
    xi0[[0, -1]] = 0.0
    h0 = GaugeTransform(xi0, h.action)
    b = GroupElement(h.xi[0])
    return h0, m, b


def gauge_compose_parts(h0: GaugeTransform, m, b: GroupElement) -> GaugeTransform:
    """Inverse of gauge_decompose (uses the canonical lift of b)."""
    B, _, _ = isotropy_lattice(h0.action)
    t = grid.nodes(h0.nt)[:, None]
    xi = h0.xi + t * (B @ np.asarray(m, dtype=float))[None, :] + b.theta[None, :]
    return GaugeTransform(xi, h0.action)


# --- circle-case critical set ------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    m: int
    sign: int
    path: PathState
    action_value: float

    @property
    def label(self):
        return (self.m, "+" if self.sign > 0 else "-")

    @property
    def label_str(self):
        return f"{self.m},{'+' if self.sign > 0 else '-'}"


def parse_label(text):
    """'1,+' or (1, '+') -> (1, +1)."""
    if isinstance(text, tuple):
        m, s = text
    else:
        parts = str(text).replace(" ", "").split(",")
        if len(parts) != 2:
            raise ValueError(f"label {text!r} is not of the form 'm,+' or 'm,-'")
        m, s = parts
    sign = {"+": 1, "-": -1, "1": 1, "-1": -1}.get(str(s))
    if sign is None:
        raise ValueError(f"label {text!r}: sign must be '+' or '-'")
    return int(m), sign


def require_circle(action: TorusAction):
    if not (action.is_circle() and np.isclose(action.tau[0], -0.5)):
        raise ValueError("vortex critical set requires the standard circle action with tau = -1/2")


def vortex_critical_point(action: TorusAction, m, sign, nt) -> CriticalPoint:
    """v(t) = sign e^{-i pi m t}, eta = pi m, with action pi m / 2."""
    require_circle(action)
    t = grid.nodes(nt)
    v = sign * np.exp(-1j * np.pi * m * t)
    eta = np.full(nt + 1, np.pi * m)
    path = PathState(v[:, None], eta[:, None])
    return CriticalPoint(int(m), int(sign), path, action_value(action, path))


def enumerate_vortex_critical(action: TorusAction, m_min, m_max, nt=256):
    """All critical points labelled (m, sign), m_min <= m <= m_max."""
    require_circle(action)
    out = []
    for m in range(m_min, m_max + 1):
        for sign in (1, -1):
            out.append(vortex_critical_point(action, m, sign, nt))
    return out


def match_vortex_label(action: TorusAction, path: PathState, tol=1e-4):
    """Label (m, sign) of the critical component nearest to ``path``.

    Uses gauge-invariant data under the identity component of the gauge
    group: the mean of eta and the sign of v(0).  Returns None when the
    mean of eta is farther than ``tol`` from pi Z.
    """
    require_circle(action)
    eta_bar = float(grid.integrate(path.eta[:, 0]))
    m = int(np.rint(eta_bar / np.pi))
    if abs(eta_bar - np.pi * m) > tol:
        return None
    sign = 1 if np.real(path.v[0, 0]) >= 0 else -1
    return m, sign


def random_path(action: TorusAction, nt, rng, modes=4, amplitude=0.3, base=None):
    """Smooth random path respecting the reflection symmetry.

    Re v and eta get cosine modes, Im v sine modes; ``base`` (a PathState)
    is perturbed if given, otherwise v starts from a random real constant.
    """
    rng = np.random.default_rng(rng)
    t = grid.nodes(nt)[:, None]
    j = np.arange(modes)[None, :]
    cos = np.cos(np.pi * t * j)
    sin = np.sin(np.pi * t * (j + 1))
    n, k = action.n, action.k
    decay = 1.0 / (1.0 + np.arange(modes)) ** 2
    re = cos @ (rng.normal(size=(modes, n)) * decay[:, None])
    im = sin @ (rng.normal(size=(modes, n)) * decay[:, None])
    eta = cos @ (rng.normal(size=(modes, k)) * decay[:, None])
    if base is None:
        v = rng.normal(size=(1, n)) + amplitude * (re + 1j * im)
        return PathState(v, eta)
    return PathState(base.v + amplitude * (re + 1j * im), base.eta + amplitude * eta)


def random_tangent(action: TorusAction, nt, rng, modes=4, constant_eta=False):
    rng = np.random.default_rng(rng)
    p = random_path(action, nt, rng, modes=modes, amplitude=1.0)
    v = p.v
    eta = p.eta
    if constant_eta:
        eta = np.broadcast_to(rng.normal(size=(1, action.k)), eta.shape).copy()
    return Tangent(project_tangent(v), eta)
