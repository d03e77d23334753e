"""Coulomb gauge on [0, 1]: projection, the metric g_c, and the g_c-gradient.

The identity component H_0 of the gauge group (xi(0) = xi(1) = 0) acts
freely, and every path is H_0-equivalent to exactly one path with constant
eta.  On that section the quotient of the L^2 metric is

    g_c(w1, w2) = int <v1 - L_v xi_1, v2> dt + <eta1, eta2>

where xi_1 solves L_v^* v1 - L_v^* L_v xi + d_t^2 xi = 0, xi(0) = xi(1) = 0.
Discretely d_t^2 is the 3-point stencil; with it the expression above is
exactly the minimum of the discrete L^2 norm over the gauge orbit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solve_banded

from . import grid
from .families import HamiltonianFamily
from .group_action import L_adjoint, TorusAction, infinitesimal_action, moment_map, real_inner
from .loopspace import (
    GaugeTransform,
    PathState,
    Tangent,
    dv_dt,
    gauge_apply,
    project_tangent,
)


class GaugeError(ValueError):
    pass


class SingularBVPError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoulombData:
    kappa: np.ndarray      # (nt+1, k), kappa(0) = 0
    kappa_bar: np.ndarray  # (k,)
    mu_bar: np.ndarray     # (k,)
    xi_v: np.ndarray       # (nt+1, k), zero at both ends

    def to_dict(self):
        return {
            "kappa": self.kappa.tolist(),
            "kappa_bar": self.kappa_bar.tolist(),
            "mu_bar": self.mu_bar.tolist(),
            "xi_v": self.xi_v.tolist(),
        }


def _require_coulomb(path: PathState):
    if not path.eta_is_constant(1e-10):
        raise GaugeError("path is not in Coulomb gauge (eta is not constant in t)")


def coulomb_project(action: TorusAction, path: PathState):
    """Gauge-equivalent path with constant eta, and the transform used.

    xi(t) = int_0^t (eta - eta_bar), so eta - d_t xi = eta_bar.
    """
    eta_bar = grid.integrate(path.eta)
    xi = grid.antiderivative(path.eta - eta_bar)
    xi[[0, -1]] = 0.0
    h = GaugeTransform(xi, action)
    projected = gauge_apply(h, path)
    # eta - d_t xi equals eta_bar up to rounding; store it exactly
    out = PathState(projected.v, np.broadcast_to(eta_bar, path.eta.shape))
    return out, h


def compute_coulomb_data(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None):
    """kappa_H, its mean, mean of mu, and the closed-form xi_v.

    xi_v(t) = int_0^t (mu + kappa) - t (mu_bar + kappa_bar), cumulative
    trapezoid throughout so kappa(0) = 0 and xi_v(1) = 0 hold exactly.
    """
    _require_coulomb(path)
    t = path.t
    mu = moment_map(action, path.v)
    if H is None or H.name == "zero":
        dens = np.zeros_like(mu)
    else:
        dens = L_adjoint(action, path.v, H.gradient(t, path.v))
    kappa = cumulative_trapezoid(dens, t, axis=0, initial=0.0)
    kappa_bar = grid.integrate(kappa)
    mu_bar = grid.integrate(mu)
    xi_v = cumulative_trapezoid(mu + kappa, t, axis=0, initial=0.0) - t[:, None] * (mu_bar + kappa_bar)
    xi_v[0] = 0.0
    xi_v[-1] = 0.0
    return CoulombData(kappa, kappa_bar, mu_bar, xi_v)


# --- the Dirichlet boundary-value problem ----------------------------------


def _bvp_matrix(action: TorusAction, v, with_potential=True):
    """Banded form of -D2 + L^*L on the interior nodes (interleaved k blocks)."""
    nt = v.shape[0] - 1
    k = action.k
    N = (nt - 1) * k
    h2 = 1.0 / nt ** 2
    ab = np.zeros((2 * k + 1, N))
    A = action.A.astype(float)
    for i in range(1, nt):
        if with_potential:
            M = A.T @ (np.abs(v[i]) ** 2 * A.T).T
        else:
            M = np.zeros((k, k))
        M = M + np.eye(k) * (2.0 / h2)
        base = (i - 1) * k
        for a in range(k):
            for b in range(k):
                ab[k + (base + a) - (base + b), base + b] = M[a, b]
            if i < nt - 1:
                # coupling to node i+1, same component
                ab[k + (base + a) - (base + k + a), base + k + a] = -1.0 / h2
                ab[k + (base + k + a) - (base + a), base + a] = -1.0 / h2
    return ab


def solve_dirichlet(action: TorusAction, v, rhs, with_potential=True):
    """Solve (-d_t^2 + L_v^* L_v) xi = rhs with xi(0) = xi(1) = 0.

    ``rhs`` has shape (nt+1, k); its end values are ignored.
    """
    nt = v.shape[0] - 1
    k = action.k
    ab = _bvp_matrix(action, v, with_potential)
    b = np.asarray(rhs, dtype=float)[1:nt].reshape(-1)
    try:
        x = solve_banded((k, k), ab, b)
    except np.linalg.LinAlgError as exc:
        raise SingularBVPError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularBVPError("non-finite solution of the Coulomb boundary-value problem")
    xi = np.zeros((nt + 1, k))
    xi[1:nt] = x.reshape(nt - 1, k)
    return xi


def second_difference(xi):
    nt = xi.shape[0] - 1
    d2 = np.zeros_like(xi)
    d2[1:-1] = (xi[2:] - 2 * xi[1:-1] + xi[:-2]) * nt ** 2
    return d2


def xi_for_tangent(action: TorusAction, path: PathState, vhat):
    """xi_{v, vhat} from L^* vhat - L^* L xi + d_t^2 xi = 0."""
    return solve_dirichlet(action, path.v, L_adjoint(action, path.v, vhat))


def bvp_residual(action: TorusAction, path: PathState, vhat, xi):
    """Sup norm of the discrete equation on the interior nodes."""
    v = path.v
    r = (L_adjoint(action, v, vhat)
         - L_adjoint(action, v, infinitesimal_action(action, xi, v))
         + second_difference(xi))
    return float(np.max(np.abs(r[1:-1]))) if path.nt > 1 else 0.0


def coulomb_metric_pair(action: TorusAction, path: PathState, w1: Tangent, w2: Tangent,
                        slot=1):
    """g_c(w1, w2); ``slot`` picks which argument carries xi (both agree)."""
    v = path.v
    e1 = np.asarray(w1.eta)
    e2 = np.asarray(w2.eta)
    e1 = e1[0] if e1.ndim == 2 else e1
    e2 = e2[0] if e2.ndim == 2 else e2
    if slot == 1:
        xi = xi_for_tangent(action, path, w1.v)
        vv = real_inner(w1.v - infinitesimal_action(action, xi, v), w2.v)
    else:
        xi = xi_for_tangent(action, path, w2.v)
        vv = real_inner(w1.v, w2.v - infinitesimal_action(action, xi, v))
    return float(grid.integrate(vv) + e1 @ e2)


# --- gradient and flow -------------------------------------------------------


def _l2_v_gradient(action, path, H):
    """i (d_t v + X_eta(v)) - grad H, the v-part of the L^2 gradient."""
    g = 1j * (dv_dt(path) + infinitesimal_action(action, path.eta, path.v))
    if H is not None and H.name != "zero":
        g = g - H.gradient(path.t, path.v)
    return g


def solve_laplace_dirichlet(rhs):
    """Solve -D2 xi = rhs, xi(0) = xi(1) = 0, along axis 0 (any trailing shape)."""
    rhs = np.asarray(rhs, dtype=float)
    nt = rhs.shape[0] - 1
    h2 = 1.0 / nt ** 2
    ab = np.empty((3, nt - 1))
    ab[0] = -1.0 / h2
    ab[1] = 2.0 / h2
    ab[2] = -1.0 / h2
    inner = rhs[1:nt].reshape(nt - 1, -1)
    xi = np.zeros_like(rhs)
    xi[1:nt] = solve_banded((1, 1), ab, inner).reshape(rhs[1:nt].shape)
    return xi


def coulomb_xi(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None,
               xi="discrete"):
    """The gauge correction xi_v of the Coulomb gradient.

    ``xi="closed_form"`` returns the cumulative-integral formula;
    ``xi="discrete"`` solves d_t^2 xi = -L^*(L^2 gradient) with the same
    3-point stencil as g_c, which makes the result the exact g_c-gradient
    of the discretized action.  ``xi="spectral"`` integrates mu + kappa with
    the spectral antiderivative used by ``coulomb_project``; for invariant H
    this is the infinitesimal version of that projection.  All three agree
    to O(nt^-2).
    """
    if xi == "closed_form":
        return compute_coulomb_data(action, path, H).xi_v
    if xi == "spectral":
        data = compute_coulomb_data(action, path, H)
        dens = moment_map(action, path.v) + data.kappa
        out = grid.antiderivative(dens - grid.integrate(dens))
        out[[0, -1]] = 0.0
        return out
    if xi != "discrete":
        raise ValueError(f"unknown xi mode {xi!r}")
    g = _l2_v_gradient(action, path, H)
    return solve_laplace_dirichlet(L_adjoint(action, path.v, g))


def coulomb_gradient(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None,
                     xi="discrete"):
    """g_c-gradient (L_v xi_v + i(d_t v + L_v eta - X_H), mu_bar).

    The eta-part is a single k-vector broadcast over the nodes.
    """
    _require_coulomb(path)
    xi_v = coulomb_xi(action, path, H, xi)
    vhat = infinitesimal_action(action, xi_v, path.v) + _l2_v_gradient(action, path, H)
    mu_bar = grid.integrate(moment_map(action, path.v))
    return Tangent(project_tangent(vhat), np.broadcast_to(mu_bar, path.eta.shape).copy())


def coulomb_gradient_norm(action, path, H=None, xi="discrete"):
    g = coulomb_gradient(action, path, H, xi)
    return float(np.sqrt(max(coulomb_metric_pair(action, path, g, g), 0.0)))


def coulomb_step(action: TorusAction, path: PathState, H: HamiltonianFamily | None = None,
                 ds=1e-3, scheme="rk4", xi="discrete"):
    """One step of d_s u = -grad_{g_c} A_H within the Coulomb section."""

    def rate(p):
        return -coulomb_gradient(action, p, H, xi)

    if scheme == "euler":
        return path + ds * rate(path)
    if scheme != "rk4":
        raise ValueError(f"unknown scheme {scheme!r}")
    k1 = rate(path)
    k2 = rate(path + (0.5 * ds) * k1)
    k3 = rate(path + (0.5 * ds) * k2)
    k4 = rate(path + ds * k3)
    return path + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def coulomb_flow_residual(action: TorusAction, path0: PathState, path1: PathState, ds,
                          H: HamiltonianFamily | None = None, where="left", xi="closed_form"):
    """Residual of the Coulomb-gauge flow equations for a pair of slices.

    d_s v + X_{xi_v}(v) + i(d_t v + X_eta(v) - X_H(v)) = 0,
    d_s eta - d_t xi_v + mu(v) + kappa - kappa_bar = 0,
    with d_s a forward difference and the remaining terms evaluated at
    ``path0`` (``where="left"``) or at the mean of the slices ("mid").
    d_t xi_v is taken from its defining integral, mu + kappa - mu_bar -
    kappa_bar, so the second line reduces to d_s eta + mu_bar.
    """
    if path0.v.shape != path1.v.shape or path0.eta.shape != path1.eta.shape:
        raise ValueError("slices live on different grids")
    _require_coulomb(path0)
    _require_coulomb(path1)
    if where == "left":
        p = path0
    elif where == "mid":
        p = PathState(0.5 * (path0.v + path1.v), 0.5 * (path0.eta + path1.eta))
    else:
        raise ValueError(f"unknown evaluation point {where!r}")
    data = compute_coulomb_data(action, p, H)
    xi_v = data.xi_v if xi == "closed_form" else coulomb_xi(action, p, H, xi)
    # _l2_v_gradient(p) = i(d_t v + X_eta - X_H)
    res_v = ((path1.v - path0.v) / ds + infinitesimal_action(action, xi_v, p.v)
             + _l2_v_gradient(action, p, H))
    mu = moment_map(action, p.v)
    dxi = mu + data.kappa - data.mu_bar - data.kappa_bar
    res_eta = (path1.eta - path0.eta) / ds - dxi + mu + data.kappa - data.kappa_bar
    return float(max(np.max(np.abs(res_v)), np.max(np.abs(res_eta))))


def kappa_bound_constant(action: TorusAction, H: HamiltonianFamily, samples=20000,
                         safety=1.5, rng=0):
    """Estimated c(H) with ||kappa_H(v) - kappa_bar_H(v)|| <= c(H) for all v.

    |kappa - kappa_bar| <= 2 sup |L_z^* grad H_t(z)|; the sup is sampled
    over the support ball and inflated by ``safety``.  An estimate, not a
    certified bound.
    """
    if H.name == "zero" or H.support_radius <= 0.0:
        return 0.0
    rng = np.random.default_rng(rng)
    n = action.n
    R = H.support_radius
    # uniform points in the ball of radius R in C^n = R^2n
    x = rng.normal(size=(samples, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= R * rng.uniform(size=(samples, 1)) ** (1.0 / (2 * n))
    z = x[:, :n] + 1j * x[:, n:]
    t = rng.uniform(size=samples)
    dens = L_adjoint(action, z, H.gradient(t, z))
    sup = float(np.max(np.linalg.norm(dens, axis=1)))
    return 2.0 * safety * sup


def kappa_deviation(action: TorusAction, path: PathState, H: HamiltonianFamily):
    """||kappa_H(v) - kappa_bar_H(v)||_inf along a path (eta is irrelevant)."""
    flat = PathState(path.v, np.zeros_like(path.eta))
    data = compute_coulomb_data(action, flat, H)
    return float(np.max(np.abs(data.kappa - data.kappa_bar)))
