"""Connecting flow lines as a boundary-value problem on the strip.

Forward integration in s cannot reach a flow line (see ``pde``), so the
search treats u(s) = (v(s, .), eta(s)) on [-S, S] as the unknown, in
Coulomb gauge, with both ends pinned to critical points.  The Coulomb flow

    d_s u + grad_c A_H(u) = 0

is discretized by the implicit midpoint (box) rule in s and solved in the
least-squares sense by Levenberg-Marquardt.  The Jacobian is block
bidiagonal; its blocks come from central differences of the batched
gradient at the midpoints, and the normal equations are block tridiagonal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import grid
from ..families import HamiltonianFamily
from ..gaugefix import coulomb_metric_pair, solve_laplace_dirichlet
from ..group_action import TorusAction, isotropy_lagrangian, isotropy_lattice, L_adjoint, moment_map
from ..loopspace import PathState, Tangent, action_value, match_vortex_label
from . import pde

log = logging.getLogger(__name__)


class FlowLineSearchError(RuntimeError):
    def __init__(self, message, best_residual=float("inf")):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class BVPSettings:
    half_length: float = 16.0     # S
    ns: int = 128                 # number of s-intervals
    tol: float = 1e-5             # sup norm of the discrete flow residual
    max_iter: int = 40
    stall_iter: int = 3
    guess_noise: float = 1e-3
    guess_width: float = 1.0
    fd_step: float = 1e-6
    fallback: bool = True
    fallback_settings: pde.FlowSettings = field(default_factory=lambda: pde.FlowSettings(
        ds=2e-3, s_max=20.0, tol=1e-6, sample_every=0, snapshot_every=0))


# --- packing ---------------------------------------------------------------


class _Layout:
    """Real coordinates of one Coulomb slice: Re v, Im v (interior), eta."""

    def __init__(self, nt, n, k):
        self.nt, self.n, self.k = nt, n, k
        self.n_re = (nt + 1) * n
        self.n_im = (nt - 1) * n
        self.size = self.n_re + self.n_im + k
        w = np.sqrt(grid.trapezoid_weights(nt))
        self.weights = np.concatenate([
            np.repeat(w, n),
            np.repeat(w[1:-1], n),
            np.ones(k),
        ])

    def pack(self, v, eta):
        """v (..., nt+1, n), eta (..., k) -> (..., size)."""
        lead = v.shape[:-2]
        re = np.real(v).reshape(lead + (-1,))
        im = np.imag(v[..., 1:-1, :]).reshape(lead + (-1,))
        return np.concatenate([re, im, eta], axis=-1)

    def unpack(self, x):
        lead = x.shape[:-1]
        nt, n = self.nt, self.n
        re = x[..., : self.n_re].reshape(lead + (nt + 1, n))
        im = np.zeros_like(re)
        im[..., 1:-1, :] = x[..., self.n_re: self.n_re + self.n_im].reshape(lead + (nt - 1, n))
        eta = x[..., self.n_re + self.n_im:]
        return re + 1j * im, eta


def batched_coulomb_gradient(action: TorusAction, v, eta, H: HamiltonianFamily | None = None):
    """Coulomb gradient of many slices at once.

    ``v`` has shape (S, nt+1, n), ``eta`` shape (S, k).  Uses the discrete
    gauge correction, so each slice agrees with ``coulomb_gradient``.
    """
    vt = np.moveaxis(v, 0, 1)                       # (nt+1, S, n)
    nt = vt.shape[0] - 1
    A = action.A.astype(float)
    dv = grid.derivative(vt, grid.CONJ)
    phase = (eta @ A.T)[None, :, :]                 # (1, S, n)
    g = 1j * (dv + 1j * phase * vt)
    if H is not None and H.name != "zero":
        t = grid.nodes(nt)[:, None]
        g = g - H.gradient(t, vt)
    xi = solve_laplace_dirichlet(L_adjoint(action, vt, g))   # (nt+1, S, k)
    vhat = 1j * (xi @ A.T) * vt + g
    vhat[[0, -1]] = np.real(vhat[[0, -1]])
    etahat = grid.integrate(moment_map(action, vt))          # (S, k)
    return np.moveaxis(vhat, 1, 0), etahat


# --- block tridiagonal solve -------------------------------------------------


def _solve_block_tridiagonal(diag, upper, rhs):
    """Solve a symmetric block tridiagonal system.

    ``diag`` (m, p, p), ``upper`` (m-1, p, p) with upper[i] the (i, i+1)
    block, ``rhs`` (m, p).
    """
    m = len(diag)
    D = [None] * m
    y = [None] * m
    D[0] = diag[0]
    y[0] = rhs[0]
    for i in range(1, m):
        L = np.linalg.solve(D[i - 1], upper[i - 1]).T      # upper^T D^-1
        D[i] = diag[i] - L @ upper[i - 1]
        y[i] = rhs[i] - L @ y[i - 1]
    x = np.empty_like(rhs)
    x[-1] = np.linalg.solve(D[-1], y[-1])
    for i in range(m - 2, -1, -1):
        x[i] = np.linalg.solve(D[i], y[i] - upper[i] @ x[i + 1])
    return x


# --- the discrete problem -----------------------------------------------------


class _StripProblem:
    def __init__(self, action, H, layout, s, x_minus, x_plus, fd_step):
        self.action = action
        self.H = H
        self.lay = layout
        self.s = s
        self.ds = s[1] - s[0]
        self.x_minus = x_minus
        self.x_plus = x_plus
        self.h = fd_step

    def full(self, X):
        return np.concatenate([self.x_minus[None], X, self.x_plus[None]])

    def G(self, U):
        v, eta = self.lay.unpack(U)
        gv, ge = batched_coulomb_gradient(self.action, v, eta, self.H)
        return self.lay.pack(gv, ge)

    def residual(self, X):
        """Unweighted box-scheme residual, shape (ns, size)."""
        U = self.full(X)
        mid = 0.5 * (U[1:] + U[:-1])
        return (U[1:] - U[:-1]) / self.ds + self.G(mid)

    def gradient_jacobian(self, X):
        """d G / d u at every midpoint, shape (ns, size, size)."""
        U = self.full(X)
        mid = 0.5 * (U[1:] + U[:-1])
        p = self.lay.size
        out = np.empty((len(mid), p, p))
        for c in range(p):
            e = np.zeros(p)
            e[c] = self.h
            out[:, :, c] = (self.G(mid + e) - self.G(mid - e)) / (2 * self.h)
        return out


def _lm_solve(prob: _StripProblem, X0, tol, max_iter, stall_iter=3):
    W = prob.lay.weights
    X = X0.copy()
    R = prob.residual(X)
    cost = 0.5 * np.sum((W * R) ** 2)
    lam = 1e-3
    history = [float(np.max(np.abs(R)))]
    it = 0
    stalled = 0
    for it in range(1, max_iter + 1):
        if history[-1] <= tol or stalled >= stall_iter:
            break
        DG = prob.gradient_jacobian(X)
        ident = np.eye(prob.lay.size) / prob.ds
        # weighted blocks of interval j: A_j on node j, B_j on node j+1
        Ablk = W[None, :, None] * (-ident[None] + 0.5 * DG)
        Bblk = W[None, :, None] * (ident[None] + 0.5 * DG)
        WR = W * R
        m = len(X)
        At = np.swapaxes(Ablk, 1, 2)
        Bt = np.swapaxes(Bblk, 1, 2)
        diag = Bt[:m] @ Bblk[:m] + At[1:] @ Ablk[1:]
        upper = At[1:m] @ Bblk[1:m]
        grad = np.einsum("jab,ja->jb", Bblk[:m], WR[:m]) + np.einsum("jab,ja->jb", Ablk[1:], WR[1:])
        scale = np.einsum("jbb->jb", diag)
        accepted = False
        for _ in range(12):
            damped = diag + lam * np.einsum("jb,bc->jbc", scale, np.eye(prob.lay.size))
            dX = _solve_block_tridiagonal(damped, upper, -grad)
            Xt = X + dX
            Rt = prob.residual(Xt)
            ct = 0.5 * np.sum((W * Rt) ** 2)
            if np.isfinite(ct) and ct < cost:
                X, R, cost = Xt, Rt, ct
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 4.0
        history.append(float(np.max(np.abs(R))))
        stalled = stalled + 1 if history[-1] > (1.0 - 1e-3) * history[-2] else 0
        log.debug("lm iter %d: sup residual %.3e, lambda %.1e", it, history[-1], lam)
        if not accepted:
            break
    return X, history, it


# --- results -------------------------------------------------------------------


@dataclass
class FlowLine:
    s: np.ndarray
    v: np.ndarray            # (ns+1, nt+1, n)
    eta: np.ndarray          # (ns+1, nt+1, k)
    energy: float
    energy_gradient: float
    action_drop: float
    residual: float
    converged: bool
    method: str
    source_label: tuple | None = None
    target_label: tuple | None = None
    iterations: int = 0
    history: list = field(default_factory=list)
    message: str = ""

    def path(self, j) -> PathState:
        return PathState(self.v[j], self.eta[j])

    @property
    def energy_error(self):
        return abs(self.energy - self.action_drop) / max(abs(self.action_drop), 1e-300)

    def summary(self):
        def lab(x):
            return None if x is None else f"{x[0]},{'+' if x[1] > 0 else '-'}"

        return {
            "method": self.method,
            "converged": self.converged,
            "source_label": lab(self.source_label),
            "target_label": lab(self.target_label),
            "energy": self.energy,
            "energy_from_gradient": self.energy_gradient,
            "action_drop": self.action_drop,
            "energy_relative_error": self.energy_error,
            "residual": self.residual,
            "iterations": self.iterations,
            "s_range": [float(self.s[0]), float(self.s[-1])],
            "ns": len(self.s) - 1,
            "message": self.message,
        }


def action_profile(line: FlowLine, action: TorusAction, H: HamiltonianFamily | None = None):
    """Action of every s-slice of a flow line."""
    return np.array([action_value(action, line.path(j), H) for j in range(len(line.s))])


def _labels(action, path):
    try:
        return match_vortex_label(action, path)
    except ValueError:
        return None


def _energies(action, H, s, v, eta):
    """Energy from the discrete s-derivative and from the gradient, both in g_c."""
    ds = s[1] - s[0]
    nt = v.shape[1] - 1
    e_ds = 0.0
    e_grad = 0.0
    gv, ge = batched_coulomb_gradient(action, 0.5 * (v[1:] + v[:-1]), 0.5 * (eta[1:] + eta[:-1]), H)
    for j in range(len(s) - 1):
        mid = PathState(0.5 * (v[j] + v[j + 1]), np.broadcast_to(0.5 * (eta[j] + eta[j + 1]), (nt + 1, eta.shape[1])))
        du = Tangent((v[j + 1] - v[j]) / ds, (eta[j + 1] - eta[j]) / ds)
        g = Tangent(gv[j], ge[j])
        e_ds += ds * coulomb_metric_pair(action, mid, du, du)
        e_grad += ds * coulomb_metric_pair(action, mid, g, g)
    return e_ds, e_grad


def find_flow_line(action: TorusAction, c_minus: PathState, c_plus: PathState,
                   H: HamiltonianFamily | None = None, seed=0,
                   settings: BVPSettings | None = None) -> FlowLine:
    """Search for a Coulomb-gauge flow line from ``c_minus`` down to ``c_plus``.

    Both ends must be critical paths with constant eta on the same grid.
    The initial guess blends the ends with a logistic profile; ``seed``
    shifts its centre and adds small smooth noise.  Raises
    FlowLineSearchError when neither the strip solve nor the fallback
    forward flow produces a solution.
    """
    settings = settings or BVPSettings()
    if c_minus.v.shape != c_plus.v.shape:
        raise ValueError("critical paths live on different grids")
    if not (c_minus.eta_is_constant(1e-10) and c_plus.eta_is_constant(1e-10)):
        raise ValueError("critical paths must be in Coulomb gauge")
    if np.allclose(c_minus.v, c_plus.v, atol=1e-12) and np.allclose(c_minus.eta, c_plus.eta, atol=1e-12):
        raise ValueError("source and target coincide; a flow line needs positive energy")
    a_minus = action_value(action, c_minus, H)
    a_plus = action_value(action, c_plus, H)
    drop = a_minus - a_plus
    if drop <= 0:
        raise FlowLineSearchError(f"action does not decrease from source to target (drop {drop:.3e})")

    nt, n, k = c_minus.nt, c_minus.n, c_minus.k
    lay = _Layout(nt, n, k)
    S, ns = settings.half_length, settings.ns
    s = np.linspace(-S, S, ns + 1)
    rng = np.random.default_rng(seed)
    center = 0.5 * rng.uniform(-1.0, 1.0) if seed else 0.0
    sig = 1.0 / (1.0 + np.exp(-(s - center) / settings.guess_width))
    v0 = (1 - sig)[:, None, None] * c_minus.v[None] + sig[:, None, None] * c_plus.v[None]
    e0 = (1 - sig)[:, None] * c_minus.eta[0][None] + sig[:, None] * c_plus.eta[0][None]
    x0 = lay.pack(v0, e0)
    if settings.guess_noise:
        t = grid.nodes(nt)
        bump = np.exp(-(s / 3.0) ** 2)[1:-1, None]
        cos = np.cos(np.pi * np.outer(np.arange(3), t))
        sin = np.sin(np.pi * np.outer(np.arange(1, 4), t))
        nre = (rng.normal(size=(3, n)).T @ cos).T
        nim = (rng.normal(size=(3, n)).T @ sin).T
        noise = lay.pack((nre + 1j * nim)[None], np.zeros((1, k)))[0]
        x0[1:-1] += settings.guess_noise * bump * noise
    prob = _StripProblem(action, H, lay, s, x0[0], x0[-1], settings.fd_step)
    X, history, iters = _lm_solve(prob, x0[1:-1], settings.tol, settings.max_iter, settings.stall_iter)
    U = prob.full(X)
    v, eta_c = lay.unpack(U)
    eta = np.repeat(eta_c[:, None, :], nt + 1, axis=1)
    residual = history[-1]
    src = _labels(action, c_minus)
    tgt = _labels(action, c_plus)
    if residual <= settings.tol:
        e_ds, e_grad = _energies(action, H, s, v, eta_c)
        return FlowLine(s, v, eta, e_ds, e_grad, drop, residual, True, "bvp", src, tgt,
                        iters, history)
    message = f"strip solve stalled at residual {residual:.3e}"
    log.info(message)
    if settings.fallback:
        line = _fallback(action, H, c_minus, c_plus, rng, settings, drop, src, tgt)
        if line is not None:
            return line
        message += "; forward flow from a perturbed source did not reach the target"
    raise FlowLineSearchError(message, best_residual=residual)


def _fallback(action, H, c_minus, c_plus, rng, settings, drop, src, tgt):
    """Forward temporal-gauge flow from a perturbation of the source."""
    system = pde.PDESystem("higgs", action)
    start = pde.perturb(c_minus, rng, amplitude=1e-3)
    fs = settings.fallback_settings
    try:
        res = pde.run_flow(start, system, H, None, fs)
    except pde.FlowInstability:
        return None
    if not res.converged:
        return None
    end = res.state.path
    if _labels(action, end) != tgt or tgt is None:
        return None
    traj = [p for _, p in res.samples]
    sgrid = np.array([q for q, _ in res.samples])
    v = np.array([p.v for p in traj])
    eta = np.array([p.eta for p in traj])
    return FlowLine(sgrid, v, eta, res.E, res.E, drop, res.state.residual_log[-1][1], True,
                    "run_flow", src, tgt, res.state.step_index)


# --- gauge equivalence -------------------------------------------------------------


def gauge_equivalent(sol1: FlowLine, sol2: FlowLine, action: TorusAction, tol=1e-6,
                     energy_rtol=1e-3):
    """Is there a t-dependent h in the gauge group with h_* sol1 = sol2 at every s?

    Energies are compared first (gauge invariant).  Otherwise d_t xi is
    fitted as the s-average of eta1 - eta2, its integral gives xi up to the
    constant xi(0), the jump xi(1) - xi(0) must lie in the isotropy lattice,
    and every lift of the boundary element is tried.
    """
    if sol1.v.shape != sol2.v.shape or sol1.eta.shape != sol2.eta.shape:
        return False
    if abs(sol1.energy - sol2.energy) > energy_rtol * max(abs(sol1.energy), abs(sol2.energy), 1e-12):
        return False
    nt = sol1.v.shape[1] - 1
    A = action.A.astype(float)
    dxi = np.mean(sol1.eta - sol2.eta, axis=0)            # (nt+1, k)
    xi_rel = grid.antiderivative(dxi)
    jump = xi_rel[-1]
    B, _, _ = isotropy_lattice(action)
    m_real = np.linalg.solve(B, jump)
    m = np.rint(m_real)
    if np.max(np.abs(m_real - m)) > 1e-6:
        return False
    # snap to the lattice so that h(1) is exactly in the isotropy group
    t = grid.nodes(nt)[:, None]
    xi_rel = xi_rel + t * (B @ m - jump)[None, :]
    eta_fit = sol1.eta - (dxi + (B @ m - jump)[None, :])[None]
    if np.max(np.abs(eta_fit - sol2.eta)) > tol:
        return False
    for b in isotropy_lagrangian(action):
        xi = xi_rel + b.theta[None, :]
        rotated = sol1.v * np.exp(1j * (xi @ A.T))[None]
        if np.max(np.abs(rotated - sol2.v)) <= tol:
            return True
    return False
