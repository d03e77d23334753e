"""Finite-dimensional gradient flows and the Bogomol'nyi energy audit.

For a flow line x(s) of f the energy

    E(x) = 1/2 int |d_s x|^2 + |grad f(x)|^2 ds

splits as 1/2 int |d_s x + grad f|^2 ds + f(x(-inf)) - f(x(+inf)), so
downward flow lines minimize E in their homotopy class, and every solution
of d_s x = -grad f also solves d_s^2 x = H_f(x) grad f(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

CONVERGED = "converged"
MAX_S = "max_s"
DIVERGED = "diverged"


class FlowDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class MorseProblem:
    """Objective on R^d, optionally restricted to the unit sphere."""

    dimension: int
    f: Callable
    grad: Callable
    hess: Callable
    sphere: bool = False
    name: str = "custom"
    critical_points: tuple = field(default=(), repr=False)

    def gradient(self, x):
        """Gradient of f on the constraint set (tangential part on the sphere)."""
        g = self.grad(x)
        if self.sphere:
            g = g - np.sum(g * x, axis=-1, keepdims=True) * x
        return g

    def project(self, x):
        if self.sphere:
            return x / np.linalg.norm(x, axis=-1, keepdims=True)
        return x

    @classmethod
    def double_well(cls):
        """f(x) = x^4/4 - x^2/2 on R, critical points -1, 0, 1."""
        return cls(
            1,
            lambda x: np.sum(x ** 4 / 4.0 - x ** 2 / 2.0, axis=-1),
            lambda x: x ** 3 - x,
            lambda x: np.diag(3.0 * np.atleast_1d(x) ** 2 - 1.0),
            name="double_well",
            critical_points=(np.array([-1.0]), np.array([0.0]), np.array([1.0])),
        )

    @classmethod
    def quadratic(cls, eigenvalues, sphere=False):
        """f(x) = sum lambda_i x_i^2, on R^d or on the unit sphere in R^d."""
        lam = np.asarray(eigenvalues, dtype=float)
        crit = []
        if sphere:
            for i in range(len(lam)):
                e = np.zeros(len(lam))
                e[i] = 1.0
                crit += [e, -e]
        else:
            crit = [np.zeros(len(lam))]
        return cls(
            len(lam),
            lambda x: np.sum(lam * x ** 2, axis=-1),
            lambda x: 2.0 * lam * x,
            lambda x: np.diag(2.0 * lam),
            sphere=sphere,
            name="sphere_quadratic" if sphere else "quadratic",
            critical_points=tuple(crit),
        )

    def gradient_fd_error(self, x, h=1e-6):
        """Relative mismatch between ``grad`` and central differences of f."""
        x = np.asarray(x, dtype=float)
        fd = np.array([(self.f(x + h * e) - self.f(x - h * e)) / (2 * h) for e in np.eye(len(x))])
        g = self.grad(x)
        return float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-300))


@dataclass
class Trajectory:
    s: np.ndarray          # (N,)
    x: np.ndarray          # (N, d)
    terminal: str
    ds: float

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if len(self.s) != len(self.x):
            raise ValueError("s and x have different lengths")
        if len(self.s) > 1 and np.any(np.diff(self.s) <= 0):
            raise ValueError("s must be strictly increasing")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("trajectory contains non-finite states")

    @property
    def samples(self):
        return list(zip(self.s, self.x))

    def __len__(self):
        return len(self.s)


def rk4_step(rate, x, ds):
    k1 = rate(x)
    k2 = rate(x + 0.5 * ds * k1)
    k3 = rate(x + 0.5 * ds * k2)
    k4 = rate(x + ds * k3)
    return x + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_flow_line(problem: MorseProblem, x0, direction=1, ds=1e-3, s_max=50.0, tol=1e-10,
                        bound=1e8):
    """RK4 for d_s x = -direction * grad f(x).

    ``direction=+1`` flows downward, ``-1`` upward.  Stops when the gradient
    norm drops to ``tol`` or s reaches ``s_max``; raises FlowDivergence when
    |x| exceeds ``bound``.
    """
    if ds <= 0:
        raise ValueError("ds must be positive")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    x = problem.project(np.atleast_1d(np.asarray(x0, dtype=float)))

    def rate(y):
        return -direction * problem.gradient(y)

    xs = [x]
    n_max = int(np.ceil(s_max / ds - 1e-9))
    terminal = MAX_S
    for i in range(n_max + 1):
        if np.linalg.norm(problem.gradient(x)) <= tol:
            terminal = CONVERGED
            break
        if i == n_max:
            break
        x = problem.project(rk4_step(rate, x, ds))
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > bound:
            raise FlowDivergence(f"flow left the ball of radius {bound:g} at s = {(i + 1) * ds:g}")
        xs.append(x)
    s = ds * np.arange(len(xs))
    return Trajectory(s, np.array(xs), terminal, ds)


def connecting_orbit(problem: MorseProblem, x_mid, ds=1e-3, s_max=60.0, tol=1e-10):
    """Full downward flow line through ``x_mid``, both tails converged.

    The backward half is an upward flow from ``x_mid``; the two halves are
    joined at s = 0 on the uniform grid s = ds * j.
    """
    up = integrate_flow_line(problem, x_mid, -1, ds, s_max, tol)
    down = integrate_flow_line(problem, x_mid, 1, ds, s_max, tol)
    x = np.concatenate([up.x[::-1], down.x[1:]])
    s = ds * (np.arange(len(x)) - (len(up.x) - 1))
    if up.terminal == CONVERGED and down.terminal == CONVERGED:
        terminal = CONVERGED
    else:
        terminal = MAX_S
    return Trajectory(s, x, terminal, ds)


def _nearest_critical(problem, x):
    if not problem.critical_points:
        return x
    pts = np.array(problem.critical_points)
    return pts[np.argmin(np.linalg.norm(pts - x, axis=1))]


def bogomolnyi_audit(traj: Trajectory, problem: MorseProblem, require_converged=True):
    """Energy of a sampled flow line and both sides of the Bogomol'nyi identity.

    d_s x is the second-order finite difference of the samples, so the
    self-dual term measures how well the samples solve the flow equation.
    The ends are replaced by the nearest critical points (the asymptotic
    limits) when evaluating f.
    """
    if require_converged and traj.terminal != CONVERGED:
        raise ValueError(f"trajectory is not converged (terminal = {traj.terminal})")
    if len(traj) < 3:
        z = 0.0
        return {"E": z, "delta_f": z, "selfdual_down": z, "selfdual_up": z,
                "lhs_rhs": (z, z), "residual": z, "sign": "down"}
    ds = traj.ds
    x = traj.x
    xs = np.gradient(x, ds, axis=0, edge_order=2)
    g = problem.gradient(x)
    E = 0.5 * np.trapezoid(np.sum(xs ** 2, axis=1) + np.sum(g ** 2, axis=1), dx=ds)
    sd_down = 0.5 * np.trapezoid(np.sum((xs + g) ** 2, axis=1), dx=ds)
    sd_up = 0.5 * np.trapezoid(np.sum((xs - g) ** 2, axis=1), dx=ds)
    c_minus = _nearest_critical(problem, x[0])
    c_plus = _nearest_critical(problem, x[-1])
    delta_f = float(problem.f(c_minus) - problem.f(c_plus))
    if sd_down <= sd_up:
        sign, rhs = "down", sd_down + delta_f
    else:
        sign, rhs = "up", sd_up - delta_f
    return {
        "E": float(E),
        "delta_f": delta_f,
        "selfdual_down": float(sd_down),
        "selfdual_up": float(sd_up),
        "lhs_rhs": (float(E), float(rhs)),
        "residual": float(abs(E - rhs)),
        "sign": sign,
    }


def euler_lagrange_residual(traj: Trajectory, problem: MorseProblem):
    """sup |d_s^2 x - H_f(x) grad f(x)| with 3-point second differences."""
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    x = traj.x
    d2 = (x[2:] - 2 * x[1:-1] + x[:-2]) / traj.ds ** 2
    inner = x[1:-1]
    rhs = np.array([problem.hess(y) @ problem.grad(y) for y in inner])
    return float(np.max(np.abs(d2 - rhs)))
