"""Torus actions on C^n: rotations, moment map, infinitesimal action.

The Lie algebra of T^k is i R^k; every Lie-algebra valued quantity (moment
map values, connection components, infinitesimal gauge parameters) is
stored as its real coefficient vector in R^k.  Conventions:

* ``omega(a, b) = sum_j Im(conj(a_j) b_j)`` (the form sum dx ^ dy),
* ``lambda = sum_j y_j dx_j`` with ``d lambda = -omega``,
* ``d<mu, xi> = omega(X_xi, .)`` with ``X_xi(z)_j = i (A xi)_j z_j``.

All functions broadcast over leading axes, so ``z`` may be a single point
of shape (n,) or a path of shape (nt+1, n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls

from .lattice import integer_inverse, smith_normal_form

TWO_PI = 2.0 * np.pi


class DimensionError(ValueError):
    pass


class RankDeficientError(ValueError):
    """The weight matrix has rank < k, so isotropy groups may be infinite."""


@dataclass(frozen=True)
class TorusAction:
    """T^k acting on C^n by ``rho(e^{i theta}) z = e^{i A theta} z``."""

    A: np.ndarray
    tau: np.ndarray
    full_rank: bool = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        if not np.all(np.equal(np.mod(A, 1), 0)):
            raise ValueError("weight matrix A must have integer entries")
        A = A.astype(np.int64)
        n, k = A.shape
        if k > n:
            raise ValueError(f"need k <= n, got n={n}, k={k}")
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if tau.shape != (k,):
            raise DimensionError(f"tau must have length k={k}, got shape {tau.shape}")
        A.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "full_rank", bool(np.linalg.matrix_rank(A) == k))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    @classmethod
    def circle(cls, tau=-0.5):
        """Standard S^1 action on C; ``tau=-1/2`` gives mu(z) = (1 - |z|^2)/2."""
        return cls(np.array([[1]]), np.array([tau], dtype=float))

    def with_tau(self, tau):
        return TorusAction(self.A, np.asarray(tau, dtype=float))

    def is_circle(self) -> bool:
        return self.n == 1 and self.k == 1 and abs(int(self.A[0, 0])) == 1

    def to_dict(self):
        return {"A": self.A.tolist(), "tau": [float(x) for x in self.tau]}


@dataclass(frozen=True)
class GroupElement:
    """The element e^{i theta} of T^k, theta taken modulo 2 pi."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.mod(np.atleast_1d(np.asarray(self.theta, dtype=float)), TWO_PI)
        # values within rounding of 2 pi wrap to 0
        theta[np.isclose(theta, TWO_PI, rtol=0.0, atol=1e-12)] = 0.0
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def identity(cls, k):
        return cls(np.zeros(k))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.theta + other.theta)

    def inverse(self) -> "GroupElement":
        return GroupElement(-self.theta)

    def is_identity(self, atol=1e-12) -> bool:
        d = np.minimum(self.theta, TWO_PI - self.theta)
        return bool(np.all(d <= atol))

    def close_to(self, other: "GroupElement", atol=1e-9) -> bool:
        d = np.abs(self.theta - other.theta)
        return bool(np.all(np.minimum(d, TWO_PI - d) <= atol))


def _check_z(action, z):
    z = np.asarray(z)
    if z.shape[-1] != action.n:
        raise DimensionError(f"expected trailing dimension n={action.n}, got {z.shape}")
    return z


def _check_alg(action, xi):
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != action.k:
        raise DimensionError(f"expected trailing dimension k={action.k}, got {xi.shape}")
    return xi


def rotate(action: TorusAction, g, z):
    """rho(g) z.  ``g`` is a GroupElement or a raw theta array (broadcast)."""
    theta = g.theta if isinstance(g, GroupElement) else g
    theta = _check_alg(action, theta)
    z = _check_z(action, z)
    return z * np.exp(1j * (theta @ action.A.T))


def infinitesimal_action(action: TorusAction, xi, z):
    """X_xi(z) = i (A xi) z, the generator of ``rotate`` along xi."""
    xi = _check_alg(action, xi)
    z = _check_z(action, z)
    return 1j * (xi @ action.A.T) * z


def moment_map(action: TorusAction, z, shifted=True):
    """Real coefficient of i in mu(z) = -i A^T w - tau, w_j = |z_j|^2 / 2.

    With ``shifted=False`` the tau term is dropped.
    """
    z = _check_z(action, z)
    w = 0.5 * (np.real(z) ** 2 + np.imag(z) ** 2)
    mu = -(w @ action.A)
    if shifted:
        mu = mu - action.tau
    return mu


def L_operator(action: TorusAction, z, eta):
    """L_z eta = X_eta(z)."""
    return infinitesimal_action(action, eta, z)


def L_adjoint(action: TorusAction, z, vhat):
    """Adjoint of L_z for Re<.,.> on C^n and the dot product on R^k.

    <i (A eta) z, vhat> = sum_j (A eta)_j Im(conj(z_j) vhat_j), hence
    L_z^* vhat = A^T Im(conj(z) vhat).
    """
    z = _check_z(action, z)
    vhat = _check_z(action, vhat)
    return np.imag(np.conj(z) * vhat) @ action.A


def omega(a, b):
    """Standard symplectic form sum_j dx_j ^ dy_j, summed over the last axis."""
    return np.sum(np.imag(np.conj(a) * b), axis=-1)


def real_inner(a, b):
    return np.sum(np.real(np.conj(a) * b), axis=-1)


def isotropy_lattice(action: TorusAction):
    """Basis (columns) of the lattice {theta : A theta in pi Z^n}.

    Writing ``U A V = D`` (Smith form), A theta / pi is integral iff
    ``d_i (V^{-1} theta / pi)_i`` is integral, so the columns of
    ``pi V diag(1/d)`` span the lattice.
    """
    if not action.full_rank:
        raise RankDeficientError("A has rank < k; isotropy group of R^n is not finite")
    _, D, V = smith_normal_form(action.A)
    d = np.array([D[i, i] for i in range(action.k)], dtype=float)
    return np.pi * V / d[None, :], V, d.astype(np.int64)


def isotropy_lagrangian(action: TorusAction):
    """All g in T^k with rho(g) R^n = R^n, i.e. A theta in pi Z^n mod 2 pi."""
    _, V, d = isotropy_lattice(action)
    grids = [np.arange(2 * di) / di for di in d]
    mesh = np.meshgrid(*grids, indexing="ij")
    psi = np.stack([m.ravel() for m in mesh], axis=1)
    phi = psi @ V.T.astype(float)
    elements = [GroupElement(np.pi * p) for p in phi]
    # mod-2 reduction through V can still produce duplicates up to rounding
    unique = []
    for g in elements:
        if not any(g.close_to(u) for u in unique):
            unique.append(g)
    unique.sort(key=lambda g: tuple(np.round(g.theta, 12)))
    return unique


def in_isotropy(action: TorusAction, theta, atol=1e-9) -> bool:
    """Whether e^{i theta} preserves R^n (A theta in pi Z^n)."""
    x = (np.asarray(theta, dtype=float) @ action.A.T) / np.pi
    return bool(np.all(np.abs(x - np.rint(x)) <= atol))


def hamiltonian_property_residual(action: TorusAction, z, xi, h, step=1e-4):
    """|D_h <mu(z), xi> - omega(X_xi(z), h)| with a central difference."""
    z = np.asarray(z, dtype=complex)
    h = np.asarray(h, dtype=complex)
    xi = _check_alg(action, xi)
    f_plus = moment_map(action, z + step * h) @ xi
    f_minus = moment_map(action, z - step * h) @ xi
    fd = (f_plus - f_minus) / (2.0 * step)
    exact = omega(infinitesimal_action(action, xi, z), h)
    return float(abs(fd - exact))


def stabilizer_order(action: TorusAction, z, atol=1e-12):
    """Order of the stabilizer of z in T^k (``np.inf`` if positive-dimensional).

    The stabilizer is {theta : (A theta)_j in 2 pi Z for every j with
    z_j != 0}; its size is the product of the Smith invariants of the
    support rows when those rows have full rank.
    """
    support = np.abs(np.asarray(z)) > atol
    rows = action.A[support]
    if rows.shape[0] == 0 or np.linalg.matrix_rank(rows) < action.k:
        return np.inf
    _, D, _ = smith_normal_form(rows)
    return int(np.prod([D[i, i] for i in range(action.k)]))


@dataclass
class HypothesisReport:
    nonempty: bool
    zero_point: np.ndarray | None
    zero_residual: float
    free_on_samples: bool
    samples_checked: int
    max_stabilizer: float
    properness_sup_norm: float
    properness_bounded: bool
    properness_note: str = "heuristic: sup |z| over sampled preimages of a ball, not a proof"

    def to_dict(self):
        return {
            "nonempty": self.nonempty,
            "zero_point": None if self.zero_point is None else
                [[float(c.real), float(c.imag)] for c in self.zero_point],
            "zero_residual": self.zero_residual,
            "free_on_samples": self.free_on_samples,
            "samples_checked": self.samples_checked,
            "max_stabilizer": None if np.isinf(self.max_stabilizer) else int(self.max_stabilizer),
            "properness_sup_norm": self.properness_sup_norm,
            "properness_bounded": self.properness_bounded,
            "properness_note": self.properness_note,
        }


def check_hypothesis_H(action: TorusAction, sample_count=32, radius=1.0, rng=None):
    """Numerical report on properness, nonemptiness and freeness of mu^{-1}(0).

    mu(z) = 0 reads A^T w = -tau with w >= 0, a polytope in w-space; its
    points lift to real points z_j = sqrt(2 w_j).  Freeness is checked at
    polytope vertices (fewest nonzero coordinates, the worst case) and at
    random convex combinations of them.
    """
    rng = np.random.default_rng(rng)
    A = action.A.astype(float)
    target = -action.tau
    w, res = nnls(A.T, target)
    nonempty = bool(res <= 1e-9 * max(1.0, np.linalg.norm(target)))
    zero_point = np.sqrt(2.0 * w).astype(complex) if nonempty else None

    free = False
    max_stab = np.inf
    checked = 0
    if nonempty:
        vertices = []
        for _ in range(max(sample_count, 1)):
            c = rng.normal(size=action.n)
            lp = linprog(c, A_eq=A.T, b_eq=target, bounds=[(0, None)] * action.n,
                         method="highs")
            if lp.status == 0:
                vertices.append(lp.x)
            # status 3 (unbounded objective) just means the polytope is not compact
        points = [w] + vertices
        for _ in range(sample_count):
            if len(vertices) >= 2:
                lam = rng.dirichlet(np.ones(len(vertices)))
                points.append(np.sum(lam[:, None] * np.array(vertices), axis=0))
        orders = []
        for wp in points:
            z = np.sqrt(2.0 * np.clip(wp, 0.0, None))
            # tiny LP round-off must not count as a nonzero coordinate
            z[z < 1e-7] = 0.0
            orders.append(stabilizer_order(action, z))
            checked += 1
        max_stab = max(orders)
        free = bool(max_stab == 1)

    # properness heuristic: along random rays z = r u, |mu| <= radius bounds r
    sup_norm = 0.0
    bounded = True
    for _ in range(max(sample_count, 1) * 8):
        u = rng.normal(size=action.n) + 1j * rng.normal(size=action.n)
        u /= np.linalg.norm(u)
        a = (0.5 * np.abs(u) ** 2) @ A  # mu(r u) = -r^2 a - tau
        if np.linalg.norm(a) < 1e-14:
            bounded = False
            continue
        # |r^2 a + tau| <= radius is an interval in r^2; take its upper end
        aa = a @ a
        ab = a @ action.tau
        bb = action.tau @ action.tau - radius ** 2
        disc = ab * ab - aa * bb
        if disc < 0:
            continue
        r2 = (-ab + np.sqrt(disc)) / aa
        if r2 > 0:
            sup_norm = max(sup_norm, float(np.sqrt(r2)))
    return HypothesisReport(
        nonempty=nonempty,
        zero_point=zero_point,
        zero_residual=float(res),
        free_on_samples=free,
        samples_checked=checked,
        max_stabilizer=float(max_stab),
        properness_sup_norm=sup_norm,
        properness_bounded=bounded,
    )
