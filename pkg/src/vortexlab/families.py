"""Admissible Hamiltonian families H_t and almost complex structures J_t.

Both are vectorized evaluators over a path: ``t`` has shape (N,), ``z`` has
shape (N, n).  Gradients are complex vectors dH/dx + i dH/dy, i.e. the
gradient for the standard metric on C^n = R^2n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .group_action import TorusAction, omega, rotate


def _profile(r):
    """C^2 bump (1 - r^2)^3 on r < 1, zero outside."""
    return np.where(r < 1.0, (1.0 - np.minimum(r, 1.0) ** 2) ** 3, 0.0)


@dataclass(frozen=True)
class HamiltonianFamily:
    value: Callable
    gradient: Callable
    support_radius: float
    invariant: bool
    name: str = "custom"
    params: dict | None = None

    def __call__(self, t, z):
        return self.value(t, z)

    @classmethod
    def zero(cls, n):
        def value(t, z):
            return np.zeros(np.shape(z)[:-1])

        def gradient(t, z):
            return np.zeros(np.shape(z), dtype=complex)

        return cls(value, gradient, 0.0, True, "zero", {})

    @classmethod
    def bump(cls, amplitude, center, radius, modulation=0.0):
        """h(t, z) = a chi(|z - z0| / R) (1 + c cos 2 pi t).

        chi(r) = (1 - r^2)^3 is C^2 with support in r <= 1.  The family is
        torus invariant exactly when z0 = 0.  The cosine keeps the time
        dependence even about t = 0 and t = 1, matching the reflection used
        for t-derivatives.
        """
        z0 = np.atleast_1d(np.asarray(center, dtype=complex))
        R = float(radius)
        a = float(amplitude)
        c = float(modulation)

        def s(t):
            return 1.0 + c * np.cos(2.0 * np.pi * np.asarray(t, dtype=float))

        def value(t, z):
            dz = np.asarray(z) - z0
            r = np.sqrt(np.sum(np.abs(dz) ** 2, axis=-1)) / R
            return a * _profile(r) * s(t)

        def gradient(t, z):
            dz = np.asarray(z) - z0
            r2 = np.sum(np.abs(dz) ** 2, axis=-1) / R ** 2
            # d/dz-bar form of chi(|dz|/R): -6/R^2 (1 - r^2)^2 dz
            fac = np.where(r2 < 1.0, -6.0 / R ** 2 * (1.0 - np.minimum(r2, 1.0)) ** 2, 0.0)
            return (a * fac * s(t))[..., None] * dz

        invariant = bool(np.all(z0 == 0))
        params = {"amplitude": a, "center": [[float(x.real), float(x.imag)] for x in z0],
                  "radius": R, "modulation": c}
        return cls(value, gradient, float(np.linalg.norm(z0)) + R, invariant, "bump", params)

    def hamiltonian_vector_field(self, t, z):
        """X_H with dH = omega(X_H, .), i.e. X_H = -i grad H."""
        return -1j * self.gradient(t, z)

    def measured_noninvariance(self, action: TorusAction, samples=200, rng=None):
        """max |H(t, rho(g) z) - H(t, z)| over random t, g, z in the support."""
        rng = np.random.default_rng(rng)
        R = max(self.support_radius, 1e-12)
        z = (rng.normal(size=(samples, action.n)) + 1j * rng.normal(size=(samples, action.n)))
        z *= R / np.sqrt(action.n) * 0.7
        t = rng.uniform(size=samples)
        theta = rng.uniform(0.0, 2 * np.pi, size=(samples, action.k))
        return float(np.max(np.abs(self.value(t, rotate(action, theta, z)) - self.value(t, z))))


def _J0(n):
    """Multiplication by i on R^2n = (x, y)."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def to_real(u):
    return np.concatenate([np.real(u), np.imag(u)], axis=-1)


def to_complex(x):
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


@dataclass(frozen=True)
class AlmostComplexFamily:
    """omega-compatible J_t; ``matrix(t, z)`` returns (N, 2n, 2n) arrays."""

    n: int
    matrix: Callable | None
    support_radius: float
    name: str = "standard"

    @classmethod
    def standard(cls, n):
        return cls(n, None, 0.0, "standard")

    @classmethod
    def conjugated(cls, n, amplitude, radius, S=None):
        """J = Psi^{-1} J0 Psi with Psi = exp(c chi(|z|/R) J0 S), S symmetric.

        Psi is symplectic, so J is omega-compatible with metric
        g(a, b) = <Psi a, Psi b>; J equals J0 for |z| >= R.
        """
        J0 = _J0(n)
        if S is None:
            S = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
        S = np.asarray(S, dtype=float)
        if not np.allclose(S, S.T):
            raise ValueError("S must be symmetric")
        gen = J0 @ S

        def matrix(t, z):
            r = np.sqrt(np.sum(np.abs(np.atleast_2d(z)) ** 2, axis=-1)) / radius
            c = amplitude * _profile(r) * (1.0 + 0.0 * np.asarray(t, dtype=float))
            out = np.empty((len(c), 2 * n, 2 * n))
            for i, ci in enumerate(c):
                P = expm(ci * gen)
                out[i] = np.linalg.solve(P, J0 @ P)
            return out

        fam = cls(n, matrix, float(radius), "conjugated")
        fam.certify(np.random.default_rng(0))
        return fam

    @property
    def is_standard(self) -> bool:
        return self.matrix is None

    def apply(self, t, z, u):
        """J_t(z) u for complex tangent vectors u of shape (N, n)."""
        if self.is_standard:
            return 1j * u
        M = self.matrix(t, z)
        return to_complex(np.einsum("nij,nj->ni", M, to_real(u)))

    def metric(self, t, z, a, b):
        """g_t(a, b) = omega(a, J b) nodewise."""
        return omega(a, self.apply(t, z, b))

    def certify(self, rng, samples=64):
        """Check J^2 = -1 and positive definite symmetric g on sample points."""
        if self.is_standard:
            return True
        R = max(self.support_radius, 1.0)
        z = R * (rng.uniform(-1, 1, (samples, self.n)) + 1j * rng.uniform(-1, 1, (samples, self.n)))
        t = rng.uniform(size=samples)
        M = self.matrix(t, z)
        J0 = _J0(self.n)
        eye = np.eye(2 * self.n)
        for Mi in M:
            if not np.allclose(Mi @ Mi, -eye, atol=1e-10):
                raise ValueError("J^2 != -1 at a sample point")
            # omega(a, b) = a^T J0^T b in real coordinates, so g = J0^T M
            G = J0.T @ Mi
            if not np.allclose(G, G.T, atol=1e-10) or np.min(np.linalg.eigvalsh(0.5 * (G + G.T))) <= 0:
                raise ValueError("g = omega(., J .) is not a metric at a sample point")
        return True
