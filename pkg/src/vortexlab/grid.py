"""Uniform t-grid on [0, 1]: quadrature and derivatives.

Paths with the Lagrangian boundary condition extend by Schwarz reflection
(v(-t) = conj v(t), and the same about t = 1) to functions of period 2.
Under that extension Re v and the connection component eta are even, Im v
and Dirichlet gauge parameters are odd.  The default t-derivative is the
Fourier derivative of the reflected function; it is exact for trigonometric
data below the grid Nyquist frequency and it is skew-adjoint for the
trapezoidal inner product, which makes the pointwise gradient formulas the
exact gradients of the discretized action.

``scheme="fd2"`` selects second-order central differences (one-sided
second-order at the ends) for convergence studies.
"""

from __future__ import annotations

import numpy as np

EVEN = "even"
ODD = "odd"
CONJ = "conj"


def nodes(nt):
    return np.linspace(0.0, 1.0, nt + 1)


def trapezoid_weights(nt):
    w = np.full(nt + 1, 1.0 / nt)
    w[0] = w[-1] = 0.5 / nt
    return w


def integrate(values, axis=0):
    """Trapezoidal integral over [0, 1] along ``axis``."""
    values = np.asarray(values)
    nt = values.shape[axis] - 1
    w = trapezoid_weights(nt)
    shape = [1] * values.ndim
    shape[axis] = nt + 1
    return np.sum(values * w.reshape(shape), axis=axis)


def reflect(values, parity):
    """Extend nodal values on [0, 1] (axis 0) to one period of length 2."""
    values = np.asarray(values)
    inner = values[-2:0:-1]
    if parity == EVEN:
        tail = inner
    elif parity == ODD:
        tail = -inner
    elif parity == CONJ:
        tail = np.conj(inner)
    else:
        raise ValueError(f"unknown parity {parity!r}")
    return np.concatenate([values, tail], axis=0)


def _wavenumbers(nt):
    m = 2 * nt
    k = np.fft.fftfreq(m, d=1.0 / nt) * 2.0 * np.pi  # period-2 wavenumbers pi * j
    k[nt] = 0.0  # Nyquist mode carries no derivative information
    return k


def derivative(values, parity, scheme="spectral"):
    """d/dt of nodal values along axis 0."""
    values = np.asarray(values)
    nt = values.shape[0] - 1
    if scheme == "fd2":
        return np.gradient(values, 1.0 / nt, axis=0, edge_order=2)
    if scheme != "spectral":
        raise ValueError(f"unknown derivative scheme {scheme!r}")
    ext = reflect(values, parity)
    k = _wavenumbers(nt).reshape((-1,) + (1,) * (values.ndim - 1))
    d = np.fft.ifft(1j * k * np.fft.fft(ext, axis=0), axis=0)[: nt + 1]
    if np.isrealobj(values):
        return d.real
    return d


def antiderivative(values):
    """F(t) = int_0^t f for f even about both ends (f = eta-like data).

    F = (mean f) t + periodic part; the periodic part is the inverse of the
    spectral derivative, so ``derivative(F - mean*t, ODD) == f - mean``.
    """
    values = np.asarray(values, dtype=float)
    nt = values.shape[0] - 1
    mean = integrate(values)
    ext = reflect(values - mean, EVEN)
    k = _wavenumbers(nt)
    inv = np.zeros_like(k)
    nz = k != 0.0
    inv[nz] = 1.0 / k[nz]
    inv = inv.reshape((-1,) + (1,) * (values.ndim - 1))
    F = np.fft.ifft(-1j * inv * np.fft.fft(ext, axis=0), axis=0).real[: nt + 1]
    F = F - F[0]
    t = nodes(nt).reshape((-1,) + (1,) * (values.ndim - 1))
    return mean * t + F
