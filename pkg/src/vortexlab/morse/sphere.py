"""Morse theory of f(x) = sum lambda_i x_i^2 on the unit sphere in R^3.

The critical points are +-e_1 (minima), +-e_2 (index 1) and +-e_3
(maxima).  f is even, so it descends to RP^2 = S^2 / {+-1}, where it has
one critical point of each index.  Flow lines between critical points of
adjacent index are counted by shooting from the unstable sphere of the
source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..flow.finite import MorseProblem
from .complex import ChainComplexGF2, FreeGroupActionOnGenerators, quotient_complex

SEED_RADIUS = 1e-3
BIN_DISTANCE = 0.1
GRAD_TOL = 1e-8


class CountingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SphereMorseDemo:
    eigenvalues: tuple

    def __post_init__(self):
        lam = tuple(float(x) for x in self.eigenvalues)
        if len(lam) != 3:
            raise ValueError("need three eigenvalues")
        if not (lam[0] < lam[1] < lam[2]):
            raise ValueError(f"eigenvalues must be strictly increasing, got {lam}")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def problem(self) -> MorseProblem:
        return MorseProblem.quadratic(self.eigenvalues, sphere=True)

    @property
    def labels(self):
        return ["+e1", "-e1", "+e2", "-e2", "+e3", "-e3"]

    def point(self, label):
        sign = 1.0 if label[0] == "+" else -1.0
        x = np.zeros(3)
        x[int(label[2]) - 1] = sign
        return x

    def index(self, label):
        return int(label[2]) - 1

    def antipode(self, label):
        return ("-" if label[0] == "+" else "+") + label[1:]

    def gradient(self, x):
        lam = np.asarray(self.eigenvalues)
        g = 2.0 * lam * x
        return g - np.sum(g * x, axis=-1, keepdims=True) * x


def _flow_scales(demo):
    """Step and horizon from the spectrum; invariant under lambda -> c lambda."""
    l1, l2, l3 = demo.eigenvalues
    gap = 2.0 * min(l2 - l1, l3 - l2)
    ds = 0.05 / (l3 - l1)
    s_max = 1.5 * (np.log(1.0 / SEED_RADIUS) + np.log(10.0 / GRAD_TOL)) / gap
    return ds, s_max


def _integrate(demo: SphereMorseDemo, x):
    """Downward flow of many points; returns end points, gradient norms and
    the closest approach to each critical point (columns in label order)."""
    ds, s_max = _flow_scales(demo)
    crit = np.array([demo.point(lab) for lab in demo.labels])
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    closest = np.full((len(x), len(crit)), np.inf)

    def rate(y):
        return -demo.gradient(y)

    for _ in range(int(round(s_max / ds))):
        k1 = rate(x)
        k2 = rate(x + 0.5 * ds * k1)
        k3 = rate(x + 0.5 * ds * k2)
        k4 = rate(x + ds * k3)
        x = x + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        d = np.linalg.norm(x[:, None, :] - crit[None], axis=2)
        np.minimum(closest, d, out=closest)
        if np.all(np.linalg.norm(demo.gradient(x), axis=1) < GRAD_TOL):
            break
    return x, np.linalg.norm(demo.gradient(x), axis=1), closest


def _limit_labels(demo, x, gnorm):
    crit = np.array([demo.point(lab) for lab in demo.labels])
    out = []
    for xi, gi in zip(x, gnorm):
        d = np.linalg.norm(crit - xi, axis=1)
        j = int(np.argmin(d))
        out.append(demo.labels[j] if (d[j] < BIN_DISTANCE and gi < GRAD_TOL) else None)
    return out


def _unstable_seeds(demo, label, angles):
    """Points at distance SEED_RADIUS from ``label`` along its unstable directions."""
    i = demo.index(label)
    c = demo.point(label)
    below = [np.eye(3)[j] for j in range(i)]  # directions of smaller eigenvalue are unstable
    r = SEED_RADIUS
    if i == 1:
        dirs = np.array([below[0], -below[0]])
    else:
        dirs = np.cos(angles)[:, None] * below[0] + np.sin(angles)[:, None] * below[1]
    return np.sqrt(1 - r * r) * c + r * dirs


def shoot(demo: SphereMorseDemo, source, resolution=256, refine=10):
    """Flow lines leaving ``source`` and the index-(i-1) points they hit.

    Returns a list of target labels, one per isolated flow line.  For a
    maximum the isolated lines are the separatrices between basins of the
    two minima; each is bracketed by neighbouring seed angles, refined by
    bisection, and attributed to the saddle it passes closest to.
    """
    i = demo.index(source)
    if i == 0:
        return []
    if i == 1:
        x, g, _ = _integrate(demo, _unstable_seeds(demo, source, None))
        labels = _limit_labels(demo, x, g)
        if any(lab is None for lab in labels):
            raise CountingError(f"unresolved limit from {source}; increase s_max")
        return labels
    # half-step offset keeps the seeds off the symmetry axes
    angles = 2 * np.pi * (np.arange(resolution) + 0.5) / resolution
    x, g, _ = _integrate(demo, _unstable_seeds(demo, source, angles))
    labels = _limit_labels(demo, x, g)
    if any(lab is None for lab in labels):
        raise CountingError(f"unresolved limit from {source}; increase the shooting resolution")
    lo = []
    hi = []
    for j in range(resolution):
        if labels[j] != labels[(j + 1) % resolution]:
            lo.append(angles[j])
            hi.append(angles[j] + 2 * np.pi / resolution)
    if not lo:
        return []
    lo = np.array(lo)
    hi = np.array(hi)
    lab_lo = [labels[j] for j in range(resolution) if labels[j] != labels[(j + 1) % resolution]]
    for _ in range(refine):
        mid = 0.5 * (lo + hi)
        xm, gm, _ = _integrate(demo, _unstable_seeds(demo, source, mid))
        lm = _limit_labels(demo, xm, gm)
        same = np.array([a == b for a, b in zip(lm, lab_lo)])
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    _, _, close_lo = _integrate(demo, _unstable_seeds(demo, source, lo))
    _, _, close_hi = _integrate(demo, _unstable_seeds(demo, source, hi))
    saddles = [j for j, lab in enumerate(demo.labels) if demo.index(lab) == i - 1]
    out = []
    for a, b in zip(close_lo, close_hi):
        ja = saddles[int(np.argmin(a[saddles]))]
        jb = saddles[int(np.argmin(b[saddles]))]
        if ja != jb:
            raise CountingError("separatrix brackets pass different saddles; refine the shooting")
        out.append(demo.labels[ja])
    return out


def count_flow_lines(demo: SphereMorseDemo, from_label, to_label, resolution=256):
    """Number of flow lines from ``from_label`` to ``to_label`` and its parity."""
    if demo.index(from_label) != demo.index(to_label) + 1:
        raise ValueError("flow lines are counted between critical points of adjacent index")
    hits = shoot(demo, from_label, resolution)
    n = sum(1 for lab in hits if lab == to_label)
    return {"count": n, "mod2": n % 2}


def build_sphere_demo(l1, l2, l3, resolution=256):
    """Demo, the Morse complex on S^2, and its quotient by the antipodal map."""
    demo = SphereMorseDemo((l1, l2, l3))
    gens = [["+e1", "-e1"], ["+e2", "-e2"], ["+e3", "-e3"]]
    counts = {}
    bd = [None]
    for i in (1, 2):
        M = np.zeros((2, 2), dtype=np.int64)
        for c, src in enumerate(gens[i]):
            hits = shoot(demo, src, resolution)
            for r, tgt in enumerate(gens[i - 1]):
                n = sum(1 for lab in hits if lab == tgt)
                counts[(src, tgt)] = n
                M[r, c] = n % 2
        bd.append(M)
    cover = ChainComplexGF2(gens, bd)
    swap = ((1, 0), (1, 0), (1, 0))
    act = FreeGroupActionOnGenerators(2, (((0, 1), (0, 1), (0, 1)), swap))
    quotient = quotient_complex(cover, act)
    return demo, cover, quotient, counts
