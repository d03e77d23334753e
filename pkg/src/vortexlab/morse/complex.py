"""Graded chain complexes over GF(2), free group actions, and quotients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2


class ComplexError(ValueError):
    pass


@dataclass(frozen=True)
class ChainComplexGF2:
    """generators[i] lists labels in degree i; boundary[i] maps degree i to i-1.

    boundary[i] has shape (len(generators[i-1]), len(generators[i])); the
    entry for i = 0 is an empty (0, n0) matrix.
    """

    generators: tuple
    boundary: tuple
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        gens = tuple(tuple(g) for g in self.generators)
        bd = []
        for i, g in enumerate(gens):
            rows = len(gens[i - 1]) if i > 0 else 0
            if i < len(self.boundary) and self.boundary[i] is not None:
                M = gf2.as_gf2(np.asarray(self.boundary[i]).reshape(rows, len(g)))
            else:
                M = np.zeros((rows, len(g)), dtype=np.uint8)
            bd.append(M)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "boundary", tuple(bd))
        if self.check and not self.is_complex():
            raise ComplexError("boundary does not square to zero")

    @classmethod
    def from_counts(cls, counts, boundary=None):
        gens = [[f"g{i}_{j}" for j in range(c)] for i, c in enumerate(counts)]
        return cls(gens, boundary or [None] * len(counts))

    @property
    def top(self):
        return len(self.generators) - 1

    def chain_ranks(self):
        return [len(g) for g in self.generators]

    def total_chain_rank(self):
        return sum(self.chain_ranks())

    def is_complex(self) -> bool:
        for i in range(2, len(self.boundary)):
            if np.any(gf2.matmul(self.boundary[i - 1], self.boundary[i])):
                return False
        return True

    def homology_ranks(self):
        return homology_ranks(self)

    def index_of(self, label):
        for i, g in enumerate(self.generators):
            if label in g:
                return i, g.index(label)
        raise KeyError(label)

    def to_dict(self):
        """{gradings, generators, boundary as sparse (column, row) index pairs}."""
        return {
            "gradings": list(range(len(self.generators))),
            "generators": [list(g) for g in self.generators],
            "boundary": {
                str(i): [[int(c), int(r)] for r, c in zip(*np.nonzero(M))]
                for i, M in enumerate(self.boundary) if i > 0
            },
        }


def homology_ranks(cx: ChainComplexGF2):
    """dim ker d_i - rank d_{i+1} for every degree."""
    if not cx.is_complex():
        raise ComplexError("boundary does not square to zero")
    ranks = [gf2.rank(M) for M in cx.boundary] + [0]
    out = []
    for i, g in enumerate(cx.generators):
        kernel = len(g) - ranks[i]
        out.append(kernel - ranks[i + 1])
    return out


@dataclass(frozen=True)
class FreeGroupActionOnGenerators:
    """Group of order ``order`` acting by permutations of each degree.

    ``permutations[g][i]`` is the permutation of degree-i generators by the
    group element g (element 0 is the identity).
    """

    order: int
    permutations: tuple

    def __post_init__(self):
        perms = tuple(tuple(tuple(int(x) for x in p) for p in per_deg) for per_deg in self.permutations)
        object.__setattr__(self, "permutations", perms)
        if len(perms) != self.order:
            raise ComplexError("need one permutation list per group element")
        for i, p in enumerate(perms[0]):
            if tuple(p) != tuple(range(len(p))):
                raise ComplexError("element 0 must act as the identity")

    @classmethod
    def trivial(cls, cx: ChainComplexGF2):
        return cls(1, (tuple(tuple(range(len(g))) for g in cx.generators),))

    def is_free(self) -> bool:
        for g in range(1, self.order):
            for p in self.permutations[g]:
                if any(p[j] == j for j in range(len(p))):
                    return False
        return True

    def orbits(self, degree):
        n = len(self.permutations[0][degree])
        seen = set()
        out = []
        for j in range(n):
            if j in seen:
                continue
            orb = sorted({self.permutations[g][degree][j] for g in range(self.order)})
            seen.update(orb)
            out.append(orb)
        return out


def quotient_complex(cx: ChainComplexGF2, act: FreeGroupActionOnGenerators) -> ChainComplexGF2:
    """Orbit complex: coefficient = parity of boundary counts from one
    representative of the source orbit into all of the target orbit."""
    if not act.is_free():
        raise ComplexError("group action is not free")
    for g in range(act.order):
        for i, p in enumerate(act.permutations[g]):
            if sorted(p) != list(range(len(cx.generators[i]))):
                raise ComplexError("permutation does not preserve the grading")
    orbits = [act.orbits(i) for i in range(len(cx.generators))]
    gens = [["{" + ",".join(str(cx.generators[i][j]) for j in orb) + "}" for orb in orbits[i]]
            for i in range(len(cx.generators))]
    bd = [None]
    for i in range(1, len(cx.generators)):
        M = cx.boundary[i].astype(np.int64)
        Q = np.zeros((len(orbits[i - 1]), len(orbits[i])), dtype=np.int64)
        for c, src in enumerate(orbits[i]):
            rep = src[0]
            for r, tgt in enumerate(orbits[i - 1]):
                Q[r, c] = M[tgt, rep].sum() % 2
        bd.append(Q)
    return ChainComplexGF2(gens, bd)


def principle_check(total_rank_cover, total_rank_quotient, gamma_order) -> bool:
    """True when the cover rank differs from |Gamma| times the quotient rank."""
    for x in (total_rank_cover, total_rank_quotient, gamma_order):
        if x < 0:
            raise ValueError("ranks and group order must be nonnegative")
    return total_rank_cover != gamma_order * total_rank_quotient
