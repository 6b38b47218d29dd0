"""Non-crossing pairings of 2n boundary points and the blue-edge partitions they induce.

Indices are 1-based throughout: points are ``1..2n`` and edge ``e_i`` joins
points ``i`` and ``i+1`` (cyclically).  Odd edges are blue, even edges yellow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb


def catalan(n: int) -> int:
    """n-th Catalan number, binomial(2n, n) / (n + 1), in exact integer arithmetic."""
    if n < 0:
        raise ValueError(f"catalan: n must be >= 0, got {n}")
    return comb(2 * n, n) // (n + 1)


@dataclass(frozen=True)
class NonCrossingPairing:
    """Fixed-point-free involution on ``{1..2n}`` whose chords do not cross.

    ``partner[k - 1]`` is the point paired with ``k``.
    """

    partner: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(v) for v in self.partner)
        object.__setattr__(self, "partner", p)
        m = len(p)
        if m == 0 or m % 2:
            raise ValueError("a pairing needs an even, positive number of points")
        for k in range(1, m + 1):
            j = p[k - 1]
            if not 1 <= j <= m:
                raise ValueError(f"partner of {k} out of range: {j}")
            if j == k:
                raise ValueError(f"fixed point at {k}")
            if p[j - 1] != k:
                raise ValueError(f"not an involution at {k}")
        if _crosses(p):
            raise ValueError(f"crossing pairing {self.pairs()}")

    @property
    def n(self) -> int:
        return len(self.partner) // 2

    def __call__(self, k: int) -> int:
        return self.partner[k - 1]

    def pairs(self) -> list[tuple[int, int]]:
        """Pairs ``(a, b)`` with ``a < b``, sorted by ``a``."""
        return [(k, j) for k, j in enumerate(self.partner, start=1) if k < j]

    @classmethod
    def from_pairs(cls, pairs) -> "NonCrossingPairing":
        pairs = [tuple(int(v) for v in pr) for pr in pairs]
        m = 2 * len(pairs)
        partner = [0] * m
        for a, b in pairs:
            if not (1 <= a <= m and 1 <= b <= m):
                raise ValueError(f"pair {(a, b)} out of range for {m} points")
            if partner[a - 1] or partner[b - 1]:
                raise ValueError(f"point repeated in pairs {pairs}")
            partner[a - 1] = b
            partner[b - 1] = a
        return cls(tuple(partner))

    def to_json(self) -> str:
        return json.dumps([list(pr) for pr in self.pairs()])

    @classmethod
    def from_json(cls, text: str) -> "NonCrossingPairing":
        return cls.from_pairs(json.loads(text))


@dataclass(frozen=True)
class NonCrossingPartition:
    """Partition of the blue edges ``e_1, e_3, ..., e_{2n-1}`` into non-crossing blocks.

    Blocks hold edge indices (odd integers) and are stored sorted, so equal
    partitions compare equal.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        object.__setattr__(self, "blocks", blocks)
        seen = [e for b in blocks for e in b]
        if sorted(seen) != list(range(1, 2 * self.n, 2)):
            raise ValueError(f"blocks {blocks} do not partition the blue edges of a {2 * self.n}-gon")
        for b1 in blocks:
            for b2 in blocks:
                if b1 is not b2 and _blocks_cross(b1, b2):
                    raise ValueError(f"blocks {b1} and {b2} cross")

    def block_of(self, edge: int) -> tuple[int, ...]:
        for b in self.blocks:
            if edge in b:
                return b
        raise KeyError(edge)


def _crosses(partner: tuple[int, ...]) -> bool:
    # a < b < c < d with a~c and b~d
    m = len(partner)
    for a in range(1, m + 1):
        c = partner[a - 1]
        if c < a:
            continue
        for b in range(a + 1, c):
            d = partner[b - 1]
            if d > c or d < a:
                return True
    return False


def _blocks_cross(b1, b2) -> bool:
    for a in b1:
        for c in b1:
            if a >= c:
                continue
            inside = [e for e in b2 if a < e < c]
            if inside and len(inside) != len(b2):
                return True
    return False


def is_noncrossing(partner) -> bool:
    """Quantified check: no ``a < b < c < d`` with ``a~c`` and ``b~d``."""
    p = tuple(partner)
    m = len(p)
    for a in range(1, m + 1):
        for b in range(a + 1, m + 1):
            for c in range(b + 1, m + 1):
                for d in range(c + 1, m + 1):
                    if p[a - 1] == c and p[b - 1] == d:
                        return False
    return True


@lru_cache(maxsize=None)
def _partner_tuples(m: int) -> tuple[tuple[int, ...], ...]:
    # non-crossing pairings of the points 1..m, as partner tuples
    if m == 0:
        return ((),)
    out = []
    for j in range(2, m + 1, 2):
        for inner in _partner_tuples(j - 2):
            for outer in _partner_tuples(m - j):
                p = [j] + [v + 1 for v in inner] + [1] + [v + j for v in outer]
                out.append(tuple(p))
    return tuple(sorted(out))


def enumerate_noncrossing_pairings(n: int) -> list[NonCrossingPairing]:
    """All non-crossing pairings of ``2n`` points, lexicographic in ``(iota(1), iota(2), ...)``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [NonCrossingPairing(p) for p in _partner_tuples(2 * n)]


def pairing_to_partition(p: NonCrossingPairing) -> NonCrossingPartition:
    """Blue-edge connectivity realized when exploration paths join the points as in ``p``.

    The chords cut the domain into faces; two blue edges are connected exactly
    when they border the same face.  Following edge ``e_i`` to its endpoint
    ``i+1`` and then along the chord gives the next edge ``e_{iota(i+1)}`` of
    the same face.
    """
    if not isinstance(p, NonCrossingPairing):
        p = NonCrossingPairing(tuple(p))
    m = 2 * p.n
    seen = set()
    blocks = []
    for start in range(1, m + 1, 2):
        if start in seen:
            continue
        face = []
        e = start
        while e not in seen:
            seen.add(e)
            face.append(e)
            e = p((e % m) + 1)
        blocks.append(tuple(face))
    return NonCrossingPartition(p.n, tuple(blocks))


def partition_index(n: int) -> dict[NonCrossingPartition, int]:
    """Map each blue-edge partition to the 0-based index of its pairing in the enumeration."""
    return {pairing_to_partition(p): i for i, p in enumerate(enumerate_noncrossing_pairings(n))}
