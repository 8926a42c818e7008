"""Exact arithmetic primitives.

Two things live here:

* :class:`Scaled` -- a rational number carrying a fixed ``1/sqrt(norm2)``
  scale factor.  Energies, chemical potentials and certificate constants of
  one tile system all share the same ``norm2`` (the squared 2-norm of the
  integer weight vector), so every comparison and sum stays inside
  ``fractions.Fraction``; no floating point enters a certificate.

* 2x2 integer lattice algebra: Hermite normal form, membership, coset
  reduction, intersection, unimodular images and shortest vectors.  A full
  rank sublattice of Z^2 is represented by its unique HNF basis
  ``((a, 0), (b, c))`` with ``a > 0``, ``c > 0``, ``0 <= b < a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Vec = tuple[int, int]
Basis = tuple[Vec, Vec]


# ---------------------------------------------------------------------------
# scaled rationals
# ---------------------------------------------------------------------------

class InfiniteEnergy:
    """Distinguished +infinity for hard-core overlaps (not a float)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __gt__(self, other):
        return other is not self

    def __lt__(self, other):
        return False

    def __ge__(self, other):
        return True

    def __le__(self, other):
        return other is self


INFINITY = InfiniteEnergy()


@dataclass(frozen=True)
class Scaled:
    """Exact quantity ``value / sqrt(norm2)``.

    Arithmetic is only defined between quantities with equal ``norm2``;
    mixing scales is a programming error, not a numeric one, so it raises.
    """

    value: Fraction
    norm2: int = 1

    def __post_init__(self):
        if self.norm2 <= 0:
            raise ValueError("norm2 must be a positive integer")
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Scaled") -> None:
        if self.norm2 != other.norm2:
            raise ValueError(f"scale mismatch: sqrt({self.norm2}) vs sqrt({other.norm2})")

    def __add__(self, other: "Scaled") -> "Scaled":
        self._check(other)
        return Scaled(self.value + other.value, self.norm2)

    def __sub__(self, other: "Scaled") -> "Scaled":
        self._check(other)
        return Scaled(self.value - other.value, self.norm2)

    def __neg__(self) -> "Scaled":
        return Scaled(-self.value, self.norm2)

    def __mul__(self, k) -> "Scaled":
        if isinstance(k, Scaled):
            raise TypeError("product of two Scaled values leaves the representation")
        return Scaled(self.value * Fraction(k), self.norm2)

    __rmul__ = __mul__

    # -- comparisons (cross-scale comparisons are exact) ---------------------

    def _cmp(self, other: "Scaled") -> int:
        if self.norm2 == other.norm2:
            a, b = self.value, other.value
            return (a > b) - (a < b)
        # a/sqrt(m) ? b/sqrt(n)  <=>  sign-aware a^2 n ? b^2 m
        a, b = self.value, other.value
        sa, sb = (a > 0) - (a < 0), (b > 0) - (b < 0)
        if sa != sb:
            return sa - sb
        lhs, rhs = a * a * other.norm2, b * b * self.norm2
        s = (lhs > rhs) - (lhs < rhs)
        return s if sa >= 0 else -s

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __float__(self) -> float:
        return float(self.value) / math.sqrt(self.norm2)

    def __str__(self) -> str:
        root = math.isqrt(self.norm2)
        if root * root == self.norm2:
            return str(self.value / root)
        return f"{self.value}/sqrt({self.norm2})"


# ---------------------------------------------------------------------------
# 2x2 integer lattices
# ---------------------------------------------------------------------------

def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended gcd: returns (g, s, t) with s*a + t*b = g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def hnf2(vectors: Iterable[Vec]) -> Basis:
    """Hermite normal form basis of the lattice generated by ``vectors``.

    Returns ``((a, 0), (b, c))`` with ``a > 0, c > 0, 0 <= b < a``.
    Raises ``ValueError`` if the span is not full rank.
    """
    vecs = [v for v in vectors if v != (0, 0)]
    # combine to a single generator with y = gcd of all y components
    bx, by = 0, 0
    for vx, vy in vecs:
        g, s, t = xgcd(by, vy)
        bx, by = s * bx + t * vx, g
    xs = []
    for vx, vy in vecs:
        if by:
            k = vy // by
            xs.append(vx - k * bx)
        else:
            xs.append(vx)
    a = 0
    for x in xs:
        a = math.gcd(a, x)
    if a == 0 or by == 0:
        raise ValueError("vectors do not span a full-rank lattice")
    b = bx % a
    return ((a, 0), (b, by))


def lattice_det(basis: Basis) -> int:
    (a, _), (_, c) = basis
    return a * c


def lattice_contains(basis: Basis, v: Vec) -> bool:
    (a, _), (b, c) = basis
    x, y = v
    if y % c:
        return False
    return (x - (y // c) * b) % a == 0


def lattice_reduce(basis: Basis, v: Vec) -> Vec:
    """Canonical coset representative of ``v`` modulo the lattice."""
    (a, _), (b, c) = basis
    x, y = v
    k = y // c  # floor division keeps 0 <= y - k*c < c
    y -= k * c
    x -= k * b
    return (x % a, y)


def lattice_cosets(basis: Basis) -> list[Vec]:
    """All canonical coset representatives (the integer fundamental domain)."""
    (a, _), (b, c) = basis
    return [(i, j) for j in range(c) for i in range(a)]


def lattice_vectors(basis: Basis) -> Iterator[Vec]:
    yield basis[0]
    yield basis[1]


def lattice_intersect(b1: Basis, b2: Basis) -> Basis:
    """Intersection of two full-rank sublattices of Z^2 (HNF basis)."""
    (a1, _), (b1x, c1) = b1
    u1, v1 = (a1, 0), (b1x, c1)
    det2 = lattice_det(b2)
    # x in L2  <=>  adj(B2) @ x == 0 (mod det2); B2 columns are the basis vectors
    (p, _), (q, r) = b2
    # column matrix [[p, q], [0, r]]; adjugate [[r, -q], [0, p]]
    sols: list[Vec] = [(det2, 0), (0, det2)]
    for s in range(det2):
        for t in range(det2):
            x = s * u1[0] + t * v1[0]
            y = s * u1[1] + t * v1[1]
            if (r * x - q * y) % det2 == 0 and (p * y) % det2 == 0:
                if (s, t) != (0, 0):
                    sols.append((s, t))
    coeff = hnf2(sols)
    out = []
    for s, t in lattice_vectors(coeff):
        out.append((s * u1[0] + t * v1[0], s * u1[1] + t * v1[1]))
    return hnf2(out)


def lattice_transform(basis: Basis, mat: tuple[int, int, int, int]) -> Basis:
    """Image of the lattice under the integer matrix ((m00, m01), (m10, m11))."""
    m00, m01, m10, m11 = mat
    vecs = []
    for x, y in lattice_vectors(basis):
        vecs.append((m00 * x + m01 * y, m10 * x + m11 * y))
    return hnf2(vecs)


def sublattices_of_index(n: int) -> Iterator[Basis]:
    """All sublattices of Z^2 with index ``n`` (unique HNF bases)."""
    for c in range(1, n + 1):
        if n % c:
            continue
        a = n // c
        for b in range(a):
            yield ((a, 0), (b, c))


def _norm2(v: Vec) -> int:
    return v[0] * v[0] + v[1] * v[1]


def shortest_vector2(basis: Basis) -> int:
    """Squared length of a shortest nonzero lattice vector (Lagrange-Gauss)."""
    u, v = basis
    while True:
        if _norm2(u) < _norm2(v):
            u, v = v, u
        n = _norm2(v)
        # nearest integer to (u.v)/|v|^2, exactly
        d = u[0] * v[0] + u[1] * v[1]
        t = (2 * d + n) // (2 * n) if d >= 0 else -((-2 * d + n) // (2 * n))
        u2 = (u[0] - t * v[0], u[1] - t * v[1])
        if _norm2(u2) >= _norm2(u):
            break
        u = u2
    return min(_norm2(u), _norm2(v))


def solvable_unit_counts(total: int, sizes: Sequence[int]) -> bool:
    """Is ``total = sum a_i * sizes_i`` solvable in nonnegative integers?"""
    if total == 0:
        return True
    reach = bytearray(total + 1)
    reach[0] = 1
    for s in sizes:
        for t in range(s, total + 1):
            if reach[t - s]:
                reach[t] = 1
    return bool(reach[total])
