"""GF(2^q) arithmetic with full multiplication lookup tables.

Symbols are integers in ``[0, 2**q)``.  Bit ``k`` of a symbol is the
coefficient of ``z**k`` in its polynomial form, so the tuple
``(a0, ..., a_{q-1})`` maps to ``sum(a_k << k)`` and symbol 1 is the
multiplicative identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

# z^2+z+1, z^3+z+1, z^4+z+1, z^5+z^2+1 (bitmask includes the leading term)
DEFAULT_POLYNOMIALS = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101}

MAX_Q = 5


class FieldConfigError(ValueError):
    pass


def poly_mul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials given as bitmasks."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, g: int) -> int:
    """Remainder of ``a`` divided by ``g`` over GF(2)."""
    dg = g.bit_length() - 1
    while a and a.bit_length() - 1 >= dg:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def is_irreducible(g: int) -> bool:
    """Trial division of ``g`` by every polynomial of degree 1..deg(g)//2."""
    deg = g.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for cand in range(1 << d, 1 << (d + 1)):
            if poly_mod(g, cand) == 0:
                return False
    return True


@dataclass(frozen=True)
class FieldContext:
    """GF(2^q) defined by prime polynomial ``g`` (bitmask of q+1 bits)."""

    q: int
    g: int
    mul_table: np.ndarray = field(repr=False, compare=False)
    inv_table: np.ndarray = field(repr=False, compare=False)
    bits: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return 1 << self.q

    def add(self, a, b):
        return np.bitwise_xor(a, b)

    def mul(self, a, b):
        out = self.mul_table[a, b]
        return int(out) if np.ndim(out) == 0 else out

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self.inv_table[a])

    def psi(self, tup) -> int:
        tup = tuple(int(t) for t in tup)
        if len(tup) != self.q:
            raise ValueError(f"expected a {self.q}-tuple, got length {len(tup)}")
        if any(t not in (0, 1) for t in tup):
            raise ValueError("tuple entries must be bits")
        return sum(t << k for k, t in enumerate(tup))

    def psi_inv(self, s: int) -> tuple[int, ...]:
        if not 0 <= s < self.size:
            raise ValueError(f"symbol {s} outside GF(2^{self.q})")
        return tuple((s >> k) & 1 for k in range(self.q))

    def pack(self, bits: np.ndarray) -> np.ndarray:
        """Group the last axis (length multiple of q) into symbols."""
        bits = np.asarray(bits)
        if bits.shape[-1] % self.q:
            raise ValueError("bit length must be a multiple of q")
        grouped = bits.reshape(*bits.shape[:-1], -1, self.q).astype(np.int64)
        return (grouped << np.arange(self.q)).sum(axis=-1)

    def unpack(self, symbols: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`pack`."""
        symbols = np.asarray(symbols)
        out = self.bits[symbols]
        return out.reshape(*symbols.shape[:-1], -1)

    def combine_table(self, h1: int, h2: int) -> np.ndarray:
        """``f[v1, v2] = h1*v1 + h2*v2``, the relay's linear combination."""
        m = self.mul_table
        return m[h1][:, None] ^ m[h2][None, :]

    def canonical_pairs(self) -> list[tuple[int, int]]:
        """Coefficient pairs ``(i, j)`` with ``1 <= i <= j < 2**q``."""
        return list(combinations_with_replacement(range(1, self.size), 2))

    def mul_matrix(self, h: int) -> np.ndarray:
        """Binary q x q matrix of ``v -> h*v``; column k is the image of z^k."""
        return np.stack([self.bits[self.mul_table[h, 1 << k]] for k in range(self.q)], axis=1)


def make_field(q: int, g: int | None = None) -> FieldContext:
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= MAX_Q:
        raise FieldConfigError(f"unsupported extension degree q={q}; need 1 <= q <= {MAX_Q}")
    q = int(q)
    g = DEFAULT_POLYNOMIALS[q] if g is None else int(g)
    if g.bit_length() - 1 != q:
        raise FieldConfigError(f"polynomial {g:#b} does not have degree {q}")
    if not is_irreducible(g):
        raise FieldConfigError(f"polynomial {g:#b} is reducible over GF(2)")
    size = 1 << q
    mul = np.empty((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            mul[a, b] = poly_mod(poly_mul(a, b), g)
    inv = np.zeros(size, dtype=np.int64)
    for a in range(1, size):
        inv[a] = int(np.flatnonzero(mul[a] == 1)[0])
    bits = (np.arange(size)[:, None] >> np.arange(q)) & 1
    for arr in (mul, inv, bits):
        arr.setflags(write=False)
    return FieldContext(q=q, g=g, mul_table=mul, inv_table=inv, bits=bits)
