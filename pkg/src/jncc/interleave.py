"""Seeded S-random (spread) interleavers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InterleaverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpreadInterleaver:
    """Permutation with ``out[i] = x[perm[i]]``.

    Any two input positions closer than ``s`` land at least ``s`` apart
    at the output.
    """

    n: int
    s: int
    seed: int
    perm: np.ndarray = field(repr=False, compare=False)
    inverse: np.ndarray = field(repr=False, compare=False)

    def apply(self, x):
        x = np.asarray(x)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected length {self.n}, got {x.shape[-1]}")
        return x[..., self.perm]

    def invert(self, y):
        y = np.asarray(y)
        if y.shape[-1] != self.n:
            raise ValueError(f"expected length {self.n}, got {y.shape[-1]}")
        return y[..., self.inverse]


def spread_ok(perm, s: int) -> bool:
    """Exhaustive O(n*s) check of the spread property."""
    perm = np.asarray(perm)
    for d in range(1, s):
        if np.any(np.abs(perm[d:] - perm[:-d]) < s):
            return False
    return True


def generate(n: int, s: int, seed: int, max_restarts: int = 1000) -> SpreadInterleaver:
    """Draw an S-random permutation by sequential rejection with restarts."""
    if not 1 <= s <= n:
        raise ValueError(f"need n >= s >= 1 (got n={n}, s={s})")
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        perm = _attempt(n, s, rng)
        if perm is not None:
            break
    else:
        raise InterleaverError(f"no spread-{s} permutation of length {n} found "
                               f"after {max_restarts} restarts")
    if not spread_ok(perm, s):  # pragma: no cover - guarded by construction
        raise InterleaverError("generated permutation violates the spread constraint")
    perm.setflags(write=False)
    inverse = np.argsort(perm)
    inverse.setflags(write=False)
    return SpreadInterleaver(n=n, s=s, seed=seed, perm=perm, inverse=inverse)


def _attempt(n, s, rng):
    remaining = list(rng.permutation(n))
    perm = []
    for _ in range(n):
        recent = perm[-(s - 1):] if s > 1 else []
        for idx, cand in enumerate(remaining):
            if all(abs(cand - r) >= s for r in recent):
                perm.append(remaining.pop(idx))
                break
        else:
            return None
    return np.array(perm, dtype=np.int64)
