"""Rate-1/3 feedforward convolutional codes and a batched BCJR decoder.

Soft values are log-likelihood ratios ``L = ln P(bit=1) / P(bit=0)``
throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class InvalidSoftInput(ValueError):
    """Soft input admits no codeword (or contains NaN)."""


@dataclass(frozen=True)
class ConvCodeSpec:
    """Octal generators, MSB tap on the current input bit.

    Generators longer than ``memory + 1`` bits are read left-justified
    (trailing padding bits must be zero), so ``554`` with memory 6 is the
    tap vector ``1011011``.
    """

    name: str
    generators: tuple[int, ...]  # octal digits written as decimal ints, e.g. 554
    memory: int

    def __post_init__(self):
        if len(self.generators) != 3:
            raise ValueError("only rate-1/3 codes (three generators) are supported")
        self.taps  # validates

    @cached_property
    def taps(self) -> np.ndarray:
        """(3, memory+1) tap matrix; column 0 multiplies the current input."""
        n = self.memory + 1
        rows = []
        for gen in self.generators:
            digits = str(gen)
            if any(c not in "01234567" for c in digits):
                raise ValueError(f"generator {gen} is not octal")
            bits = "".join(format(int(c), "03b") for c in digits).lstrip("0") or "0"
            if len(bits) < n:
                # right-justified short form, e.g. 5 -> 101 for memory 2
                bits = bits.rjust(n, "0")
            elif len(bits) > n:
                bits = "".join(format(int(c), "03b") for c in digits)
                if set(bits[n:]) - {"0"}:
                    raise ValueError(f"generator {gen} has more than {n} taps")
                bits = bits[:n]
            rows.append([int(b) for b in bits])
        return np.array(rows, dtype=np.int64)

    def coded_length(self, k: int) -> int:
        return 3 * (k + self.memory)


CC2 = ConvCodeSpec("CC2", (5, 7, 7), 2)
CC6 = ConvCodeSpec("CC6", (554, 624, 764), 6)
CODES = {"CC2": CC2, "CC6": CC6}


@dataclass(frozen=True)
class Trellis:
    """State-transition tables; the state holds the last ``memory`` inputs,
    most recent in the most significant bit. Branch ``2*s + u`` leaves
    state ``s`` on input ``u``."""

    spec: ConvCodeSpec
    next_state: np.ndarray = field(repr=False)  # (2S,)
    prev_state: np.ndarray = field(repr=False)  # (2S,)
    inputs: np.ndarray = field(repr=False)  # (2S,)
    outputs: np.ndarray = field(repr=False)  # (2S, 3)
    incoming: np.ndarray = field(repr=False)  # (S, 2) branch ids entering each state

    @property
    def n_states(self) -> int:
        return 1 << self.spec.memory

    @classmethod
    def from_spec(cls, spec: ConvCodeSpec) -> "Trellis":
        nu = spec.memory
        n_states = 1 << nu
        taps = spec.taps
        nxt, prv, inp, out = [], [], [], []
        for s in range(n_states):
            for u in (0, 1):
                reg = [u] + [(s >> (nu - 1 - j)) & 1 for j in range(nu)]
                out.append(taps.dot(reg) % 2)
                nxt.append((u << (nu - 1)) | (s >> 1) if nu else 0)
                prv.append(s)
                inp.append(u)
        nxt = np.array(nxt)
        incoming = np.array([np.flatnonzero(nxt == s) for s in range(n_states)])
        return cls(spec, nxt, np.array(prv), np.array(inp), np.array(out), incoming)


_TRELLIS_CACHE: dict[ConvCodeSpec, Trellis] = {}


def trellis_for(spec: ConvCodeSpec) -> Trellis:
    if spec not in _TRELLIS_CACHE:
        _TRELLIS_CACHE[spec] = Trellis.from_spec(spec)
    return _TRELLIS_CACHE[spec]


def encode(info, spec: ConvCodeSpec) -> np.ndarray:
    """Zero-terminated encoding; works on the last axis of ``info``."""
    info = np.asarray(info, dtype=np.int64)
    if info.shape[-1] < 1:
        raise ValueError("need at least one information bit")
    nu = spec.memory
    padded = np.concatenate([np.zeros(info.shape[:-1] + (nu,), np.int64), info,
                             np.zeros(info.shape[:-1] + (nu,), np.int64)], axis=-1)
    n_steps = info.shape[-1] + nu
    out = np.zeros(info.shape[:-1] + (n_steps, 3), np.int64)
    for d in range(nu + 1):
        # tap d sees the input delayed by d steps
        seg = padded[..., nu - d: nu - d + n_steps]
        out ^= seg[..., :, None] * spec.taps[:, d]
    return (out & 1).reshape(info.shape[:-1] + (3 * n_steps,))


def llr_to_logprobs(llr):
    """Return ``(ln P(0), ln P(1))`` for an LLR array."""
    llr = np.asarray(llr, dtype=float)
    return -np.logaddexp(0.0, llr), -np.logaddexp(0.0, -llr)


def llr_from_probs(probs) -> np.ndarray:
    """Convert (..., 2) probability pairs ``(P0, P1)`` to LLRs."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0) or np.any(probs.sum(axis=-1) <= 0):
        raise InvalidSoftInput("probability pairs must be nonnegative and not all zero")
    with np.errstate(divide="ignore"):
        return np.log(probs[..., 1]) - np.log(probs[..., 0])


def probs_from_llr(llr) -> np.ndarray:
    lp0, lp1 = llr_to_logprobs(llr)
    return np.stack([np.exp(lp0), np.exp(lp1)], axis=-1)


# inputs are clipped so every branch keeps a representable probability
LLR_CLIP = 60.0


def _bit_probs(llr):
    """(P0, P1) of clipped LLRs."""
    llr = np.clip(llr, -LLR_CLIP, LLR_CLIP)
    return 1.0 / (1.0 + np.exp(llr)), 1.0 / (1.0 + np.exp(-llr))


def _branch_terms(coded_llr, info_llr, trellis: Trellis, k: int):
    """Per-branch probability factors, each of shape (..., T, 2S)."""
    nu = trellis.spec.memory
    n_steps = k + nu
    p0, p1 = _bit_probs(coded_llr)
    pb = np.stack([p0, p1], axis=-1).reshape(coded_llr.shape[:-1] + (n_steps, 3, 2))
    per_bit = [pb[..., j, :][..., trellis.outputs[:, j]] for j in range(3)]

    pin = np.full(coded_llr.shape[:-1] + (n_steps, 2), 0.5)
    if info_llr is not None:
        i0, i1 = _bit_probs(info_llr)
        pin[..., :k, 0] = i0
        pin[..., :k, 1] = i1
    pin[..., k:, 0] = 1.0
    pin[..., k:, 1] = 0.0  # termination tail is known to be zero
    info_term = pin[..., trellis.inputs]
    return per_bit, info_term


def bcjr(coded_llr, spec: ConvCodeSpec, info_llr=None):
    """MAP decoding of a zero-terminated frame.

    Forward and backward recursions run on probabilities rescaled at every
    trellis step; input LLRs are clipped to +-LLR_CLIP.

    Parameters
    ----------
    coded_llr : array (..., N)
        Channel (or network-node) LLRs of the coded bits, N = 3 (K + memory).
    info_llr : array (..., K), optional
        A-priori LLRs for the information bits; uniform when omitted.

    Returns
    -------
    info_post : array (..., K)
        A-posteriori LLRs of the information bits.
    coded_ext : array (..., N)
        Extrinsic LLRs of the coded bits (own input excluded).
    """
    trellis = trellis_for(spec)
    coded_llr = np.asarray(coded_llr, dtype=float)
    if np.isnan(coded_llr).any():
        raise InvalidSoftInput("NaN in coded LLRs")
    n = coded_llr.shape[-1]
    if n % 3:
        raise ValueError("coded length must be a multiple of 3")
    n_steps = n // 3
    k = n_steps - spec.memory
    if k < 1:
        raise ValueError("frame shorter than the termination tail")
    if info_llr is not None:
        info_llr = np.asarray(info_llr, dtype=float)
        if info_llr.shape[-1] != k:
            raise ValueError("info_llr length does not match the frame")

    per_bit, info_term = _branch_terms(coded_llr, info_llr, trellis, k)
    gm = per_bit[0] * per_bit[1] * per_bit[2] * info_term

    batch = coded_llr.shape[:-1]
    n_states = trellis.n_states
    init = np.zeros(batch + (n_states,))
    init[..., 0] = 1.0

    alpha = np.empty(batch + (n_steps + 1, n_states))
    alpha[..., 0, :] = init
    inc0, inc1 = trellis.incoming[:, 0], trellis.incoming[:, 1]
    prev = trellis.prev_state
    for t in range(n_steps):
        cand = alpha[..., t, prev] * gm[..., t, :]
        alpha[..., t + 1, :] = _rescale(cand[..., inc0] + cand[..., inc1])

    beta = np.empty_like(alpha)
    beta[..., n_steps, :] = init
    nxt = trellis.next_state
    for t in range(n_steps - 1, -1, -1):
        cand = (gm[..., t, :] * beta[..., t + 1, nxt]).reshape(batch + (n_states, 2))
        beta[..., t, :] = _rescale(cand[..., 0] + cand[..., 1])

    ab = alpha[..., :-1, prev] * beta[..., 1:, nxt]  # (..., T, 2S)
    ones = trellis.inputs == 1
    info_post = _log_ratio(ab[..., :k, :] * gm[..., :k, :], ones)

    coded_ext = np.empty(batch + (n_steps, 3))
    for j in range(3):
        others = [per_bit[i] for i in range(3) if i != j]
        excl = ab * others[0] * others[1] * info_term
        coded_ext[..., j] = _log_ratio(excl, trellis.outputs[:, j] == 1)
    return info_post, coded_ext.reshape(batch + (n,))


def _rescale(a):
    m = a.max(axis=-1, keepdims=True)
    if not np.all(m > 0):
        raise InvalidSoftInput("soft input is inconsistent with every codeword")
    return a / m


def _log_ratio(metric, mask):
    num = metric[..., mask].sum(axis=-1)
    den = metric[..., ~mask].sum(axis=-1)
    if np.any((num == 0) & (den == 0)):
        raise InvalidSoftInput("soft input is inconsistent with every codeword")
    with np.errstate(divide="ignore"):
        return np.log(num) - np.log(den)


def hard_decision(llr) -> np.ndarray:
    """Bit 1 where LLR > 0; ties go to 0."""
    return (np.asarray(llr) > 0).astype(np.int64)
