"""Iterative joint network-channel decoder at the destination.

The factor graph couples the two convolutional decoders through ``N/q``
network check nodes.  Each check node ties one q-bit sub-sequence of each
source to the relay symbol ``h1*v1 + h2*v2`` observed over the relay link.
Check nodes are evaluated in the probability domain over the ``2**q``
alphabet; the convolutional decoders run a rescaled BCJR.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from .channel import bit_llr
from .convcode import ConvCodeSpec, InvalidSoftInput, bcjr, hard_decision, llr_to_logprobs
from .gf import FieldContext
from .interleave import SpreadInterleaver
from .relay import NcCoefficients, padded_length

# check-node outputs are clipped before entering the BCJR so that
# contradicting certainties cannot empty the trellis
LLR_CLIP = 60.0

SCHEDULES = ("serial", "parallel")


def _bit_logprobs(llr, bits):
    """log P(bit pattern of v) for every symbol v: (..., q) -> (..., Q)."""
    lp0, lp1 = llr_to_logprobs(llr)
    terms = np.where(bits.astype(bool), lp1[..., None, :], lp0[..., None, :])
    return terms.sum(axis=-1)


def _max_normalised_exp(logp):
    m = logp.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise InvalidSoftInput("symbol likelihood vanishes for every symbol")
    return np.exp(logp - m)


def symbol_likelihood(bit_llrs, field: FieldContext) -> np.ndarray:
    """Per-symbol likelihood from q per-bit LLRs (last axis), normalised."""
    bit_llrs = np.asarray(bit_llrs, dtype=float)
    if bit_llrs.shape[-1] != field.q:
        raise ValueError(f"expected {field.q} bit LLRs on the last axis")
    p = _max_normalised_exp(_bit_logprobs(bit_llrs, field.bits))
    return p / p.sum(axis=-1, keepdims=True)


def combine_tables(field: FieldContext, h1, h2) -> np.ndarray:
    """``F[..., v1, v2]``; h1/h2 scalars or arrays (0 allowed to drop a source)."""
    mul = field.mul_table
    return mul[np.asarray(h1)][..., :, None] ^ mul[np.asarray(h2)][..., None, :]


def _gather_relay(p_relay, table):
    """``p_relay[..., l, F[..., v1, v2]]`` with F broadcast over the node axis."""
    size = table.shape[-1]
    idx = table.reshape(table.shape[:-2] + (1, size * size))
    idx = np.broadcast_to(idx, p_relay.shape[:-1] + (size * size,))
    out = np.take_along_axis(p_relay, idx, axis=-1)
    return out.reshape(p_relay.shape[:-1] + (size, size))


def _bit_factors(apriori_llr, bits):
    """``F[..., v, i] = P^a(bit i of v)`` from a-priori LLRs (..., q)."""
    llr = np.asarray(apriori_llr, dtype=float)
    with np.errstate(over="ignore"):
        p1 = 1.0 / (1.0 + np.exp(-llr))
        p0 = 1.0 / (1.0 + np.exp(llr))
    return np.where(bits.astype(bool), p1[..., None, :], p0[..., None, :])


def _marc_message(own: int, a_other, relay_f):
    """Information on source ``own`` from the relay slot and the other source."""
    if own == 0:
        msg = np.matmul(relay_f, a_other[..., :, None])[..., 0]
    else:
        msg = np.matmul(a_other[..., None, :], relay_f)[..., 0, :]
    top = msg.max(axis=-1, keepdims=True)
    dead = top <= 0  # every path underflowed: carry no information
    return np.where(dead, 1.0, msg / np.where(dead, 1.0, top))


class CheckNodeLayer:
    """All ``N/q`` network check nodes of a batch of frames.

    Channel-dependent factors are fixed for the whole decode and computed
    once; :meth:`update` only folds in the current a-priori bit messages.
    """

    def __init__(self, channel, field: FieldContext, h1, h2):
        self.field = field
        bits = field.bits
        self.p_src = [_max_normalised_exp(_bit_logprobs(np.asarray(c, dtype=float), bits))
                      for c in channel[:2]]
        p_relay = _max_normalised_exp(_bit_logprobs(np.asarray(channel[2], dtype=float), bits))
        self.relay_f = _gather_relay(p_relay, combine_tables(field, h1, h2))
        self._ones = [np.flatnonzero(bits[:, i]) for i in range(field.q)]
        self._zeros = [np.flatnonzero(bits[:, i] == 0) for i in range(field.q)]

    def factors(self, apriori_llr):
        """Per-symbol a-priori bit factors, see :func:`_bit_factors`."""
        return _bit_factors(apriori_llr, self.field.bits)

    def message(self, m: int, factors):
        """Extrinsic bit LLRs for source ``m`` given both sources' factors."""
        o = 1 - m
        a_other = self.p_src[o] * factors[o].prod(axis=-1)
        marc = _marc_message(m, a_other, self.relay_f)
        return self._extrinsic(self.p_src[m] * marc, factors[m])

    def update(self, apriori, sources=(0, 1)):
        factors = [self.factors(a) for a in apriori]
        out = [None, None]
        for m in sources:
            out[m] = self.message(m, factors)
        return out

    def _extrinsic(self, w, factors):
        q = self.field.q
        out = np.empty(w.shape[:-1] + (q,))
        for i in range(q):
            s = w
            for j in range(q):
                if j != i:
                    s = s * factors[..., j]
            num = s[..., self._ones[i]].sum(axis=-1)
            den = s[..., self._zeros[i]].sum(axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                llr = np.log(num) - np.log(den)
            out[..., i] = np.where((num == 0) & (den == 0), 0.0, llr)
        return out


def nc_node_update(apriori, channel, field: FieldContext, h1, h2, sources=(0, 1)):
    """Network check node update for a batch of nodes.

    Parameters
    ----------
    apriori : pair of arrays (..., q)
        A-priori LLRs of both sources' bits in the node (from the convolutional
        decoders).
    channel : triple of arrays (..., q)
        Destination channel LLRs for source 1, source 2 and the relay.
    h1, h2 : int or array
        Network coefficients, scalars or arrays broadcasting against the
        leading batch axes (excluding the node axis); zero drops a source.
    sources : which sources to produce messages for.

    Returns
    -------
    list of (..., q) arrays with the extrinsic bit LLRs sent back to each
    requested source (None for sources not requested).
    """
    single = np.ndim(channel[2]) == 1
    if single:
        channel = [np.asarray(c, dtype=float)[None] for c in channel]
        apriori = [np.asarray(a, dtype=float)[None] for a in apriori]
    out = CheckNodeLayer(channel, field, h1, h2).update(apriori, sources)
    return [o[0] if single and o is not None else o for o in out]


@dataclass(frozen=True)
class DecoderConfig:
    field: FieldContext
    codes: tuple[ConvCodeSpec, ConvCodeSpec]
    interleavers: tuple[SpreadInterleaver, SpreadInterleaver]
    h: NcCoefficients
    iterations: int = 15
    schedule: str = "serial"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        for code, pi in zip(self.codes, self.interleavers):
            if code.coded_length(self.k_of(code, pi)) != pi.n:
                raise ValueError("interleaver length does not match the code")
        if self.interleavers[0].n != self.interleavers[1].n:
            raise ValueError("both sources must use the same codeword length")
        self.h.validate(self.field)

    @staticmethod
    def k_of(code: ConvCodeSpec, pi: SpreadInterleaver) -> int:
        return pi.n // 3 - code.memory

    @property
    def n(self) -> int:
        return self.interleavers[0].n

    @property
    def n_padded(self) -> int:
        return padded_length(self.n, self.field.q)


@dataclass
class DecodeDiagnostics:
    """Per-iteration mean extrinsic information proxy, shape (batch, I, 2)."""

    mi: np.ndarray
    frame_ids: np.ndarray | None = dc_field(default=None)

    def rows(self):
        mi = self.mi.reshape(-1, *self.mi.shape[-2:])
        ids = self.frame_ids if self.frame_ids is not None else np.arange(mi.shape[0])
        for fid, per_frame in zip(np.ravel(ids), mi):
            for it, (m1, m2) in enumerate(per_frame, start=1):
                yield int(fid), it, float(m1), float(m2)

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["frame", "iteration", "mi_source1", "mi_source2"])
            for fid, it, m1, m2 in self.rows():
                w.writerow([fid, it, f"{m1:.6f}", f"{m2:.6f}"])
        finally:
            if own:
                fh.close()


def soft_information(llr) -> np.ndarray:
    """Truth-free MI proxy ``1 - mean(H_b(p))`` over the last axis."""
    llr = np.clip(np.asarray(llr, dtype=float), -LLR_CLIP, LLR_CLIP)
    p = 1.0 / (1.0 + np.exp(-np.abs(llr)))
    with np.errstate(divide="ignore", invalid="ignore"):
        hb = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return 1.0 - np.nan_to_num(hb).mean(axis=-1)


def channel_llrs(y, amplitudes, n0):
    """Destination LLRs for the three slots; amplitudes shaped (..., 3)."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    return [bit_llr(y[j], amplitudes[..., j, None], n0) for j in range(3)]


def joint_decode(y, amplitudes, n0, cfg: DecoderConfig, rsi_flags=None,
                 return_posteriors: bool = False):
    """Decode a batch of frames.

    Parameters
    ----------
    y : (y1, y2, yR)
        Destination observations: the two source slots (length N, interleaved
        order) and the relay slot (padded length), each with leading batch axes.
    amplitudes : array (..., 3)
        Received amplitudes ``alpha*sqrt(gain)`` of the 1-D, 2-D and R-D links.
    n0 : float
    rsi_flags : bool array (..., 2), optional
        Sources dropped by the relay; their coefficient is set to zero.

    Returns
    -------
    u1_hat, u2_hat, diagnostics  (plus info posteriors if requested)
    """
    llr = channel_llrs(y, amplitudes, n0)
    return decode_llrs(llr, cfg, rsi_flags, return_posteriors)


def decode_llrs(llr, cfg: DecoderConfig, rsi_flags=None, return_posteriors=False):
    field = cfg.field
    q = field.q
    n, n_pad = cfg.n, cfg.n_padded
    src = [np.asarray(x, dtype=float) for x in llr[:2]]
    batch = src[0].shape[:-1]
    if any(x.shape[-1] != n for x in src):
        raise ValueError(f"source observations must have length {n}")
    relay = np.asarray(llr[2], dtype=float)
    if relay.shape[-1] != n_pad:
        raise ValueError(f"relay observation must have length {n_pad}")

    def pad(x, fill):
        if n_pad == n:
            return x
        extra = np.full(x.shape[:-1] + (n_pad - n,), fill)
        return np.concatenate([x, extra], axis=-1)

    def nodes(x):
        return x.reshape(x.shape[:-1] + (n_pad // q, q))

    ch = [nodes(pad(src[0], 0.0)), nodes(pad(src[1], 0.0)), nodes(relay)]
    # pad bits are known zeros
    apriori = [pad(np.zeros(batch + (n,)), -np.inf) for _ in range(2)]

    h1, h2 = cfg.h.h1, cfg.h.h2
    if rsi_flags is not None:
        rsi_flags = np.asarray(rsi_flags, dtype=bool)
        h1 = np.where(rsi_flags[..., 0], 0, h1)
        h2 = np.where(rsi_flags[..., 1], 0, h2)
    layer = CheckNodeLayer(ch, field, h1, h2)
    factors = [layer.factors(nodes(a)) for a in apriori]

    mi = np.zeros(batch + (cfg.iterations, 2))
    posts = [None, None]

    def run_cc(m, gamma):
        pi = cfg.interleavers[m]
        g = np.clip(gamma.reshape(batch + (n_pad,))[..., :n], -LLR_CLIP, LLR_CLIP)
        info_post, coded_ext = bcjr(pi.invert(g), cfg.codes[m])
        apriori[m][..., :n] = pi.apply(coded_ext)
        posts[m] = info_post
        return soft_information(coded_ext)

    for it in range(cfg.iterations):
        if cfg.schedule == "serial":
            for m in (0, 1):
                mi[..., it, m] = run_cc(m, layer.message(m, factors))
                factors[m] = layer.factors(nodes(apriori[m]))
        else:
            gams = [layer.message(m, factors) for m in (0, 1)]
            for m in (0, 1):
                mi[..., it, m] = run_cc(m, gams[m])
                factors[m] = layer.factors(nodes(apriori[m]))

    diag = DecodeDiagnostics(mi=mi)
    u_hat = [hard_decision(p) for p in posts]
    if return_posteriors:
        return u_hat[0], u_hat[1], diag, posts
    return u_hat[0], u_hat[1], diag


def decode_point_to_point(y, amplitude, n0, code: ConvCodeSpec, pi: SpreadInterleaver):
    """Single-link BCJR baseline (no relay help)."""
    llr = bit_llr(y, np.asarray(amplitude, dtype=float)[..., None], n0)
    info_post, _ = bcjr(pi.invert(llr), code)
    return hard_decision(info_post)
