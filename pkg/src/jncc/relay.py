"""Relay processing: decode both sources, combine over GF(2^q), modulate."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import bit_llr
from .convcode import ConvCodeSpec, bcjr, hard_decision
from .gf import FieldContext
from .interleave import SpreadInterleaver


class RelayMode(str, enum.Enum):
    IDEAL = "ideal"
    NOISY = "noisy"
    RSI_GENIE = "rsi_genie"
    RSI_CRC = "rsi_crc"

    @property
    def uses_rsi(self) -> bool:
        return self in (RelayMode.RSI_GENIE, RelayMode.RSI_CRC)


@dataclass(frozen=True)
class NcCoefficients:
    h1: int
    h2: int

    def validate(self, field: FieldContext) -> "NcCoefficients":
        for h in (self.h1, self.h2):
            if not 1 <= h < field.size:
                raise ValueError(f"coefficient {h} is not a nonzero element of GF(2^{field.q})")
        return self

    def canonical(self) -> "NcCoefficients":
        return NcCoefficients(min(self.h1, self.h2), max(self.h1, self.h2))

    def swapped(self) -> "NcCoefficients":
        return NcCoefficients(self.h2, self.h1)

    def __iter__(self):
        return iter((self.h1, self.h2))


def padded_length(n: int, q: int) -> int:
    return -(-n // q) * q


def pad_bits(x, q: int) -> np.ndarray:
    """Zero-pad the last axis to a multiple of q."""
    x = np.asarray(x)
    extra = padded_length(x.shape[-1], q) - x.shape[-1]
    if not extra:
        return x
    return np.concatenate([x, np.zeros(x.shape[:-1] + (extra,), x.dtype)], axis=-1)


CRC8_POLY = 0x07
CRC_BITS = 8


def crc8(bits) -> np.ndarray:
    """CRC-8 (poly 0x07, zero init) over the last axis, MSB first."""
    bits = np.asarray(bits, dtype=np.int64)
    reg = np.zeros(bits.shape[:-1], np.int64)
    for i in range(bits.shape[-1]):
        fb = ((reg >> 7) & 1) ^ bits[..., i]
        reg = ((reg << 1) & 0xFF) ^ (fb * CRC8_POLY)
    return (reg[..., None] >> np.arange(7, -1, -1)) & 1


def append_crc(payload) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.int64)
    return np.concatenate([payload, crc8(payload)], axis=-1)


def crc_ok(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    return np.all(crc8(bits[..., :-CRC_BITS]) == bits[..., -CRC_BITS:], axis=-1)


def combine(field: FieldContext, v1, v2, h1, h2) -> np.ndarray:
    """Relay symbol ``h1*v1 + h2*v2``; h may be per-frame arrays (0 drops a source)."""
    h1 = np.asarray(h1)[..., None] if np.ndim(h1) else h1
    h2 = np.asarray(h2)[..., None] if np.ndim(h2) else h2
    return field.mul_table[h1, v1] ^ field.mul_table[h2, v2]


def relay_symbols_from_bits(x1, x2, field: FieldContext, h1, h2) -> np.ndarray:
    """Pad, pack into q-tuples, combine and map bits to +-1 symbols."""
    q = field.q
    v1 = field.pack(pad_bits(x1, q))
    v2 = field.pack(pad_bits(x2, q))
    vr = combine(field, v1, v2, h1, h2)
    return 2.0 * field.unpack(vr) - 1.0


def relay_decode(y_relay, amplitude, n0, code: ConvCodeSpec, pi: SpreadInterleaver):
    """BCJR on one source slot as received at the relay.

    Returns (coded hard decisions in codeword order, info hard decisions).
    """
    llr = bit_llr(y_relay, np.asarray(amplitude)[..., None], n0)
    llr_c = pi.invert(llr)
    info_post, coded_ext = bcjr(llr_c, code)
    # coded-bit a-posteriori = extrinsic + own channel input
    app = coded_ext + llr_c
    return hard_decision(app), hard_decision(info_post)


def relay_process(y1_relay, y2_relay, amplitudes, n0, codes, interleavers,
                  field: FieldContext, h: NcCoefficients, mode: RelayMode | str,
                  true_codewords=None, k: int | None = None):
    """Relay chain for a batch of frames.

    ``y*_relay`` hold the interleaved source slots as received at the relay,
    ``amplitudes`` the two source-relay amplitudes ``(a1, a2)`` (scalars or
    per-frame arrays).  ``true_codewords`` (codeword order, before
    interleaving) are required in ``ideal`` and ``rsi_genie`` modes.

    Returns ``(relay_symbols, rsi_flags)``: +-1 symbols of padded length and a
    boolean ``(..., 2)`` array marking sources dropped by the relay.
    """
    mode = RelayMode(mode)
    h.validate(field)
    c_hat = []
    info_ok = []
    if mode is RelayMode.IDEAL:
        if true_codewords is None:
            raise ValueError("ideal relay needs the true codewords")
        c_hat = [np.asarray(c) for c in true_codewords]
    else:
        for m, y in enumerate((y1_relay, y2_relay)):
            c, u = relay_decode(y, amplitudes[m], n0, codes[m], interleavers[m])
            c_hat.append(c)
            if mode is RelayMode.RSI_CRC:
                info_ok.append(crc_ok(u))
    batch = c_hat[0].shape[:-1]

    flags = np.zeros(batch + (2,), dtype=bool)
    if mode is RelayMode.RSI_GENIE:
        if true_codewords is None:
            raise ValueError("rsi_genie relay needs the true codewords")
        for m in range(2):
            flags[..., m] = np.any(c_hat[m] != np.asarray(true_codewords[m]), axis=-1)
    elif mode is RelayMode.RSI_CRC:
        for m in range(2):
            flags[..., m] = ~info_ok[m]

    h1 = np.where(flags[..., 0], 0, h.h1)
    h2 = np.where(flags[..., 1], 0, h.h2)
    x1 = interleavers[0].apply(c_hat[0])
    x2 = interleavers[1].apply(c_hat[1])
    return relay_symbols_from_bits(x1, x2, field, h1, h2), flags
