"""Independent reference implementations used only by the tests.

Nothing here imports the package modules under test.
"""

import itertools
import math

import numpy as np


def poly_coeffs(a, q):
    """Coefficient list (constant term first) of a field element."""
    return [(a >> i) & 1 for i in range(q)]


def field_mul(a, b, g, q):
    """Schoolbook polynomial product over GF(2), reduced mod g by long division."""
    pa, pb = poly_coeffs(a, q), poly_coeffs(b, q)
    prod = [0] * (2 * q - 1)
    for i, x in enumerate(pa):
        for j, y in enumerate(pb):
            prod[i + j] ^= x & y
    gc = [(g >> i) & 1 for i in range(q + 1)]
    for d in range(len(prod) - 1, q - 1, -1):
        if prod[d]:
            for i in range(q + 1):
                prod[d - q + i] ^= gc[i]
    return sum(c << i for i, c in enumerate(prod[:q]))


def conv_encode(u, taps):
    """Direct shift-register encoder; taps[j][d] multiplies u[t-d]."""
    nu = len(taps[0]) - 1
    full = list(u) + [0] * nu
    out = []
    for t in range(len(full)):
        for row in taps:
            bit = 0
            for d, tap in enumerate(row):
                if tap and t - d >= 0:
                    bit ^= full[t - d]
            out.append(bit)
    return out


def bit_prob(llr, bit):
    """P(bit) for L = ln P(1)/P(0)."""
    x = float(-llr if bit else llr)
    return 0.0 if x > 700 else 1.0 / (1.0 + math.exp(x))


def bcjr_enumeration(coded_llr, taps, k, info_llr=None):
    """Information-bit posteriors and coded-bit extrinsics by enumerating all
    2^k codewords."""
    n = len(coded_llr)
    post1 = np.zeros(k)
    post0 = np.zeros(k)
    ext = np.zeros((n, 2))
    for u in itertools.product((0, 1), repeat=k):
        c = conv_encode(u, taps)
        pc = [bit_prob(coded_llr[i], c[i]) for i in range(n)]
        prior = 1.0
        if info_llr is not None:
            for i in range(k):
                prior *= bit_prob(info_llr[i], u[i])
        total = prior * np.prod(pc)
        for i in range(k):
            (post1 if u[i] else post0)[i] += total
        for i in range(n):
            excl = prior * np.prod(pc[:i] + pc[i + 1:])
            ext[i, c[i]] += excl
    return np.log(post1) - np.log(post0), np.log(ext[:, 1]) - np.log(ext[:, 0])


def nc_brute_force(prior1, prior2, chan1, chan2, chan_r, h1, h2, g, q):
    """Extrinsic bit LLRs of one network check node by summing over every
    (v1, v2, vR) triple.

    ``prior*`` and ``chan*`` are length-q bit LLR lists (constant term first).
    The relay factor is the indicator vR = h1*v1 + h2*v2.
    """
    size = 1 << q
    bit_lists = [poly_coeffs(v, q) for v in range(size)]
    prod1 = [field_mul(h1, v, g, q) for v in range(size)]
    prod2 = [field_mul(h2, v, g, q) for v in range(size)]

    def bits(v):
        return bit_lists[v]

    out = []
    for m, own_prior in ((0, prior1), (1, prior2)):
        llrs = []
        for i in range(q):
            acc = [0.0, 0.0]
            for v1 in range(size):
                for v2 in range(size):
                    for vr in range(size):
                        if vr != prod1[v1] ^ prod2[v2]:
                            continue
                        w = 1.0
                        for j, b in enumerate(bits(vr)):
                            w *= bit_prob(chan_r[j], b)
                        for v, pri, ch, src in ((v1, prior1, chan1, 0), (v2, prior2, chan2, 1)):
                            for j, b in enumerate(bits(v)):
                                w *= bit_prob(ch[j], b)
                                if not (src == m and j == i):
                                    w *= bit_prob(pri[j], b)
                        own = v1 if m == 0 else v2
                        acc[bits(own)[i]] += w
            llrs.append(np.log(acc[1]) - np.log(acc[0]))
        out.append(llrs)
    return out


def gf2_remainder(a, b):
    """Remainder of GF(2) polynomial division (ints, bit i = coefficient of z^i)."""
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def has_factor(g):
    """True if some polynomial of degree 1..deg(g)/2 divides g."""
    deg = g.bit_length() - 1
    return any(gf2_remainder(g, d) == 0
               for d in range(2, 1 << (deg // 2 + 1)) if d.bit_length() - 1 >= 1)
