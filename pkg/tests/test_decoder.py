import io
import itertools

import numpy as np
import pytest

from jncc.convcode import CC2, CC6, encode
from jncc.decoder import (CheckNodeLayer, DecoderConfig, decode_llrs, decode_point_to_point,
                          joint_decode, nc_node_update, symbol_likelihood)
from jncc.gf import make_field
from jncc.interleave import SpreadInterleaver, generate
from jncc.relay import NcCoefficients, relay_symbols_from_bits

import oracles


def make_cfg(q=3, h=(6, 6), k=32, code=CC2, iterations=15, schedule="serial", seeds=(1, 2)):
    n = code.coded_length(k)
    pis = tuple(generate(n, q, s) for s in seeds)
    return DecoderConfig(make_field(q), (code, code), pis, NcCoefficients(*h), iterations, schedule)


def transmit_frames(cfg, rng, b, amps, n0, rsi=None):
    k = cfg.k_of(cfg.codes[0], cfg.interleavers[0])
    u = rng.integers(0, 2, (2, b, k))
    x = [cfg.interleavers[m].apply(encode(u[m], cfg.codes[m])) for m in range(2)]
    h1 = cfg.h.h1 if rsi is None else np.where(rsi[:, 0], 0, cfg.h.h1)
    h2 = cfg.h.h2 if rsi is None else np.where(rsi[:, 1], 0, cfg.h.h2)
    sr = relay_symbols_from_bits(x[0], x[1], cfg.field, h1, h2)
    amps = np.broadcast_to(np.asarray(amps, dtype=float), (b, 3))
    sd = np.sqrt(n0 / 2)
    y = tuple(amps[:, j, None] * s + sd * rng.normal(size=s.shape)
              for j, s in enumerate((2.0 * x[0] - 1, 2.0 * x[1] - 1, sr)))
    return u, y, amps


@pytest.mark.parametrize("q", [2, 3])
def test_check_node_matches_brute_force(q):
    f = make_field(q)
    rng = np.random.default_rng(q)
    for _ in range(40):
        h1, h2 = (int(v) for v in rng.integers(1, f.size, 2))
        a = [rng.normal(0, 3, q) for _ in range(2)]
        c = [rng.normal(0, 3, q) for _ in range(3)]
        got = nc_node_update(a, c, f, h1, h2)
        want = oracles.nc_brute_force(a[0], a[1], *c, h1, h2, f.g, q)
        assert np.max(np.abs(np.array(got) - np.array(want))) < 1e-12


def test_check_node_batched_and_per_frame_h():
    f = make_field(3)
    rng = np.random.default_rng(0)
    a = [rng.normal(0, 2, (4, 5, 3)) for _ in range(2)]
    c = [rng.normal(0, 2, (4, 5, 3)) for _ in range(3)]
    hs = np.array([1, 3, 6, 7])
    got = nc_node_update(a, c, f, hs, 5)
    for b in range(4):
        ref = nc_node_update([x[b] for x in a], [x[b] for x in c], f, int(hs[b]), 5)
        for m in range(2):
            assert np.allclose(got[m][b], ref[m], atol=1e-12)


def test_extrinsic_exclusion():
    f = make_field(3)
    rng = np.random.default_rng(1)
    a = [rng.normal(0, 2, (50, 3)) for _ in range(2)]
    c = [rng.normal(0, 2, (50, 3)) for _ in range(3)]
    base = nc_node_update(a, c, f, 3, 6)
    for m, i in itertools.product(range(2), range(3)):
        pert = [x.copy() for x in a]
        pert[m][:, i] = rng.normal(0, 5, 50)
        out = nc_node_update(pert, c, f, 3, 6)
        assert np.max(np.abs(out[m][:, i] - base[m][:, i])) < 1e-12


def test_symbol_likelihood_normalised():
    f = make_field(4)
    llr = np.random.default_rng(2).normal(0, 20, (100, 4))
    p = symbol_likelihood(llr, f)
    assert np.allclose(p.sum(-1), 1.0, atol=1e-9)
    with pytest.raises(ValueError):
        symbol_likelihood(np.zeros((2, 3)), f)


def test_uniform_relay_gives_channel_only():
    f = make_field(3)
    rng = np.random.default_rng(3)
    a = [rng.normal(0, 2, (20, 3)) for _ in range(2)]
    c = [rng.normal(0, 2, (20, 3)) for _ in range(2)] + [np.zeros((20, 3))]
    out = nc_node_update(a, c, f, 6, 6)
    for m in range(2):
        assert np.allclose(out[m], c[m], atol=1e-12)


def test_dropped_source_gets_channel_only():
    f = make_field(3)
    rng = np.random.default_rng(4)
    a = [rng.normal(0, 2, (20, 3)) for _ in range(2)]
    c = [rng.normal(0, 2, (20, 3)) for _ in range(3)]
    out = nc_node_update(a, c, f, 0, 6)
    assert np.allclose(out[0], c[0], atol=1e-12)
    alone = CheckNodeLayer(c, f, 0, 6)
    assert np.allclose(alone.update(a)[1], out[1])


def test_noiseless_decodes_in_one_iteration():
    cfg = make_cfg(iterations=1)
    rng = np.random.default_rng(5)
    u, y, amps = transmit_frames(cfg, rng, 8, (1, 1, 1), 1e-6)
    u1, u2, diag = joint_decode(y, amps, 1e-6, cfg)
    assert np.array_equal(u1, u[0]) and np.array_equal(u2, u[1])
    assert diag.mi.shape == (8, 1, 2)


def test_padding_path_q4():
    # N = 102 is not a multiple of 4; two pad bits per source
    cfg = make_cfg(q=4, h=(3, 9))
    assert cfg.n_padded == 104
    rng = np.random.default_rng(6)
    u, y, amps = transmit_frames(cfg, rng, 6, (1, 1, 1), 0.05)
    u1, u2, _ = joint_decode(y, amps, 0.05, cfg)
    assert np.array_equal(u1, u[0]) and np.array_equal(u2, u[1])


def test_tree_case_matches_enumeration():
    # q = 1 with source 2 dropped: every check node touches one bit of
    # source 1 only, so the graph is a tree and the posteriors are exact
    k = 6
    cfg = make_cfg(q=1, h=(1, 1), k=k, iterations=3)
    n = cfg.n
    rng = np.random.default_rng(7)
    for _ in range(5):
        llr = [rng.normal(0, 2, n) for _ in range(3)]
        *_, posts = decode_llrs(llr, cfg, rsi_flags=np.array([False, True]),
                                return_posteriors=True)
        # source 1: each coded bit sees its own channel and the relay copy
        pi = cfg.interleavers[0]
        total = pi.invert(llr[0] + llr[2])
        want, _ = oracles.bcjr_enumeration(total, CC2.taps.tolist(), k)
        assert np.allclose(posts[0], want, atol=1e-9)
        want2, _ = oracles.bcjr_enumeration(cfg.interleavers[1].invert(llr[1]),
                                            CC2.taps.tolist(), k)
        assert np.allclose(posts[1], want2, atol=1e-9)


def test_silent_relay_equals_point_to_point():
    cfg = make_cfg()
    rng = np.random.default_rng(8)
    n0 = 10 ** -0.2
    u, y, amps = transmit_frames(cfg, rng, 200, (0.8, 0.6, 0.0), n0)
    u1, u2, _ = joint_decode(y, amps, n0, cfg)
    p1 = decode_point_to_point(y[0], amps[:, 0], n0, CC2, cfg.interleavers[0])
    p2 = decode_point_to_point(y[1], amps[:, 1], n0, CC2, cfg.interleavers[1])
    assert np.array_equal(u1, p1) and np.array_equal(u2, p2)


def _relabeling(f, ha, hb):
    """Permutations (p, qidx) with M_ha = P M_hb Q, if any."""
    ma, mb = f.mul_matrix(ha), f.mul_matrix(hb)
    for p in itertools.permutations(range(f.q)):
        for qi in itertools.permutations(range(f.q)):
            if np.array_equal(ma, mb[list(p)][:, list(qi)]):
                return list(p), list(qi)
    return None


def test_equivalent_coefficients_give_identical_decisions():
    # h=(6,6) and h=(3,3) differ only by a relabeling of the bits inside the
    # source and relay tuples; applying it to the interleavers and the relay
    # slot reproduces every decision
    f = make_field(3)
    p, qi = _relabeling(f, 6, 3)
    cfg_a = make_cfg(h=(6, 6))
    rng = np.random.default_rng(9)
    n0 = 10 ** -0.1
    u, y, amps = transmit_frames(cfg_a, rng, 100, (0.9, 0.7, 1.5), n0)
    ua = joint_decode(y, amps, n0, cfg_a)[:2]

    n = cfg_a.n
    # x_b[3j + qi[i]] = x_a[3j + i] realises the column permutation
    src_map = (np.arange(n).reshape(-1, 3)[:, np.argsort(qi)]).ravel()
    pis = []
    for pi in cfg_a.interleavers:
        perm = pi.perm[src_map]
        pis.append(SpreadInterleaver(pi.n, 1, pi.seed, perm, np.argsort(perm)))
    cfg_b = DecoderConfig(f, cfg_a.codes, tuple(pis), NcCoefficients(3, 3))
    # relay bits of system b: r_b = P^-1 r_a, i.e. r_a[i] = r_b[p[i]] -> r_b[p[i]] = r_a[i]
    relay_map = np.empty(3, int)
    relay_map[p] = np.arange(3)
    rmap = (np.arange(n).reshape(-1, 3)[:, relay_map]).ravel()
    yb = (y[0][:, src_map], y[1][:, src_map], y[2][:, rmap])
    ub = joint_decode(yb, amps, n0, cfg_b)[:2]
    assert np.array_equal(ua[0], ub[0]) and np.array_equal(ua[1], ub[1])


def test_deterministic_and_parallel_schedule():
    rng = np.random.default_rng(10)
    cfg = make_cfg(schedule="parallel", code=CC6)
    u, y, amps = transmit_frames(cfg, rng, 20, (0.7, 0.9, 2.0), 10 ** -0.1)
    a = joint_decode(y, amps, 10 ** -0.1, cfg)
    b = joint_decode(y, amps, 10 ** -0.1, cfg)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.array_equal(a[2].mi, b[2].mi)


def test_diagnostics_csv():
    cfg = make_cfg(iterations=3)
    rng = np.random.default_rng(11)
    u, y, amps = transmit_frames(cfg, rng, 2, (1, 1, 1), 0.5)
    _, _, diag = joint_decode(y, amps, 0.5, cfg)
    buf = io.StringIO()
    diag.to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "frame,iteration,mi_source1,mi_source2"
    assert len(lines) == 1 + 2 * 3
    assert np.all((diag.mi >= 0) & (diag.mi <= 1))


def test_config_validation():
    with pytest.raises(ValueError):
        make_cfg(iterations=0)
    with pytest.raises(ValueError):
        make_cfg(schedule="random")
    with pytest.raises(ValueError):
        DecoderConfig(make_field(3), (CC2, CC2), (generate(102, 3, 1), generate(114, 3, 1)),
                      NcCoefficients(1, 1))
    cfg = make_cfg()
    with pytest.raises(ValueError):
        decode_llrs([np.zeros(101), np.zeros(102), np.zeros(102)], cfg)
