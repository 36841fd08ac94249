"""EXIT-chart measurements and network-coefficient selection.

A-priori messages follow the consistent Gaussian LLR model
``L ~ N(b * sigma^2 / 2, sigma^2)`` with ``b = +-1`` the true bit, and
extrinsic mutual information is estimated by the time average
``1 - mean(log2(1 + exp(-b * L)))``.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .channel import SCENARIOS, bit_llr, draw_fading, snr_to_n0
from .convcode import ConvCodeSpec, bcjr, encode
from .decoder import nc_node_update
from .gf import FieldContext
from .relay import NcCoefficients


# ---------------------------------------------------------------------------
# J function


@lru_cache(maxsize=4096)
def _j_scalar(sigma: float) -> float:
    if sigma <= 0:
        return 0.0
    if sigma > 60:
        return 1.0
    mu, var = sigma ** 2 / 2, sigma ** 2

    def integrand(x):
        pdf = math.exp(-(x - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
        return pdf * np.logaddexp(0.0, -x) / math.log(2)

    lo, hi = mu - 12 * sigma, mu + 12 * sigma
    val, _ = integrate.quad(integrand, lo, hi, points=[0.0] if lo < 0 < hi else None,
                            limit=200, epsabs=1e-12, epsrel=1e-10)
    return min(max(1.0 - val, 0.0), 1.0)


def j_function(sigma):
    """MI between a uniform bit and a consistent Gaussian LLR of std ``sigma``."""
    if np.ndim(sigma) == 0:
        return _j_scalar(float(sigma))
    return np.vectorize(lambda s: _j_scalar(float(s)))(sigma)


def j_inverse(mi: float, tol: float = 1e-7) -> float:
    """Inverse of :func:`j_function` on ``[0, 1)`` by bracketing root search."""
    if not 0 <= mi < 1:
        raise ValueError("mutual information must lie in [0, 1)")
    if mi == 0:
        return 0.0
    hi = 1.0
    while _j_scalar(hi) < mi:
        hi *= 2
    return optimize.brentq(lambda s: _j_scalar(s) - mi, 0.0, hi, xtol=tol)


def gaussian_apriori(bits, mi: float, noise):
    """A-priori LLRs with mutual information ``mi`` about ``bits``.

    ``noise`` is a standard-normal array of the same shape (kept separate
    so that several ``mi`` values can share one draw).  ``mi == 1`` gives
    infinite, correctly signed LLRs.
    """
    b = 2.0 * np.asarray(bits) - 1.0
    if mi >= 1:
        return b * np.inf
    sigma = j_inverse(mi)
    return b * sigma ** 2 / 2 + sigma * noise


def soft_mi_terms(llr):
    """Truth-free per-bit contributions ``1 - H_b(P(bit))``; unbiased for
    consistent LLRs and of much lower variance than :func:`mi_terms`."""
    a = np.abs(np.asarray(llr, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        p = 1.0 / (1.0 + np.exp(-a))  # probability of the more likely value
        h = np.logaddexp(0.0, -a) / math.log(2) + (1 - p) * a / math.log(2)
    return np.where(np.isinf(a), 1.0, 1.0 - h)


def mi_terms(llr, bits):
    """Per-bit contributions ``1 - log2(1 + exp(-b L))``."""
    b = 2.0 * np.asarray(bits) - 1.0
    with np.errstate(invalid="ignore"):
        t = 1.0 - np.logaddexp(0.0, -b * np.asarray(llr)) / math.log(2)
    return np.where(np.isnan(t), 1.0, t)  # +inf LLR with correct sign


# ---------------------------------------------------------------------------
# transfer curves


@dataclass
class TransferCurve:
    ia: np.ndarray
    ie: np.ndarray
    se: np.ndarray | None = None
    context: dict = dc_field(default_factory=dict)
    samples: np.ndarray | None = None  # (len(ia), n) per-sample MI, when kept

    def __post_init__(self):
        self.ia = np.asarray(self.ia, dtype=float)
        self.ie = np.asarray(self.ie, dtype=float)
        if np.any(np.diff(self.ia) <= 0):
            raise ValueError("a-priori grid must be strictly increasing")

    def __call__(self, x):
        return np.interp(x, self.ia, self.ie)

    def area(self) -> float:
        return float(np.trapezoid(self.ie, self.ia))

    def is_monotone(self, tol: float = 0.01) -> bool:
        return bool(np.all(np.diff(self.ie) >= -tol))

    def rows(self):
        for x, y in zip(self.ia, self.ie):
            yield {**self.context, "x": float(x), "y": float(y)}


def _node_samples(field: FieldContext, h: NcCoefficients, amplitudes, n0, n_nodes, rng):
    """Random check-node uses: true bits and destination channel LLRs.

    ``amplitudes`` has shape (R, 3) (one row per channel realization); the
    returned arrays carry a leading realization axis.
    """
    amplitudes = np.atleast_2d(np.asarray(amplitudes, dtype=float))
    r = amplitudes.shape[0]
    q = field.q
    x1 = rng.integers(0, 2, (r, n_nodes, q))
    x2 = rng.integers(0, 2, (r, n_nodes, q))
    vr = field.mul_table[h.h1, field.pack(x1)[..., 0]] ^ field.mul_table[h.h2, field.pack(x2)[..., 0]]
    xr = field.bits[vr]
    sd = math.sqrt(n0 / 2)
    chan = []
    for j, x in enumerate((x1, x2, xr)):
        a = amplitudes[:, j, None, None]
        y = a * (2.0 * x - 1.0) + sd * rng.standard_normal(x.shape)
        chan.append(bit_llr(y, a, n0))
    return (x1, x2), chan


def _nc_mi(field, h, truth, chan, apriori):
    """Mean extrinsic MI over both sources and its per-node standard error."""
    out = nc_node_update(apriori, chan, field, h.h1, h.h2)
    per_node = 0.5 * (mi_terms(out[0], truth[0]).mean(axis=-1)
                      + mi_terms(out[1], truth[1]).mean(axis=-1))  # (R, n_nodes)
    mean = per_node.mean(axis=-1)
    se = per_node.std(axis=-1, ddof=1) / math.sqrt(per_node.shape[-1])
    return mean, se, per_node


def measure_nc_transfer(field: FieldContext, h, amplitudes=(1.0, 1.0, 1.0), n0: float = 1.0,
                        ia_grid=None, n_samples: int = 10_000, rng=None,
                        min_samples: int = 1000, keep_samples: bool = False) -> TransferCurve:
    """Transfer curve of the network check node for one channel realization.

    ``amplitudes`` are the received amplitudes of the 1-D, 2-D and R-D links
    (all ones for AWGN at the reference gain).  All grid points share one set
    of bits, channel noise and a-priori noise, so curves for different ``h``
    measured with the same ``rng`` seed use common random numbers.  With
    ``keep_samples`` the per-node MI values are stored on the curve, which
    allows paired standard errors between such curves.
    """
    h = NcCoefficients(*h).validate(field)
    rng = np.random.default_rng(rng)
    ia_grid = np.linspace(0, 1, 11) if ia_grid is None else np.asarray(ia_grid, dtype=float)
    truth, chan = _node_samples(field, h, np.asarray(amplitudes)[None, :], n0, n_samples, rng)
    noise = [rng.standard_normal(t.shape) for t in truth]
    ie, se, kept = [], [], []
    for ia in ia_grid:
        apriori = [gaussian_apriori(truth[m], ia, noise[m]) for m in range(2)]
        mean, err, per_node = _nc_mi(field, h, truth, chan, apriori)
        ie.append(float(mean[0]))
        se.append(float(err[0]))
        kept.append(per_node[0])
    ctx = {"node": "NC", "q": field.q, "h1": h.h1, "h2": h.h2,
           "amplitudes": [float(a) for a in amplitudes], "n0": float(n0),
           "n_samples": int(n_samples), "estimator": "time-average"}
    if n_samples < min_samples:
        ctx["warning"] = f"n_samples={n_samples} below {min_samples}; wide confidence intervals"
        warnings.warn(ctx["warning"], RuntimeWarning, stacklevel=2)
    return TransferCurve(ia_grid, np.array(ie), np.array(se), ctx,
                         np.array(kept) if keep_samples else None)


def measure_cc_transfer(spec: ConvCodeSpec, ia_grid=None, n_samples: int = 100_000, rng=None,
                        k: int = 32, min_samples: int = 10_000,
                        estimator: str = "time-average") -> TransferCurve:
    """Transfer curve of a convolutional decoder fed only with coded-bit priors.

    ``n_samples`` counts coded bits; frames of ``k`` information bits are
    drawn until the count is reached.  ``estimator`` is ``"time-average"``
    (uses the true bits) or ``"soft"`` (see :func:`soft_mi_terms`).
    """
    if estimator not in ("time-average", "soft"):
        raise ValueError("estimator must be 'time-average' or 'soft'")
    rng = np.random.default_rng(rng)
    ia_grid = np.linspace(0, 1, 11) if ia_grid is None else np.asarray(ia_grid, dtype=float)
    n = spec.coded_length(k)
    frames = max(1, -(-n_samples // n))
    u = rng.integers(0, 2, (frames, k))
    c = encode(u, spec)
    noise = rng.standard_normal(c.shape)
    ie, se = [], []
    for ia in ia_grid:
        prior = gaussian_apriori(c, ia, noise)
        _, ext = bcjr(prior, spec)
        terms = mi_terms(ext, c) if estimator == "time-average" else soft_mi_terms(ext)
        per_frame = terms.mean(axis=-1)
        ie.append(float(per_frame.mean()))
        se.append(float(per_frame.std(ddof=1) / math.sqrt(frames)) if frames > 1 else float("nan"))
    ctx = {"node": "CC", "code": spec.name, "k": k, "n_samples": int(frames * n),
           "estimator": estimator}
    if frames * n < min_samples:
        ctx["warning"] = f"n_samples={frames * n} below {min_samples}; wide confidence intervals"
        warnings.warn(ctx["warning"], RuntimeWarning, stacklevel=2)
    return TransferCurve(ia_grid, np.array(ie), np.array(se), ctx)


# ---------------------------------------------------------------------------
# crossing classification


@dataclass(frozen=True)
class Crossing:
    kind: str  # "open", "early" or "late"
    value: float  # I_e of the convolutional decoder where the trajectory stalls


def classify_crossing(nc: TransferCurve, cc: TransferCurve, open_threshold: float = 0.999,
                      max_steps: int = 100_000, tol: float = 1e-10) -> Crossing:
    """Follow the decoding trajectory between the two curves.

    The network node starts without a-priori information; its output is the
    convolutional decoder's input and vice versa.  The trajectory stalls at
    the first intersection.
    """
    i_cc = 0.0
    for _ in range(max_steps):
        i_nc = float(nc(i_cc))
        nxt = float(cc(i_nc))
        if nxt >= open_threshold:
            return Crossing("open", nxt)
        if nxt <= i_cc + tol:
            i_cc = max(i_cc, nxt)
            break
        i_cc = nxt
    if i_cc >= open_threshold:
        return Crossing("open", i_cc)
    return Crossing("early" if i_cc <= 0.5 else "late", i_cc)


# ---------------------------------------------------------------------------
# endpoint statistics over fading


@dataclass
class EndpointSamples:
    """Per-realization ``T(0)``, ``T(1)`` for one coefficient pair."""

    h: NcCoefficients
    t0: np.ndarray
    t1: np.ndarray
    alphas: np.ndarray  # (R, 3)

    def cdf(self, which: int, grid):
        t = self.t0 if which == 0 else self.t1
        return np.searchsorted(np.sort(t), np.asarray(grid), side="right") / t.size

    def sorted(self, which: int) -> np.ndarray:
        return np.sort(self.t0 if which == 0 else self.t1)


def endpoint_samples(field: FieldContext, h, relay_gain_db: float, snr_db: float,
                     n_realizations: int = 500, n_nodes: int = 500, rng=None,
                     chunk: int = 50) -> EndpointSamples:
    """``T(0)`` and ``T(1)`` for independent Rayleigh realizations of all three
    destination links.  The same seed reproduces the same fading and noise for
    every ``h`` (common random numbers)."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    h = NcCoefficients(*h).validate(field)
    rng = np.random.default_rng(rng)
    alphas = draw_fading(rng, (n_realizations, 3))
    gains = np.array([1.0, 1.0, 10 ** (relay_gain_db / 20)])
    amps = alphas * gains
    n0 = float(snr_to_n0(snr_db))
    t0 = np.empty(n_realizations)
    t1 = np.empty(n_realizations)
    for start in range(0, n_realizations, chunk):
        sl = slice(start, min(start + chunk, n_realizations))
        truth, chan = _node_samples(field, h, amps[sl], n0, n_nodes, rng)
        none = [np.zeros(t.shape) for t in truth]
        full = [(2.0 * t - 1.0) * np.inf for t in truth]
        t0[sl] = _nc_mi(field, h, truth, chan, none)[0]
        t1[sl] = _nc_mi(field, h, truth, chan, full)[0]
    return EndpointSamples(h, t0, t1, alphas)


def endpoint_cdf(field: FieldContext, h, scenario="C", snr_db: float = 0.0,
                 n_realizations: int = 500, rng=None, n_nodes: int = 500):
    """Empirical CDFs of ``T(0)`` and ``T(1)``: sorted samples and levels."""
    if n_realizations < 100:
        raise ValueError("endpoint CDFs need at least 100 realizations")
    gain = SCENARIOS[scenario] if isinstance(scenario, str) else float(scenario)
    s = endpoint_samples(field, h, gain, snr_db, n_realizations, n_nodes, rng)
    levels = np.arange(1, n_realizations + 1) / n_realizations
    return {"t0": s.sorted(0), "t1": s.sorted(1), "cdf": levels, "samples": s}


# ---------------------------------------------------------------------------
# coefficient selection


def _pair_signature(field: FieldContext, h1: int, h2: int):
    """Canonical form of the node code under bit permutations and source swap."""
    m1, m2 = field.mul_matrix(h1), field.mul_matrix(h2)
    best = None
    for perm in itertools.permutations(range(field.q)):
        rows = list(perm)
        for a, b in ((m1, m2), (m2, m1)):
            # column order within a source is free, so sort the columns
            ca = tuple(sorted(tuple(col) for col in a[rows].T))
            cb = tuple(sorted(tuple(col) for col in b[rows].T))
            sig = (ca, cb)
            if best is None or sig < best:
                best = sig
    return best


def equivalence_classes(field: FieldContext) -> list[list[tuple[int, int]]]:
    """Group canonical pairs whose check-node codes coincide up to relabeling
    of bits inside each q-tuple and swapping the sources."""
    groups: dict = {}
    for pair in field.canonical_pairs():
        groups.setdefault(_pair_signature(field, *pair), []).append(pair)
    return sorted(groups.values())


@dataclass
class SelectionResult:
    h_star_0: NcCoefficients
    h_star_1: NcCoefficients
    snr_th: float | None  # None: undefined (a single candidate), +-inf: outside the swept range
    class_0: list[tuple[int, int]] = dc_field(default_factory=list)
    class_1: list[tuple[int, int]] = dc_field(default_factory=list)
    dominance_0: bool = True
    dominance_1: bool = True
    evidence: dict = dc_field(default_factory=dict)

    def to_json(self, **kw) -> str:
        def enc(x):
            if isinstance(x, float) and not math.isfinite(x):
                return "inf" if x > 0 else "-inf"
            return x

        doc = {
            "h_star_0": [self.h_star_0.h1, self.h_star_0.h2],
            "h_star_1": [self.h_star_1.h1, self.h_star_1.h2],
            "snr_th": enc(self.snr_th),
            "class_0": [list(p) for p in self.class_0],
            "class_1": [list(p) for p in self.class_1],
            "dominance_0": self.dominance_0,
            "dominance_1": self.dominance_1,
            "evidence": _jsonable(self.evidence),
        }
        return json.dumps(doc, **kw)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    return x


def pick_best(samples: dict, which: int, grid=None, tie_se: float = 2.0):
    """Choose the pair minimising ``P{T < x}`` for all ``x``.

    ``samples`` maps pairs to :class:`EndpointSamples` drawn with common
    random numbers.  Returns ``(pair, dominant, tied)``: ``dominant`` tells
    whether the winner's CDF lies below every other CDF on ``grid``;
    otherwise the pair with the largest mean endpoint is chosen.  ``tied``
    lists pairs whose mean is within ``tie_se`` paired standard errors of the
    winner.
    """
    grid = np.linspace(0, 1, 201) if grid is None else grid
    pairs = list(samples)
    vals = {p: (samples[p].t0 if which == 0 else samples[p].t1) for p in pairs}
    means = {p: float(vals[p].mean()) for p in pairs}
    cdfs = {p: samples[p].cdf(which, grid) for p in pairs}
    best = max(pairs, key=lambda p: means[p])
    dominant = all(np.all(cdfs[best] <= cdfs[p] + 1e-12) for p in pairs)
    tied = []
    for p in pairs:
        diff = vals[best] - vals[p]
        se = diff.std(ddof=1) / math.sqrt(diff.size) if diff.size > 1 else 0.0
        if means[best] - means[p] <= tie_se * se:
            tied.append(p)
    return best, dominant, tied


def select_coefficients(field: FieldContext, code: ConvCodeSpec, scenario="C",
                        snr_db: float = 0.0, n_realizations: int = 500, n_nodes: int = 500,
                        seed: int = 0, estimate_threshold: bool = True, sweep_kwargs=None):
    """Pick the pairs optimising ``T(1)`` and ``T(0)`` and locate the SNR at
    which the former starts to win.

    Pairs with identical check-node codes up to relabeling are evaluated once
    (first member of each class).  Among pairs statistically tied on the
    primary endpoint, the other endpoint breaks the tie.  The reported
    representative of the winning class is its largest member in
    lexicographic order; the whole class is listed in the result.
    """
    gain = SCENARIOS[scenario] if isinstance(scenario, str) else float(scenario)
    classes = equivalence_classes(field)
    reps = {cls[0]: cls for cls in classes}
    samples = {p: endpoint_samples(field, p, gain, snr_db, n_realizations, n_nodes, rng=seed)
               for p in reps}

    chosen = {}
    flags = {}
    for which in (1, 0):
        best, dominant, tied = pick_best(samples, which)
        if len(tied) > 1:
            other = 1 - which
            best = max(tied, key=lambda p: float((samples[p].t0 if other == 0
                                                  else samples[p].t1).mean()))
        chosen[which] = best
        flags[which] = dominant
    cls0, cls1 = reps[chosen[0]], reps[chosen[1]]
    h0 = NcCoefficients(*max(cls0))
    h1 = NcCoefficients(*max(cls1))
    evidence = {
        "scenario": scenario, "relay_gain_db": gain, "snr_db": snr_db,
        "n_realizations": n_realizations, "n_nodes": n_nodes, "seed": seed,
        "mean_t0": {f"{p[0]},{p[1]}": float(s.t0.mean()) for p, s in samples.items()},
        "mean_t1": {f"{p[0]},{p[1]}": float(s.t1.mean()) for p, s in samples.items()},
        "classes": [[list(p) for p in c] for c in classes],
    }

    snr_th = None
    if h0.canonical() != h1.canonical() and estimate_threshold:
        from .harness import SimConfig, estimate_threshold as _est
        kw = dict(sweep_kwargs or {})
        grid = kw.pop("snr_grid_db", [0.0, 2.0, 4.0, 6.0, 8.0])
        base = SimConfig(q=field.q, code=code.name, scenario=scenario if isinstance(scenario, str)
                         else None, relay_gain_db=None if isinstance(scenario, str) else gain,
                         snr_grid_db=list(grid), seed=seed, **kw)
        snr_th, sweeps = _est(base, h0, h1)
        evidence["per_sweeps"] = sweeps
    return SelectionResult(h0, h1, snr_th, cls0, cls1, flags[0], flags[1], evidence)
