"""Monte Carlo packet-error-rate simulation of the two-source relay network.

Every frame draws its payloads, fading amplitudes and (unit-variance) noise
from a generator seeded by ``(seed, frame_index)`` in a fixed order, whatever
the coefficients, SNR or relay mode.  Sweeps over any of those therefore use
common random numbers, and adding frames never changes earlier ones.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np
from scipy.stats import binomtest

from .channel import SCENARIOS, draw_fading, ebn0_db, snr_to_n0
from .convcode import CODES, InvalidSoftInput, encode
from .decoder import DecoderConfig, decode_point_to_point, joint_decode
from .gf import make_field
from .interleave import generate
from .relay import CRC_BITS, NcCoefficients, RelayMode, append_crc, padded_length, relay_process

CSV_COLUMNS = ["scenario", "q", "h1", "h2", "code", "relay_mode", "snr_db", "ebn0_db",
               "frames", "frame_errors", "per", "ci_lo", "ci_hi", "seed", "censored", "aborted"]

# link order inside a frame: two source-destination links, relay-destination,
# two source-relay links
LINKS = ("1D", "2D", "RD", "1R", "2R")


class ConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass(frozen=True)
class SimConfig:
    k: int = 32
    q: int = 3
    code: str = "CC2"
    h: tuple[int, int] = (6, 6)
    scenario: str | None = "C"
    relay_gain_db: float | None = None  # overrides the scenario when set
    source_relay_gain_db: float | None = None  # defaults to the relay gain
    iterations: int = 15
    schedule: str = "serial"
    relay_mode: str = "ideal"
    snr_grid_db: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0)
    target_errors: int = 100
    min_frames: int = 0
    max_frames: int = 1_000_000
    batch_size: int = 500
    seed: int = 0
    interleaver_seed: int | None = None  # defaults to ``seed``

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(int(v) for v in self.h))
        object.__setattr__(self, "snr_grid_db", tuple(float(v) for v in self.snr_grid_db))
        try:
            self.validate()
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        if self.k < 1:
            raise ConfigError("k must be positive")
        if self.code not in CODES:
            raise ConfigError(f"code must be one of {sorted(CODES)}")
        if len(self.h) != 2:
            raise ConfigError("h must be a pair")
        NcCoefficients(*self.h).validate(make_field(self.q))
        if self.relay_gain_db is None and self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {sorted(SCENARIOS)} or set relay_gain_db")
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        RelayMode(self.relay_mode)
        if self.relay_mode == RelayMode.RSI_CRC and self.k <= CRC_BITS:
            raise ConfigError("rsi_crc needs k larger than the CRC")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must not be empty")
        if self.target_errors < 1 or self.max_frames < 1 or self.batch_size < 1:
            raise ConfigError("stop rule values must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    @property
    def relay_gain(self) -> float:
        return float(self.relay_gain_db if self.relay_gain_db is not None
                     else SCENARIOS[self.scenario])

    @property
    def source_relay_gain(self) -> float:
        return float(self.source_relay_gain_db if self.source_relay_gain_db is not None
                     else self.relay_gain)

    @property
    def scenario_label(self) -> str:
        return self.scenario if self.relay_gain_db is None else f"custom({self.relay_gain:g}dB)"

    def replace(self, **kw) -> "SimConfig":
        d = self.to_dict()
        d.update(kw)
        return SimConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h"] = list(self.h)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)


@dataclass(frozen=True)
class _Context:
    """Everything derived from the configuration that does not vary per frame."""

    cfg: SimConfig
    dec: DecoderConfig
    k_payload: int

    @property
    def n(self) -> int:
        return self.dec.n


@lru_cache(maxsize=32)
def _context(cfg: SimConfig) -> _Context:
    f = make_field(cfg.q)
    code = CODES[cfg.code]
    n = code.coded_length(cfg.k)
    base = cfg.seed if cfg.interleaver_seed is None else cfg.interleaver_seed
    pis = tuple(generate(n, cfg.q, np.random.SeedSequence([base, m]).generate_state(1)[0])
                for m in range(2))
    dec = DecoderConfig(f, (code, code), pis, NcCoefficients(*cfg.h), cfg.iterations, cfg.schedule)
    k_payload = cfg.k - CRC_BITS if cfg.relay_mode == RelayMode.RSI_CRC else cfg.k
    return _Context(cfg, dec, k_payload)


@dataclass
class FrameDraws:
    """Random inputs of a batch of frames, independent of SNR and coefficients."""

    payload: np.ndarray  # (B, 2, k_payload)
    alpha: np.ndarray  # (B, 5) in LINKS order
    noise: dict  # link -> (B, length) standard normal

    def swapped(self) -> "FrameDraws":
        sw = {"1D": "2D", "2D": "1D", "1R": "2R", "2R": "1R", "RD": "RD"}
        order = [LINKS.index(sw[name]) for name in LINKS]
        return FrameDraws(self.payload[:, ::-1], self.alpha[:, order],
                          {sw[name]: z for name, z in self.noise.items()})


def draw_frames(cfg: SimConfig, frame_ids) -> FrameDraws:
    ctx = _context(cfg)
    n, n_pad = ctx.n, padded_length(ctx.n, cfg.q)
    lengths = {"1D": n, "2D": n, "RD": n_pad, "1R": n, "2R": n}
    payload, alpha = [], []
    noise = {name: [] for name in LINKS}
    for i in np.asarray(frame_ids).ravel():
        rng = np.random.default_rng([cfg.seed, int(i)])
        payload.append(rng.integers(0, 2, (2, ctx.k_payload)))
        alpha.append(draw_fading(rng, len(LINKS)))
        for name in LINKS:
            noise[name].append(rng.standard_normal(lengths[name]))
    return FrameDraws(np.array(payload).reshape(-1, 2, ctx.k_payload),
                      np.array(alpha).reshape(-1, len(LINKS)),
                      {name: np.array(z).reshape(-1, lengths[name]) for name, z in noise.items()})


@dataclass
class BatchOutcome:
    errors: np.ndarray  # (B,) frame error flags (aborted frames are False)
    aborted: np.ndarray  # (B,)
    rsi_flags: np.ndarray  # (B, 2)
    diagnostics: list = field(default_factory=list)


def simulate_batch(cfg: SimConfig, snr_db: float, draws: FrameDraws,
                   swap_sources: bool = False, baseline: bool = False) -> BatchOutcome:
    """Transmit, relay and decode one batch of frames at one SNR.

    With ``swap_sources`` the two sources exchange payloads, links and
    interleavers (pair the call with a swapped ``h``).  ``baseline`` ignores
    the relay and decodes each source on its own direct link.
    """
    ctx = _context(cfg)
    dec = ctx.dec
    if swap_sources:
        draws = draws.swapped()
        dec = DecoderConfig(dec.field, dec.codes[::-1], dec.interleavers[::-1], dec.h,
                            dec.iterations, dec.schedule)
    n0 = float(snr_to_n0(snr_db))
    sigma = math.sqrt(n0 / 2)
    gains = np.array([0.0, 0.0, cfg.relay_gain, cfg.source_relay_gain, cfg.source_relay_gain])
    amps = draws.alpha * 10 ** (gains / 20)

    info = draws.payload
    if cfg.relay_mode == RelayMode.RSI_CRC:
        info = append_crc(info)
    codewords = [encode(info[:, m], dec.codes[m]) for m in range(2)]
    x = [dec.interleavers[m].apply(codewords[m]) for m in range(2)]
    s = [2.0 * xm - 1.0 for xm in x]

    def rx(name, sym):
        j = LINKS.index(name)
        return amps[:, j, None] * sym + sigma * draws.noise[name]

    if baseline:
        u1, u2 = (decode_point_to_point(rx(name, s[m]), amps[:, m], n0, dec.codes[m],
                                        dec.interleavers[m]) for m, name in enumerate(("1D", "2D")))
        err = np.any(u1 != info[:, 0], axis=-1) | np.any(u2 != info[:, 1], axis=-1)
        return BatchOutcome(err, np.zeros(len(amps), bool), np.zeros((len(amps), 2), bool))

    y_relay = (rx("1R", s[0]), rx("2R", s[1]))
    s_r, flags = relay_process(y_relay[0], y_relay[1], (amps[:, 3], amps[:, 4]), n0,
                               dec.codes, dec.interleavers, dec.field, dec.h, cfg.relay_mode,
                               true_codewords=codewords)
    y = (rx("1D", s[0]), rx("2D", s[1]), rx("RD", s_r))
    rsi = flags if RelayMode(cfg.relay_mode).uses_rsi else None
    try:
        u1, u2, _ = joint_decode(y, amps[:, :3], n0, dec, rsi_flags=rsi)
        aborted = np.zeros(len(amps), bool)
    except InvalidSoftInput:
        # isolate the offending frames
        u1 = np.zeros_like(info[:, 0])
        u2 = np.zeros_like(info[:, 1])
        aborted = np.zeros(len(amps), bool)
        for b in range(len(amps)):
            try:
                r = joint_decode(tuple(v[b] for v in y), amps[b, :3], n0, dec,
                                 rsi_flags=None if rsi is None else rsi[b])
                u1[b], u2[b] = r[0], r[1]
            except InvalidSoftInput:
                aborted[b] = True
    err = np.any(u1 != info[:, 0], axis=-1) | np.any(u2 != info[:, 1], axis=-1)
    return BatchOutcome(err & ~aborted, aborted, flags)


def run_frame(cfg: SimConfig, frame_seed: int, snr_db: float | None = None) -> dict:
    """Outcome of a single frame (first grid SNR unless given)."""
    snr = cfg.snr_grid_db[0] if snr_db is None else snr_db
    out = simulate_batch(cfg, snr, draw_frames(cfg, [frame_seed]))
    return {"frame": int(frame_seed), "snr_db": float(snr), "error": bool(out.errors[0]),
            "aborted": bool(out.aborted[0]), "rsi_flags": out.rsi_flags[0].tolist()}


@dataclass
class PointResult:
    snr_db: float
    frames: int
    frame_errors: int
    aborted: int
    censored: bool
    wall_time: float = 0.0

    def __post_init__(self):
        if not 0 <= self.frame_errors <= self.frames:
            raise ValueError("frame errors must lie in [0, frames]")

    @property
    def per(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.frame_errors, self.frames)


def wilson_interval(errors: int, frames: int, level: float = 0.95) -> tuple[float, float]:
    if frames == 0:
        return 0.0, 1.0
    ci = binomtest(errors, frames).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SimResult:
    config: SimConfig
    points: list[PointResult]
    swap_sources: bool = False
    baseline: bool = False

    def rows(self) -> list[dict]:
        c = self.config
        out = []
        for p in self.points:
            lo, hi = p.ci
            out.append({
                "scenario": c.scenario_label, "q": c.q, "h1": c.h[0], "h2": c.h[1],
                "code": c.code, "relay_mode": "none" if self.baseline else c.relay_mode,
                "snr_db": f"{p.snr_db:g}",
                "ebn0_db": f"{float(ebn0_db(p.snr_db)):.4f}", "frames": p.frames,
                "frame_errors": p.frame_errors, "per": f"{p.per:.6e}", "ci_lo": f"{lo:.6e}",
                "ci_hi": f"{hi:.6e}", "seed": c.seed, "censored": int(p.censored),
                "aborted": p.aborted,
            })
        return out

    def to_csv(self, path_or_file=None, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
        if header:
            w.writeheader()
        w.writerows(self.rows())
        text = buf.getvalue()
        if path_or_file is not None:
            if hasattr(path_or_file, "write"):
                path_or_file.write(text)
            else:
                with open(path_or_file, "w", newline="") as fh:
                    fh.write(text)
        return text

    def metadata(self) -> dict:
        """Run details that are not part of the reproducible data rows."""
        return {"config": self.config.to_dict(), "swap_sources": self.swap_sources,
                "wall_time_s": {f"{p.snr_db:g}": round(p.wall_time, 3) for p in self.points},
                "finished": time.strftime("%Y-%m-%dT%H:%M:%S")}


def _batch_errors(args):
    cfg, snr, start, stop, swap, baseline = args
    out = simulate_batch(cfg, snr, draw_frames(cfg, np.arange(start, stop)), swap, baseline)
    return int(out.errors.sum()), int(out.aborted.sum())


def run_point(cfg: SimConfig, snr_db: float, swap_sources: bool = False,
              executor=None, baseline: bool = False) -> PointResult:
    """Simulate whole batches until the stop rule fires.

    The rule is checked after each batch in frame order, so the result does
    not depend on how many batches ran concurrently.
    """
    t = time.perf_counter()
    bs = cfg.batch_size
    frames = errors = aborted = 0
    width = getattr(executor, "_max_workers", 1) if executor is not None else 1
    nxt = 0
    done = False
    while not done:
        starts = [nxt + j * bs for j in range(width)]
        starts = [s for s in starts if s < cfg.max_frames]
        tasks = [(cfg, snr_db, s, min(s + bs, cfg.max_frames), swap_sources, baseline)
                 for s in starts]
        results = (executor.map(_batch_errors, tasks) if executor is not None
                   else map(_batch_errors, tasks))
        for (_, _, s, e, _, _), (ne, na) in zip(tasks, results):
            if done:
                break
            frames += e - s - na
            errors += ne
            aborted += na
            nxt = e
            if ((errors >= cfg.target_errors and frames >= cfg.min_frames)
                    or nxt >= cfg.max_frames):
                done = True
        if not starts:
            done = True
    censored = errors < cfg.target_errors
    return PointResult(float(snr_db), frames, errors, aborted, censored,
                       time.perf_counter() - t)


def run_per_sweep(cfg: SimConfig, swap_sources: bool = False, threads: int = 1,
                  baseline: bool = False) -> SimResult:
    """PER at every grid SNR.  ``baseline`` replaces the relay network by two
    independent point-to-point links (reported with relay mode ``none``)."""
    _context(cfg)
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            pts = [run_point(cfg, s, swap_sources, ex, baseline) for s in cfg.snr_grid_db]
    else:
        pts = [run_point(cfg, s, swap_sources, None, baseline) for s in cfg.snr_grid_db]
    return SimResult(cfg, pts, swap_sources, baseline)


def run_coefficient_scan(cfg: SimConfig, threads: int = 1) -> list[SimResult]:
    """PER sweeps for every canonical pair ``h1 <= h2`` on shared frames."""
    f = make_field(cfg.q)
    return [run_per_sweep(cfg.replace(h=list(p)), threads=threads) for p in f.canonical_pairs()]


def find_crossing(snr, per_low, per_high) -> float:
    """SNR at which ``per_high`` drops below ``per_low``.

    Interpolates ``log(per_high / per_low)`` linearly between the last grid
    point where the high-SNR candidate is not better and the next one.
    Returns ``-inf`` if it is better everywhere and ``+inf`` if nowhere.
    Zero counts are floored at half an error to keep the logarithm finite.
    """
    snr = np.asarray(snr, dtype=float)
    lo = np.maximum(np.asarray(per_low, dtype=float), 1e-12)
    hi = np.maximum(np.asarray(per_high, dtype=float), 1e-12)
    d = np.log(hi) - np.log(lo)
    better = d < 0
    if better.all():
        return float("-inf")
    if not better[-1]:
        return float("inf")
    # last point where the high-SNR candidate is not better
    i = int(np.flatnonzero(~better)[-1])
    x0, x1, d0, d1 = snr[i], snr[i + 1], d[i], d[i + 1]
    return float(x0 + (x1 - x0) * d0 / (d0 - d1)) if d0 != d1 else float(x0)


def _floored_per(p: PointResult) -> float:
    return max(p.frame_errors, 0.5) / p.frames


def estimate_threshold(base: SimConfig, h0, h1, threads: int = 1):
    """Sweep ``h0`` and ``h1`` on common frames and locate the PER crossing.

    Returns ``(snr_th, sweeps)`` where ``sweeps`` maps ``"h1,h2"`` labels to
    the CSV rows of each sweep.
    """
    res = {}
    for h in (h0, h1):
        res[tuple(h)] = run_per_sweep(base.replace(h=list(h)), threads=threads)
    r0, r1 = res[tuple(h0)], res[tuple(h1)]
    snr = [p.snr_db for p in r0.points]
    th = find_crossing(snr, [_floored_per(p) for p in r0.points],
                       [_floored_per(p) for p in r1.points])
    sweeps = {f"{h[0]},{h[1]}": r.rows() for h, r in res.items()}
    return th, sweeps
