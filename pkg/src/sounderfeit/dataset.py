"""Corpus extraction: render, reject silence, align, difference, normalize.

Two corpora: *bowed1* sweeps a (pressure, position) grid at steady state;
*bowed2* runs the synth continuously while redrawing parameters at random
intervals, harvesting windows that include transients.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .waveguide import (SAMPLE_RATE, BowParams, loop_delay, render_grid,
                        waveguide_new, waveguide_run)

WINDOW_LEN = 201
DIFF_LEN = WINDOW_LEN - 1
RMS_SILENCE = 1e-5
STD_FLOOR = 1e-8
LAG_SEARCH = 101          # one full period at 476.5 Hz, rounded up
ALIGN_CONTEXT = WINDOW_LEN + LAG_SEARCH

DEFAULT_FREQUENCY = 476.5
DEFAULT_VELOCITY = 100.0
REFERENCE_PRESSURE = 64.0
REFERENCE_POSITION = 32.0

BOWED2_HOP = 2048
BOWED2_INTERVAL_S = (0.1, 1.0)

KIND_CODES = {"bowed1": 1, "bowed2": 2}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}

MAGIC = b"SNDF"
FORMAT_VERSION = 1

# Conditional parameters exposed to the network, in label order.
COND_PARAM_NAMES = ("pressure", "position")


class CorpusError(RuntimeError):
    """Corpus construction produced no usable windows."""


class FormatError(RuntimeError):
    """Corpus file is malformed or has the wrong magic/version."""


def differentiate(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 2:
        raise ValueError("need at least 2 samples to differentiate")
    return np.diff(x, axis=-1)


def integrate_diffs(diffs, x0=0.0):
    """Exact inverse of differentiate: cumulative sum prefixed with x0."""
    diffs = np.asarray(diffs, dtype=np.float64)
    return np.concatenate([[x0], x0 + np.cumsum(diffs)])


def extract_last_two_periods(signal):
    signal = np.asarray(signal)
    if signal.shape[0] < WINDOW_LEN:
        raise ValueError(
            f"signal length {signal.shape[0]} < window length {WINDOW_LEN}")
    return np.array(signal[-WINDOW_LEN:], dtype=np.float64)


def scale_params(raw):
    """Map raw 0-128 controls to [-1, 1]."""
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0) or np.any(raw > 128):
        raise ValueError("raw controls must be within [0, 128]")
    return raw / 64.0 - 1.0


def unscale_params(scaled):
    scaled = np.asarray(scaled, dtype=np.float64)
    return (scaled + 1.0) * 64.0


def window_rms(window):
    w = np.asarray(window, dtype=np.float64)
    w = w - w.mean()
    return float(np.sqrt(np.mean(w * w)))


def phase_align(window, reference, source_tail):
    """Pick the 201-sample cut of source_tail (searching up to one period
    back from the end) that maximizes cross-correlation with reference.

    Returns (aligned de-meaned window, lag).  The input `window` is assumed
    to be the final 201 samples of source_tail.
    """
    tail = np.asarray(source_tail, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if tail.shape[0] < ALIGN_CONTEXT:
        raise ValueError(
            f"source tail must hold >= {ALIGN_CONTEXT} samples, got {tail.shape[0]}")
    n = tail.shape[0]
    best_lag = 0
    best_corr = -np.inf
    for lag in range(LAG_SEARCH):
        cut = tail[n - WINDOW_LEN - lag:n - lag] if lag else tail[n - WINDOW_LEN:]
        cut = cut - cut.mean()
        c = float(np.dot(ref, cut))
        if c > best_corr:
            best_corr = c
            best_lag = lag
    cut = tail[n - WINDOW_LEN - best_lag:n - best_lag] if best_lag \
        else tail[n - WINDOW_LEN:]
    cut = cut - cut.mean()
    return cut, best_lag


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __eq__(self, other):
        return (np.array_equal(self.mean, other.mean)
                and np.array_equal(self.std, other.std))


def fit_norm_stats(diffed):
    """Elementwise mean and population std over a (n, 200) matrix."""
    d = np.asarray(diffed, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] < 2:
        raise CorpusError("need at least 2 windows to fit normalization stats")
    mean = d.mean(axis=0)
    std = d.std(axis=0)
    std = np.maximum(std, STD_FLOOR)
    return NormStats(mean=mean, std=std)


def apply_norm(diffed, stats):
    return (np.asarray(diffed, dtype=np.float64) - stats.mean) / stats.std


def unapply_norm(normalized, stats):
    return np.asarray(normalized, dtype=np.float64) * stats.std + stats.mean


@dataclass
class PeriodWindow:
    raw: np.ndarray          # 201 samples, de-meaned
    diffed: np.ndarray       # 200 first differences
    normalized: np.ndarray   # 200 standardized differences
    params_raw: BowParams
    params_scaled: np.ndarray  # conditional params in [-1, 1]


@dataclass
class Corpus:
    kind: str
    seed: int
    raw: np.ndarray          # (n, 201) float32
    diffed: np.ndarray       # (n, 200) float32
    normalized: np.ndarray   # (n, 200) float32
    params: np.ndarray       # (n, 4) float32: pressure, velocity, position, frequency
    stats: NormStats
    reference_window: np.ndarray  # (201,) float32
    sample_rate: int = SAMPLE_RATE
    window_len: int = WINDOW_LEN

    def __len__(self):
        return self.raw.shape[0]

    def window(self, i):
        p = self.params[i]
        return PeriodWindow(
            raw=self.raw[i],
            diffed=self.diffed[i],
            normalized=self.normalized[i],
            params_raw=BowParams(pressure=float(p[0]), velocity=float(p[1]),
                                 position=float(p[2]), frequency=float(p[3])),
            params_scaled=scale_params(np.array([p[0], p[2]])),
        )

    @property
    def windows(self):
        return [self.window(i) for i in range(len(self))]

    def cond_labels(self, n_cond=2):
        """Scaled conditional labels (pressure, position)[:n_cond] in [-1,1]."""
        raw = np.stack([self.params[:, 0], self.params[:, 2]], axis=1)
        return scale_params(raw.astype(np.float64))[:, :n_cond]

    def training_matrix(self):
        return self.normalized.astype(np.float64)

    def content_hash(self):
        import hashlib
        h = hashlib.sha256()
        for a in (self.raw, self.diffed, self.normalized, self.params,
                  self.stats.mean.astype(np.float32),
                  self.stats.std.astype(np.float32), self.reference_window):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()

    def subset(self, mask):
        """Corpus restricted to windows where mask is True.  Keeps the parent
        normalization stats and reference so models stay comparable."""
        mask = np.asarray(mask, dtype=bool)
        return Corpus(kind=self.kind, seed=self.seed,
                      raw=self.raw[mask], diffed=self.diffed[mask],
                      normalized=self.normalized[mask],
                      params=self.params[mask], stats=self.stats,
                      reference_window=self.reference_window,
                      sample_rate=self.sample_rate, window_len=self.window_len)


def reference_window(frequency=DEFAULT_FREQUENCY, sample_rate=SAMPLE_RATE):
    """Alignment anchor: the steady window at (pressure=64, position=32)."""
    tails, blown = render_grid(np.array([REFERENCE_PRESSURE]),
                               np.array([REFERENCE_POSITION]),
                               velocity=DEFAULT_VELOCITY, frequency=frequency,
                               tail_len=512, sample_rate=sample_rate)
    if blown[0]:
        raise CorpusError("reference render blew up")
    w = extract_last_two_periods(tails[0])
    w = w - w.mean()
    if window_rms(w) <= RMS_SILENCE:
        raise CorpusError("reference render is silent")
    return w


def _assemble(kind, seed, raws, diffs, params, stats, ref):
    norm = np.stack([apply_norm(d, stats) for d in diffs])
    return Corpus(
        kind=kind, seed=seed,
        raw=np.stack(raws).astype(np.float32),
        diffed=np.stack(diffs).astype(np.float32),
        normalized=norm.astype(np.float32),
        params=np.asarray(params, dtype=np.float32),
        stats=stats,
        reference_window=ref.astype(np.float32),
    )


def build_bowed1(grid_step=1, seed=0):
    """Steady-state grid corpus: one render per (pressure, position) pair."""
    if grid_step < 1:
        raise ValueError("grid_step must be >= 1")
    values = np.arange(0, 129, grid_step, dtype=np.float64)
    P, Q = np.meshgrid(values, values, indexing="ij")
    pressures = P.ravel()
    positions = Q.ravel()
    ref = reference_window()
    tails, blown = render_grid(pressures, positions,
                               velocity=DEFAULT_VELOCITY,
                               frequency=DEFAULT_FREQUENCY,
                               tail_len=512)
    raws, diffs, params = [], [], []
    for k in range(len(pressures)):
        if blown[k]:
            continue
        tail = tails[k]
        candidate = extract_last_two_periods(tail)
        candidate = candidate - candidate.mean()
        if window_rms(candidate) <= RMS_SILENCE:
            continue
        aligned, _ = phase_align(candidate, ref, tail)
        raws.append(aligned)
        diffs.append(differentiate(aligned))
        params.append((pressures[k], DEFAULT_VELOCITY, positions[k],
                       DEFAULT_FREQUENCY))
    if not raws:
        raise CorpusError("all grid points were rejected as silent")
    stats = fit_norm_stats(np.stack(diffs))
    return _assemble("bowed1", seed, raws, diffs, params, stats, ref)


def build_bowed2(n_windows, seed=0):
    """Continuous-render corpus with random parameter redraws.

    Windows are harvested every BOWED2_HOP samples of the running stream and
    labeled with the parameters active at the window's first sample; silent
    windows are dropped and the stream continues until n_windows survive.
    """
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    rng = np.random.default_rng(seed)
    ref = reference_window()
    state = waveguide_new(DEFAULT_FREQUENCY)

    raws, diffs, params = [], [], []
    buf = np.zeros(0)
    buf_start = 0            # absolute stream index of buf[0]
    next_harvest = BOWED2_HOP
    # (start_index, pressure, position) of the currently rendering segment
    pressure = float(rng.uniform(0, 128))
    position = float(rng.uniform(0, 128))
    seg_spans = []           # (abs_start, pressure, position)
    abs_pos = 0

    def params_at(t):
        for start, pr, po in reversed(seg_spans):
            if t >= start:
                return pr, po
        return seg_spans[0][1], seg_spans[0][2]

    while len(raws) < n_windows:
        seg_len = int(rng.uniform(*BOWED2_INTERVAL_S) * SAMPLE_RATE)
        seg_spans.append((abs_pos, pressure, position))
        chunk = waveguide_run(state, BowParams(pressure=pressure,
                                               velocity=DEFAULT_VELOCITY,
                                               position=position,
                                               frequency=DEFAULT_FREQUENCY),
                              seg_len)
        abs_pos += seg_len
        buf = np.concatenate([buf, chunk])
        # harvest all windows fully contained in the buffer, with alignment
        # context before them
        while (next_harvest - ALIGN_CONTEXT + WINDOW_LEN >= buf_start
               and next_harvest + WINDOW_LEN <= buf_start + buf.shape[0]
               and len(raws) < n_windows):
            end = next_harvest + WINDOW_LEN - buf_start
            tail = buf[end - ALIGN_CONTEXT:end]
            candidate = tail[-WINDOW_LEN:] - tail[-WINDOW_LEN:].mean()
            if window_rms(candidate) > RMS_SILENCE:
                aligned, _ = phase_align(candidate, ref, tail)
                pr, po = params_at(next_harvest)
                raws.append(aligned)
                diffs.append(differentiate(aligned))
                params.append((pr, DEFAULT_VELOCITY, po, DEFAULT_FREQUENCY))
            next_harvest += BOWED2_HOP
        # trim consumed samples, keeping alignment context
        keep_from = max(0, next_harvest - ALIGN_CONTEXT - buf_start)
        if keep_from > 0:
            buf = buf[keep_from:]
            buf_start += keep_from
        # drop stale spans (keep one span before the oldest retained sample)
        while len(seg_spans) > 1 and seg_spans[1][0] <= buf_start:
            seg_spans.pop(0)
        pressure = float(rng.uniform(0, 128))
        position = float(rng.uniform(0, 128))
    if not raws:
        raise CorpusError("no non-silent windows harvested")
    stats = fit_norm_stats(np.stack(diffs))
    return _assemble("bowed2", seed, raws, diffs, params, stats, ref)


def build_corpus(kind, seed=0, grid_step=1, n_windows=None):
    if kind == "bowed1":
        return build_bowed1(grid_step=grid_step, seed=seed)
    if kind == "bowed2":
        if n_windows is None:
            raise ValueError("bowed2 requires n_windows")
        return build_bowed2(n_windows, seed=seed)
    raise ValueError(f"unknown corpus kind {kind!r}")


_HEADER = struct.Struct("<4sIBQIII")


def save_corpus(corpus, path):
    n = len(corpus)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, KIND_CODES[corpus.kind],
                             corpus.seed, n, corpus.window_len,
                             len(COND_PARAM_NAMES)))
        f.write(corpus.stats.mean.astype("<f4").tobytes())
        f.write(corpus.stats.std.astype("<f4").tobytes())
        f.write(corpus.reference_window.astype("<f4").tobytes())
        for i in range(n):
            f.write(corpus.raw[i].astype("<f4").tobytes())
            f.write(corpus.diffed[i].astype("<f4").tobytes())
            f.write(corpus.normalized[i].astype("<f4").tobytes())
            f.write(corpus.params[i].astype("<f4").tobytes())


def _read_exact(f, n):
    b = f.read(n)
    if len(b) != n:
        raise FormatError("truncated corpus file")
    return b


def load_corpus(path):
    with open(path, "rb") as f:
        hdr = _read_exact(f, _HEADER.size)
        magic, version, kind_code, seed, n, window_len, n_cond = \
            _HEADER.unpack(hdr)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported version {version}")
        if kind_code not in KIND_NAMES:
            raise FormatError(f"unknown corpus kind code {kind_code}")
        if window_len != WINDOW_LEN:
            raise FormatError(f"unexpected window length {window_len}")
        diff_len = window_len - 1
        mean = np.frombuffer(_read_exact(f, 4 * diff_len), dtype="<f4")
        std = np.frombuffer(_read_exact(f, 4 * diff_len), dtype="<f4")
        ref = np.frombuffer(_read_exact(f, 4 * window_len), dtype="<f4")
        per = window_len + diff_len + diff_len + 4
        body = _read_exact(f, 4 * per * n)
        if f.read(1):
            raise FormatError("trailing bytes after corpus body")
    rows = np.frombuffer(body, dtype="<f4").reshape(n, per)
    raw = rows[:, :window_len].copy()
    diffed = rows[:, window_len:window_len + diff_len].copy()
    normalized = rows[:, window_len + diff_len:window_len + 2 * diff_len].copy()
    params = rows[:, window_len + 2 * diff_len:].copy()
    return Corpus(kind=KIND_NAMES[kind_code], seed=seed,
                  raw=raw, diffed=diffed, normalized=normalized,
                  params=params,
                  stats=NormStats(mean=mean.astype(np.float64),
                                  std=std.astype(np.float64)),
                  reference_window=ref.copy(),
                  window_len=window_len)
