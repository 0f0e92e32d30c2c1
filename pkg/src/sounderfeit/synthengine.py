"""Sounderfeit: real-time decoder-driven overlap-add synthesis.

Each hop decodes one difference window from the current (z, y) controls,
tapers it with a Blackman window, overlap-adds it into a carry buffer,
divides out the window-sum envelope, and leaky-integrates back to the
waveform domain.  Controls follow latest-value mailbox semantics: the
control party publishes ControlSnapshots, the audio party reads the most
recent one at each hop boundary.
"""

from __future__ import annotations

import time
import wave
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .adversarial import decode
from .dataset import unapply_norm
from .waveguide import SAMPLE_RATE

HOP = 100
FRAME_LEN = 201
CARRY_LEN = FRAME_LEN - HOP  # 101
LEAK = 0.995


def blackman(n=FRAME_LEN):
    """w[k] = 0.42 - 0.5 cos(2 pi k/(n-1)) + 0.08 cos(4 pi k/(n-1))."""
    k = np.arange(n)
    return (0.42 - 0.5 * np.cos(2.0 * np.pi * k / (n - 1))
            + 0.08 * np.cos(4.0 * np.pi * k / (n - 1)))


def integrate(diffs, y0=0.0, leak=LEAK):
    """y[i] = diffs[i] + leak * y[i-1], with y[-1] = y0."""
    diffs = np.asarray(diffs, dtype=np.float64)
    y, _ = lfilter([1.0], [1.0, -leak], diffs, zi=[leak * y0])
    return y


def ola_envelope(window=None, hop=HOP):
    """Per-output-sample sum of overlapped window values.

    With frame length 2*hop+1, output sample i of a hop sees the current
    frame at offset i, the previous at i+hop, and (only at i=0) the one
    before that at i+2*hop.
    """
    if window is None:
        window = blackman()
    env = window[:hop] + window[hop:2 * hop]
    env = env.copy()
    env[0] += window[2 * hop]
    return env


def _clamped(v, dim, name):
    v = np.atleast_1d(np.asarray(v, dtype=np.float64)).ravel()
    if v.shape[0] != dim:
        raise ValueError(f"{name} must have {dim} values, got {v.shape[0]}")
    return np.clip(v, -1.0, 1.0)


@dataclass(frozen=True)
class ControlSnapshot:
    y: np.ndarray
    z: np.ndarray
    timestamp: float = 0.0

    @classmethod
    def make(cls, y, z, n_cond, n_latent, timestamp=0.0):
        return cls(y=_clamped(y, n_cond, "y"), z=_clamped(z, n_latent, "z"),
                   timestamp=timestamp)


class OlaSynth:
    """Overlap-add synthesis engine bound to one decoder.

    synth_block() emits HOP integrated samples per call; the compensated
    pre-integration hop is kept in `last_ola_block` (the leaky integrator
    has a long transient, so periodicity checks belong on that stream).
    All buffers are allocated here; the per-block path only reuses them.
    """

    def __init__(self, model, leak=LEAK):
        self.model = model
        self.leak = float(leak)
        self.window = blackman()
        self.envelope = ola_envelope(self.window)
        self.carry = np.zeros(CARRY_LEN)
        self.last_ola_block = np.zeros(HOP)
        self._frame = np.empty(FRAME_LEN)
        self._out = np.empty(HOP)
        self._prev_sample = 0.0
        self._snapshot = ControlSnapshot.make(
            np.zeros(model.n_cond), np.zeros(model.n_latent),
            model.n_cond, model.n_latent)

    def set_controls(self, snapshot):
        """Publish a new snapshot (wait-free for the audio party)."""
        if (snapshot.y.shape[0] != self.model.n_cond
                or snapshot.z.shape[0] != self.model.n_latent):
            raise ValueError(
                f"snapshot dims ({snapshot.z.shape[0]}, {snapshot.y.shape[0]})"
                f" do not match model ({self.model.n_latent},"
                f" {self.model.n_cond})")
        self._snapshot = snapshot

    @property
    def controls(self):
        return self._snapshot

    def synth_block(self):
        """Emit the next HOP samples of integrated audio."""
        snap = self._snapshot
        decoded = decode(self.model, snap.z[None, :], snap.y[None, :])[0]
        diffs = unapply_norm(decoded, self.model.stats)
        self._frame[:FRAME_LEN - 1] = diffs
        self._frame[FRAME_LEN - 1] = diffs[0]  # periodic wrap sample
        self._frame *= self.window
        np.add(self._frame[:HOP], self.carry[:HOP], out=self._out)
        tail0 = self.carry[CARRY_LEN - 1]
        self.carry[:] = self._frame[HOP:]
        self.carry[0] += tail0
        self._out /= self.envelope
        self.last_ola_block[:] = self._out
        out = integrate(self._out, y0=self._prev_sample, leak=self.leak)
        self._prev_sample = out[-1]
        return out


@dataclass
class ControlCurve:
    """Piecewise-linear control breakpoints: rows of (t_seconds, values)."""

    times: np.ndarray
    values: np.ndarray  # (n_points, n_dims)

    def __post_init__(self):
        if self.times.shape[0] != self.values.shape[0]:
            raise ValueError("times and values must have equal lengths")
        if self.times.shape[0] < 1:
            raise ValueError("need at least one breakpoint")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("breakpoint times must be non-decreasing")

    @classmethod
    def from_rows(cls, rows):
        rows = [list(map(float, r)) for r in rows]
        return cls(times=np.array([r[0] for r in rows]),
                   values=np.array([r[1:] for r in rows]))

    @classmethod
    def constant(cls, values):
        return cls(times=np.zeros(1), values=np.atleast_2d(values))

    def at(self, t):
        return np.array([np.interp(t, self.times, self.values[:, d])
                         for d in range(self.values.shape[1])])


def snapshot_from_curve(curve, t, model):
    """Curve columns are y dims followed by z dims."""
    v = curve.at(t)
    if v.shape[0] != model.n_cond + model.n_latent:
        raise ValueError(
            f"control curve has {v.shape[0]} dims; model needs "
            f"{model.n_cond} y + {model.n_latent} z")
    return ControlSnapshot.make(v[:model.n_cond], v[model.n_cond:],
                                model.n_cond, model.n_latent, timestamp=t)


def render_blocks(model, curve, duration, sample_rate=SAMPLE_RATE):
    """Render `duration` seconds of audio under a control curve."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    n_samples = int(round(duration * sample_rate))
    n_blocks = (n_samples + HOP - 1) // HOP
    engine = OlaSynth(model)
    out = np.empty(n_blocks * HOP)
    for b in range(n_blocks):
        engine.set_controls(
            snapshot_from_curve(curve, b * HOP / sample_rate, model))
        out[b * HOP:(b + 1) * HOP] = engine.synth_block()
    return out[:n_samples]


def write_wav(path, samples, sample_rate=SAMPLE_RATE):
    """Mono 16-bit little-endian PCM; samples hard-clipped to [-1, 1]."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (clipped * 32767.0).round().astype("<i2")
    dest = path if hasattr(path, "write") else str(path)
    with wave.open(dest, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())


def render_wav(model, curve, duration, path, sample_rate=SAMPLE_RATE):
    samples = render_blocks(model, curve, duration, sample_rate)
    write_wav(path, samples, sample_rate)
    return samples


def measure_rtf(model, seconds=10.0, sample_rate=SAMPLE_RATE):
    """Wall-clock real-time factor of the synth_block loop (>1 is faster
    than real time)."""
    engine = OlaSynth(model)
    n_blocks = int(round(seconds * sample_rate / HOP))
    engine.synth_block()  # exclude first-call setup
    t0 = time.perf_counter()
    for _ in range(n_blocks):
        engine.synth_block()
    elapsed = time.perf_counter() - t0
    return (n_blocks * HOP / sample_rate) / elapsed
