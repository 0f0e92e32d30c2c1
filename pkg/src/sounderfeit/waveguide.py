"""Bowed-string digital waveguide: the ground-truth synthesizer.

Topology: two fractional delay lines (bridge side, nut/neck side) split at
the bow point, a one-pole lowpass reflection filter at the bridge, a
body-resonance biquad on the output, and a memoryless bow-friction table
injecting energy at the junction.  Controls are raw 0-128 values plus a
fundamental frequency in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

SAMPLE_RATE = 48000

# String reflection lowpass (gain, pole) and body resonance (Hz, radius).
STRING_GAIN = 0.95
STRING_POLE = 0.6
BODY_FREQ = 500.0
BODY_RADIUS = 0.85

# Output scaled so stable regimes peak near +-0.5.
OUTPUT_GAIN = 3.5

# Bow velocity in string-velocity units at raw control 128.  Calibrated so
# the bow locks onto the fundamental (not a higher register) across the
# stable control region.
MAX_BOW_VELOCITY = 0.04

# Bow velocity ramps linearly from zero over this many samples after a
# fresh start; slamming the bow on full excites the second register.
ATTACK_SAMPLES = 9600

BLOWUP_LIMIT = 10.0

FREQ_MIN = 20.0
FREQ_MAX = 10000.0


class ConfigurationError(ValueError):
    """Out-of-range control or frequency."""


class ModelBlowupError(RuntimeError):
    """A sample exceeded the blowup limit; the state is unusable."""


@dataclass(frozen=True)
class BowParams:
    pressure: float
    velocity: float
    position: float
    frequency: float = 476.5

    def __post_init__(self):
        for name in ("pressure", "velocity", "position"):
            v = getattr(self, name)
            if not (0.0 <= v <= 128.0):
                raise ConfigurationError(f"{name}={v} outside [0, 128]")
        if not (FREQ_MIN <= self.frequency <= FREQ_MAX):
            raise ConfigurationError(
                f"frequency={self.frequency} outside [{FREQ_MIN}, {FREQ_MAX}] Hz")


def reflection_phase_delay(frequency, sample_rate=SAMPLE_RATE):
    """Phase delay (samples) of the one-pole reflection lowpass at `frequency`."""
    w = 2.0 * math.pi * frequency / sample_rate
    theta = math.atan2(STRING_POLE * math.sin(w), 1.0 - STRING_POLE * math.cos(w))
    return theta / w


def loop_delay(frequency, sample_rate=SAMPLE_RATE):
    """Total loop delay in samples (neck + bridge + reflection filter)."""
    return sample_rate / frequency


def bow_point_ratio(position):
    return 0.027 + 0.2 * (position / 128.0)


def bow_table_slope(pressure):
    return 5.0 - 4.0 * (pressure / 128.0)


def _body_coeffs(sample_rate):
    # Resonant biquad, poles at radius r, zeros at z = +-1 (blocks DC).
    r = BODY_RADIUS
    w = 2.0 * math.pi * BODY_FREQ / sample_rate
    a1 = -2.0 * r * math.cos(w)
    a2 = r * r
    b0 = 0.5 * (1.0 - a2)
    return b0, a1, a2


@njit(cache=True, inline="always")
def _dl_read(buf, wptr, delay, mask):
    pos = wptr - delay
    i0 = int(math.floor(pos))
    frac = pos - i0
    s0 = buf[i0 & mask]
    s1 = buf[(i0 + 1) & mask]
    return s0 + frac * (s1 - s0)


@njit(cache=True, nogil=True)
def _run(neck, bridge, fstate, iptr, mask, neck_d, bridge_d,
         refl_b0, refl_pole, body_b0, body_a1, body_a2,
         bow_vel, slope, gain, attack_pos, attack_len, out):
    """Advance the waveguide by len(out) ticks.  Returns the index of the
    first blown-up sample, or -1 if all samples stayed in bounds."""
    wn = iptr[0]
    wb = iptr[1]
    refl_y = fstate[0]
    bx1 = fstate[1]
    bx2 = fstate[2]
    by1 = fstate[3]
    by2 = fstate[4]
    blown = -1
    for i in range(out.shape[0]):
        bridge_out = _dl_read(bridge, wb, bridge_d, mask)
        neck_out = _dl_read(neck, wn, neck_d, mask)
        refl_y = refl_b0 * bridge_out + refl_pole * refl_y
        bridge_refl = -refl_y
        nut_refl = -neck_out
        bv = bow_vel
        t = attack_pos + i
        if t < attack_len:
            bv = bow_vel * t / attack_len
        dv = bv - (bridge_refl + nut_refl)
        f = (abs(dv) * slope + 0.75) ** -4.0
        if f > 1.0:
            f = 1.0
        new_vel = dv * f
        wn = (wn + 1) & mask
        neck[wn] = bridge_refl + new_vel
        wb = (wb + 1) & mask
        bridge[wb] = nut_refl + new_vel
        body_y = body_b0 * (bridge_out - bx2) - body_a1 * by1 - body_a2 * by2
        bx2 = bx1
        bx1 = bridge_out
        by2 = by1
        by1 = body_y
        o = gain * body_y
        out[i] = o
        if not (-BLOWUP_LIMIT < o < BLOWUP_LIMIT):
            blown = i
            break
    iptr[0] = wn
    iptr[1] = wb
    fstate[0] = refl_y
    fstate[1] = bx1
    fstate[2] = bx2
    fstate[3] = by1
    fstate[4] = by2
    return blown


@njit(cache=True, parallel=True)
def _render_grid(pressures, positions, velocity, n_samples, tail_len,
                 neck_base, refl_b0, refl_pole, body_b0, body_a1, body_a2,
                 gain, bufsize):
    """Render every (pressure, position) pair for n_samples ticks; return
    the final tail_len samples per point plus a blowup flag array."""
    npts = pressures.shape[0]
    tails = np.zeros((npts, tail_len))
    blown = np.zeros(npts, dtype=np.int64)
    mask = bufsize - 1
    for k in prange(npts):
        neck = np.zeros(bufsize)
        bridge = np.zeros(bufsize)
        fstate = np.zeros(5)
        iptr = np.zeros(2, dtype=np.int64)
        beta = 0.027 + 0.2 * (positions[k] / 128.0)
        bridge_d = neck_base * beta
        neck_d = neck_base - bridge_d
        slope = 5.0 - 4.0 * (pressures[k] / 128.0)
        bow_vel = MAX_BOW_VELOCITY * velocity / 128.0
        out = np.empty(n_samples)
        b = _run(neck, bridge, fstate, iptr, mask, neck_d, bridge_d,
                 refl_b0, refl_pole, body_b0, body_a1, body_a2,
                 bow_vel, slope, gain, 0, ATTACK_SAMPLES, out)
        if b >= 0:
            blown[k] = 1
        else:
            tails[k, :] = out[n_samples - tail_len:]
    return tails, blown


def _buffer_size(total_delay):
    n = 1
    while n < int(math.ceil(total_delay)) + 4:
        n *= 2
    return n


@dataclass
class WaveguideState:
    frequency: float
    sample_rate: int
    neck: np.ndarray
    bridge: np.ndarray
    fstate: np.ndarray
    iptr: np.ndarray
    mask: int
    base_delay: float
    attack_pos: int = 0
    blown: bool = False
    _out1: np.ndarray = field(default_factory=lambda: np.empty(1))

    @property
    def total_loop_delay(self):
        return self.base_delay + reflection_phase_delay(self.frequency,
                                                        self.sample_rate)

    def delays_for(self, position):
        beta = bow_point_ratio(position)
        bridge_d = self.base_delay * beta
        return self.base_delay - bridge_d, bridge_d


def waveguide_new(frequency, sample_rate=SAMPLE_RATE):
    if not (FREQ_MIN <= frequency <= FREQ_MAX):
        raise ConfigurationError(
            f"frequency={frequency} outside [{FREQ_MIN}, {FREQ_MAX}] Hz")
    total = loop_delay(frequency, sample_rate)
    base = total - reflection_phase_delay(frequency, sample_rate)
    bufsize = _buffer_size(total)
    return WaveguideState(
        frequency=float(frequency),
        sample_rate=int(sample_rate),
        neck=np.zeros(bufsize),
        bridge=np.zeros(bufsize),
        fstate=np.zeros(5),
        iptr=np.zeros(2, dtype=np.int64),
        mask=bufsize - 1,
        base_delay=base,
    )


def waveguide_run(state, params, n_samples, out=None):
    """Advance the state by n_samples ticks under fixed params."""
    if state.blown:
        raise ModelBlowupError("state is unusable after blowup")
    if out is None:
        out = np.empty(n_samples)
    neck_d, bridge_d = state.delays_for(params.position)
    body_b0, body_a1, body_a2 = _body_coeffs(state.sample_rate)
    bow_vel = MAX_BOW_VELOCITY * params.velocity / 128.0
    blown = _run(state.neck, state.bridge, state.fstate, state.iptr,
                 state.mask, neck_d, bridge_d,
                 STRING_GAIN * (1.0 - STRING_POLE), STRING_POLE,
                 body_b0, body_a1, body_a2,
                 bow_vel, bow_table_slope(params.pressure),
                 OUTPUT_GAIN, state.attack_pos, ATTACK_SAMPLES, out)
    state.attack_pos += n_samples
    if blown >= 0:
        state.blown = True
        raise ModelBlowupError(
            f"sample {blown} exceeded |{BLOWUP_LIMIT}|")
    return out


def waveguide_tick(state, params):
    """One tick; returns a single output sample."""
    waveguide_run(state, params, 1, out=state._out1)
    return float(state._out1[0])


def waveguide_render(params, duration, sample_rate=SAMPLE_RATE):
    """Render `duration` seconds from a fresh state."""
    if duration <= 0:
        raise ConfigurationError(f"duration={duration} must be > 0")
    state = waveguide_new(params.frequency, sample_rate)
    n = int(round(duration * sample_rate))
    return waveguide_run(state, params, n)


def render_grid(pressures, positions, velocity=100.0, frequency=476.5,
                n_samples=SAMPLE_RATE, tail_len=512, sample_rate=SAMPLE_RATE):
    """Render many (pressure, position) points in parallel.

    Returns (tails, blown): the final tail_len samples per point and a
    0/1 blowup flag array.  Points that blew up have zeroed tails.
    """
    pressures = np.ascontiguousarray(pressures, dtype=np.float64)
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    if pressures.shape != positions.shape:
        raise ValueError("pressures and positions must have equal length")
    total = loop_delay(frequency, sample_rate)
    base = total - reflection_phase_delay(frequency, sample_rate)
    body_b0, body_a1, body_a2 = _body_coeffs(sample_rate)
    return _render_grid(pressures, positions, float(velocity),
                        int(n_samples), int(tail_len), base,
                        STRING_GAIN * (1.0 - STRING_POLE), STRING_POLE,
                        body_b0, body_a1, body_a2, OUTPUT_GAIN,
                        _buffer_size(total))
