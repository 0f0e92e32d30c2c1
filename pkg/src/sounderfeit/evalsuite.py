"""Evaluation suite: parameter-estimation trajectories, decoder grid
renders, latent scatter, and CSV/SVG emitters.

Everything here uses only encode/decode on frozen models; no training
happens during evaluation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from .adversarial import decode, encode
from .dataset import (WINDOW_LEN, apply_norm, differentiate, integrate_diffs,
                      phase_align, unapply_norm, unscale_params, window_rms)
from .waveguide import SAMPLE_RATE, BowParams, waveguide_new, waveguide_run

TRAJ_PHASE_LEN = 100
TRAJ_LEN = 3 * TRAJ_PHASE_LEN

# The trajectory is rendered as one continuous stream with the parameters
# stepped every TRAJECTORY_HOP samples -- a fast, dynamically-played gesture,
# so windows contain transitional content rather than settled steady states.
TRAJECTORY_HOP = 128
TRAJ_WARMUP = SAMPLE_RATE          # settle 1 s at the initial parameters
TRAJ_CONTEXT = 512                 # rolling context fed to phase alignment

TRAJ_VELOCITY = 100.0
TRAJ_FREQUENCY = 476.5

SEGMENT_NAMES = ("pressure", "position", "both")

HALF_POSITION_LIMIT = 64.0


@dataclass
class Trajectory:
    """300 windows of a deterministic parameter gesture."""

    params: np.ndarray     # (n, 2) raw units [pressure, position]
    windows: np.ndarray    # (n, 200) normalized difference windows
    segments: np.ndarray   # (n,) int8 index into SEGMENT_NAMES

    def __post_init__(self):
        if not (len(self.params) == len(self.windows) == len(self.segments)):
            raise ValueError("trajectory arrays must have equal lengths")

    def __len__(self):
        return self.params.shape[0]


@dataclass
class EvalReport:
    condition: str
    rms_param_error: float
    holdout_mse: float = float("nan")
    latent_ks: np.ndarray = field(default_factory=lambda: np.zeros(0))
    latent_corr: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    estimates: np.ndarray = field(
        default_factory=lambda: np.zeros((0, 0)))  # raw units


def trajectory_params():
    """The fixed three-phase parameter gesture (raw units).

    Phase 1: pressure sweeps 32 -> 112 at position 32.
    Phase 2: position sweeps 16 -> 112 at pressure 64.
    Phase 3: both vary sinusoidally.
    Returns (pressures, positions, segments).
    """
    n = TRAJ_PHASE_LEN
    i = np.arange(n)
    prs = np.concatenate([
        32.0 + 80.0 * i / (n - 1),
        np.full(n, 64.0),
        72.0 + 40.0 * np.sin(2.0 * np.pi * 3.0 * i / n),
    ])
    pos = np.concatenate([
        np.full(n, 32.0),
        16.0 + 96.0 * i / (n - 1),
        64.0 + 48.0 * np.sin(2.0 * np.pi * 2.0 * i / n),
    ])
    seg = np.repeat(np.arange(3, dtype=np.int8), n)
    return prs, pos, seg


def make_test_trajectory(corpus, seed=0, hop=TRAJECTORY_HOP):
    """Render the gesture fresh and window it with the corpus conventions.

    One waveguide runs continuously; every `hop` samples the parameters step
    to the next trajectory point and the last TRAJ_CONTEXT samples are
    phase-aligned against the corpus reference, differenced, and normalized
    with the corpus stats.  `seed` is accepted for signature stability; the
    render is deterministic.
    """
    del seed
    prs, pos, seg = trajectory_params()
    ref = corpus.reference_window.astype(np.float64)
    state = waveguide_new(TRAJ_FREQUENCY)
    waveguide_run(state, BowParams(pressure=prs[0], velocity=TRAJ_VELOCITY,
                                   position=pos[0]), TRAJ_WARMUP)
    buf = np.zeros(TRAJ_CONTEXT)
    windows = np.empty((len(prs), WINDOW_LEN - 1))
    for k in range(len(prs)):
        segment = waveguide_run(
            state, BowParams(pressure=prs[k], velocity=TRAJ_VELOCITY,
                             position=pos[k]), hop)
        if hop >= TRAJ_CONTEXT:
            buf = segment[-TRAJ_CONTEXT:]
        else:
            buf = np.concatenate([buf[hop:], segment])
        cand = buf[-WINDOW_LEN:] - buf[-WINDOW_LEN:].mean()
        aligned, _ = phase_align(cand, ref, buf)
        windows[k] = apply_norm(differentiate(aligned), corpus.stats)
    return Trajectory(params=np.stack([prs, pos], axis=1),
                      windows=windows, segments=seg)


def restrict_trajectory(traj, position_limit=HALF_POSITION_LIMIT):
    """Keep only windows with true position < position_limit."""
    mask = traj.params[:, 1] < position_limit
    return Trajectory(params=traj.params[mask], windows=traj.windows[mask],
                      segments=traj.segments[mask])


def estimate_params(model, traj):
    """Raw-unit parameter estimates from the encoder's conditional dims."""
    _, y_hat = encode(model, traj.windows)
    return unscale_params(np.clip(y_hat, -1.0, 1.0))


def eval_param_estimation(model, traj):
    """RMS of (estimate - true) over all windows and estimated dims,
    in raw 0-128 units."""
    if model.n_cond < 1:
        raise ValueError("model estimates no conditional parameters")
    est = estimate_params(model, traj)
    true = traj.params[:, :model.n_cond]
    rms = float(np.sqrt(np.mean((est - true) ** 2)))
    return EvalReport(condition=model.condition_name, rms_param_error=rms,
                      estimates=est)


def eval_half_dataset(model, traj, position_limit=HALF_POSITION_LIMIT):
    """eval_param_estimation on the position-restricted trajectory."""
    return eval_param_estimation(model, restrict_trajectory(
        traj, position_limit))


def _uniform_ks(values):
    return float(scipy_stats.kstest(
        values, scipy_stats.uniform(loc=-1.0, scale=2.0).cdf).statistic)


def latent_scatter(model, corpus):
    """Encoded z for every corpus window plus distribution stats.

    Returns (points, ks, corr): points is (n_windows, n_latent); ks holds
    the per-dimension Kolmogorov-Smirnov statistic against U(-1, 1); corr
    is the Pearson correlation matrix of the dimensions.
    """
    if model.n_latent < 1:
        raise ValueError("model has no latent dimensions to scatter")
    z, _ = encode(model, corpus.training_matrix())
    ks = np.array([_uniform_ks(z[:, d]) for d in range(model.n_latent)])
    if model.n_latent == 1:
        corr = np.ones((1, 1))
    else:
        corr = np.corrcoef(z.T)
    return z, ks, corr


def default_condition_grid(model, steps=8, z_value=0.0):
    """A square grid over the scaled conditional space with z pinned.

    Returns (y_grid, z_grid): conditional values spanning [-1, 1] per dim
    (cartesian product for two dims) and matching constant latent values.
    """
    if model.n_cond < 1:
        raise ValueError("model has no conditional dims to sweep")
    axis = np.linspace(-1.0, 1.0, steps)
    if model.n_cond == 1:
        y_grid = axis[:, None]
    else:
        g = np.meshgrid(*([axis] * model.n_cond), indexing="ij")
        y_grid = np.stack([a.ravel() for a in g], axis=1)
    z_grid = np.full((y_grid.shape[0], model.n_latent), float(z_value))
    return y_grid, z_grid


def render_decoder_grid(model, y_grid, z_grid):
    """Decode every (z, y) cell to a raw 201-sample waveform.

    The decoder output is unnormalized and integrated (leak 1, starting at
    zero) back to the waveform domain.  Returns (n_cells, 201).
    """
    y_grid = np.atleast_2d(np.asarray(y_grid, dtype=np.float64))
    z_grid = np.atleast_2d(np.asarray(z_grid, dtype=np.float64))
    if y_grid.shape[0] != z_grid.shape[0]:
        raise ValueError("y and z grids must have the same number of cells")
    decoded = decode(model, z_grid, y_grid)
    diffs = unapply_norm(decoded, model.stats)
    return np.stack([integrate_diffs(d, x0=0.0) for d in diffs])


def evaluate_model(model, corpus, traj):
    """Full EvalReport: trajectory RMS, holdout MSE, and latent stats."""
    from .adversarial import holdout_mse
    rep = (eval_param_estimation(model, traj) if model.n_cond >= 1
           else EvalReport(condition=model.condition_name,
                           rms_param_error=float("nan")))
    rep.holdout_mse = holdout_mse(model, corpus)
    if model.n_latent >= 1:
        _, rep.latent_ks, rep.latent_corr = latent_scatter(model, corpus)
    return rep


# ---------------------------------------------------------------------------
# CSV / SVG emitters


def write_trajectory_csv(path, traj, estimates):
    estimates = np.atleast_2d(estimates)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["window_idx", "true_pressure", "true_position",
                    "est_pressure", "est_position"])
        for k in range(len(traj)):
            est = list(estimates[k]) + [""] * (2 - estimates.shape[1])
            w.writerow([k, repr(float(traj.params[k, 0])),
                        repr(float(traj.params[k, 1])),
                        *[e if e == "" else repr(float(e)) for e in est]])


def write_scatter_csv(path, points):
    points = np.atleast_2d(points)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"z{d}" for d in range(points.shape[1])])
        for row in points:
            w.writerow([repr(float(v)) for v in row])


def write_grid_csv(path, y_grid, z_grid, waveforms):
    y_grid = np.atleast_2d(y_grid)
    z_grid = np.atleast_2d(z_grid)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        header = (["cell_id"]
                  + [f"y{d}" for d in range(y_grid.shape[1])]
                  + [f"z{d}" for d in range(z_grid.shape[1])]
                  + [f"s{k}" for k in range(waveforms.shape[1])])
        w.writerow(header)
        for c in range(waveforms.shape[0]):
            w.writerow([c]
                       + [repr(float(v)) for v in y_grid[c]]
                       + [repr(float(v)) for v in z_grid[c]]
                       + [repr(float(v)) for v in waveforms[c]])


def _svg_header(width, height):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')


def _polyline(xs, ys, color, width=1.0):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return (f'<polyline fill="none" stroke="{color}" '
            f'stroke-width="{width}" points="{pts}"/>\n')


def write_trajectory_svg(path, traj, estimates, width=900, height=360):
    """True (solid) vs estimated (accented) parameter curves per dim."""
    estimates = np.atleast_2d(estimates)
    n = len(traj)
    pad = 30
    plot_w = width - 2 * pad
    plot_h = height - 2 * pad

    def sx(i):
        return pad + plot_w * i / max(n - 1, 1)

    def sy(v):
        return pad + plot_h * (1.0 - v / 128.0)

    xs = [sx(i) for i in range(n)]
    parts = [_svg_header(width, height)]
    colors_true = ("#444444", "#999999")
    colors_est = ("#cc3311", "#0077bb")
    for d in range(2):
        parts.append(_polyline(xs, [sy(v) for v in traj.params[:, d]],
                               colors_true[d]))
    for d in range(estimates.shape[1]):
        parts.append(_polyline(
            xs, [sy(v) for v in np.clip(estimates[:, d], 0.0, 128.0)],
            colors_est[d]))
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))


def write_scatter_svg(path, points, width=420, height=420):
    """2-D scatter of the first two latent dims (or dim 0 vs index)."""
    points = np.atleast_2d(points)
    pad = 30
    span_w = width - 2 * pad
    span_h = height - 2 * pad
    parts = [_svg_header(width, height),
             f'<rect x="{pad}" y="{pad}" width="{span_w}" height="{span_h}" '
             f'fill="none" stroke="#888888"/>\n']
    if points.shape[1] >= 2:
        xv, yv = points[:, 0], points[:, 1]
    else:
        xv = points[:, 0]
        yv = np.linspace(-1.0, 1.0, points.shape[0])
    for x, y in zip(xv, yv):
        cx = pad + span_w * (np.clip(x, -1.5, 1.5) + 1.5) / 3.0
        cy = pad + span_h * (1.0 - (np.clip(y, -1.5, 1.5) + 1.5) / 3.0)
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="1.5" '
                     f'fill="#0077bb" fill-opacity="0.5"/>\n')
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))


def write_grid_svg(path, y_grid, waveforms, cell=110, pad=8):
    """Small-multiples figure: one mini waveform plot per grid cell.

    Cells are laid out by the first conditional dim across columns and the
    second (when present) down rows.
    """
    y_grid = np.atleast_2d(y_grid)
    n_cells = waveforms.shape[0]
    col_vals = np.unique(y_grid[:, 0])
    n_cols = len(col_vals)
    n_rows = int(np.ceil(n_cells / n_cols))
    width = pad + n_cols * (cell + pad)
    height = pad + n_rows * (cell + pad)
    peak = float(np.max(np.abs(waveforms))) or 1.0
    parts = [_svg_header(width, height)]
    for c in range(n_cells):
        col = c % n_cols
        row = c // n_cols
        x0 = pad + col * (cell + pad)
        y0 = pad + row * (cell + pad)
        parts.append(f'<rect x="{x0}" y="{y0}" width="{cell}" '
                     f'height="{cell}" fill="none" stroke="#cccccc"/>\n')
        wf = waveforms[c]
        xs = [x0 + cell * k / (len(wf) - 1) for k in range(len(wf))]
        ys = [y0 + cell * (0.5 - 0.45 * v / peak) for v in wf]
        parts.append(_polyline(xs, ys, "#0077bb", width=0.8))
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))


def trajectory_is_silent_free(traj, corpus):
    """True when every raw-domain window in the trajectory is non-silent."""
    diffs = unapply_norm(traj.windows, corpus.stats)
    for d in diffs:
        if window_rms(integrate_diffs(d, x0=0.0)) <= 1e-5:
            return False
    return True
