"""Recovery metrics, phase-transition sweeps, and file-to-file restoration.

A trial counts as a success when the relative Frobenius error of the
recovered matrix is at most 0.05. Phase diagrams sweep rank against a
task ratio (corruption ratio for robust PCA, sampling rate for
completion); every (cell, trial) pair gets its own derived seed, cells
are independent, and assembly is by cell index, so results are identical
for any worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DegenerateInputError, DimensionError, MnnError
from .operators import ConvOperator
from .solvers import SolverConfig, solve_mc, solve_rpca
from .synth import gen_mc_instance, gen_rpca_instance, trial_seed
from .tensors import as_stack, fold3, read_tensor, unfold3, write_tensor

SUCCESS_THRESHOLD = 0.05

TASKS = ("rpca", "mc")

# Standard desk-scale sweep grid: 16x16 planes, 30 bands, 10 trials per
# cell. Ranks and ratios bracket every built-in operator's recovery
# transition at this scale without the hours a full-size grid costs.
DESK_R_VALUES = (1, 2, 4, 6, 8, 10, 12)
DESK_RPCA_RATIO_VALUES = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
DESK_MC_RATIO_VALUES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def rel_error(x_hat, x0):
    """Relative Frobenius error ||x_hat - x0||_F / ||x0||_F."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    if x_hat.shape != x0.shape:
        raise DimensionError(f"shape mismatch {x_hat.shape} vs {x0.shape}")
    denom = np.linalg.norm(x0)
    if denom == 0.0:
        raise DegenerateInputError("relative error against a zero truth is undefined")
    return float(np.linalg.norm(x_hat - x0) / denom)


def success(x_hat, x0, threshold=SUCCESS_THRESHOLD):
    """True when the relative error is at most the success threshold."""
    return rel_error(x_hat, x0) <= threshold


def psnr(x_hat, x0, peak=None):
    """Peak signal-to-noise ratio in dB; +inf when the inputs agree.

    peak defaults to the largest absolute entry of the reference x0.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    if x_hat.shape != x0.shape:
        raise DimensionError(f"shape mismatch {x_hat.shape} vs {x0.shape}")
    if peak is None:
        peak = float(np.abs(x0).max())
    if peak <= 0:
        raise ConfigError(f"peak must be positive, got {peak}")
    mse = float(((x_hat - x0) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return float(10.0 * math.log10(peak**2 / mse))


def ssim(x_hat, x0, dynamic_range=None, window=8):
    """Mean structural similarity over all bands of two stacks.

    Uses square windows at every full-window position (stride 1),
    population moments, and the usual stabilizers C1 = (0.01 L)^2,
    C2 = (0.03 L)^2 where L is the dynamic range (defaults to
    max - min of the reference x0).
    """
    a = as_stack(x_hat, "x_hat")
    b = as_stack(x0, "x0")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    h, w, bands = a.shape
    if window < 1 or window > h or window > w:
        raise DimensionError(
            f"window {window} does not fit into {h}x{w} planes"
        )
    if dynamic_range is None:
        dynamic_range = float(b.max() - b.min())
    if dynamic_range <= 0:
        raise DegenerateInputError("dynamic range must be positive for ssim")
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2
    vals = []
    for k in range(bands):
        pa = np.lib.stride_tricks.sliding_window_view(a[:, :, k], (window, window))
        pb = np.lib.stride_tricks.sliding_window_view(b[:, :, k], (window, window))
        mu1 = pa.mean(axis=(2, 3))
        mu2 = pb.mean(axis=(2, 3))
        var1 = (pa**2).mean(axis=(2, 3)) - mu1**2
        var2 = (pb**2).mean(axis=(2, 3)) - mu2**2
        cov = (pa * pb).mean(axis=(2, 3)) - mu1 * mu2
        score = ((2 * mu1 * mu2 + c1) * (2 * cov + c2)) / (
            (mu1**2 + mu2**2 + c1) * (var1 + var2 + c2)
        )
        vals.append(float(score.mean()))
    return float(np.mean(vals))


@dataclass(frozen=True)
class PhaseGrid:
    """Success rates over a (rank, ratio) grid for one task and operator."""

    task: str
    operator_name: str
    r_values: tuple
    ratio_values: tuple
    success_rate: np.ndarray
    trials_per_cell: int


def _phase_cell(args):
    """Run all trials of one grid cell; returns (cell_idx, success count).

    Solver or generator failures inside a trial count as failed recovery
    rather than aborting the sweep.
    """
    (task, kernel, norm, h, w, b, c, r, ratio, trials, seed, cell_idx, cfg,
     mask_scheme) = args
    op = ConvOperator(kernel, h, w, norm=norm)
    wins = 0
    for t in range(trials):
        s = trial_seed(seed, cell_idx * trials + t)
        try:
            if task == "rpca":
                x0, _, m = gen_rpca_instance(h, w, b, r, ratio, s, c=c)
                sol = solve_rpca(m, op, cfg=cfg)
            else:
                x0, mask, m = gen_mc_instance(
                    h, w, b, r, ratio, s, c=c, scheme=mask_scheme
                )
                sol = solve_mc(m, mask, op, cfg=cfg)
            if success(sol.x_hat, x0):
                wins += 1
        except MnnError:
            pass
    return cell_idx, wins


def run_phase_diagram(
    task,
    kernel,
    r_values,
    ratio_values,
    *,
    h=16,
    w=16,
    b=30,
    c=10,
    trials=10,
    seed=0,
    cfg=None,
    norm="l2",
    mask_scheme="bernoulli",
    jobs=1,
    operator_name=None,
):
    """Sweep a (rank, ratio) grid and return per-cell success rates.

    Trial (i, j, t) uses trial_seed(seed, cell_idx * trials + t) with
    cell_idx = i * len(ratio_values) + j, so any jobs count, including 1,
    produces the same grid.
    """
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    if trials < 1:
        raise ConfigError(f"trials must be at least 1, got {trials}")
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError(f"jobs must be at least 1, got {jobs}")
    cfg = (cfg or SolverConfig()).validate()
    r_values = tuple(int(r) for r in r_values)
    ratio_values = tuple(float(q) for q in ratio_values)
    name = operator_name if operator_name is not None else kernel.name

    work = []
    for i, r in enumerate(r_values):
        for j, ratio in enumerate(ratio_values):
            cell_idx = i * len(ratio_values) + j
            work.append(
                (task, kernel, norm, h, w, b, c, r, ratio, trials, seed,
                 cell_idx, cfg, mask_scheme)
            )
    if jobs == 1:
        results = [_phase_cell(item) for item in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_phase_cell, work))

    grid = np.zeros((len(r_values), len(ratio_values)))
    for cell_idx, wins in results:
        i, j = divmod(cell_idx, len(ratio_values))
        grid[i, j] = wins / trials
    return PhaseGrid(
        task=task,
        operator_name=name,
        r_values=r_values,
        ratio_values=ratio_values,
        success_rate=grid,
        trials_per_cell=trials,
    )


def monotone_row_fraction(success_rate):
    """Fraction of grid rows whose success is nonincreasing in the ratio."""
    grid = np.atleast_2d(np.asarray(success_rate, dtype=np.float64))
    flags = [bool(np.all(np.diff(row) <= 1e-12)) for row in grid]
    return float(np.mean(flags))


def write_phase_csv(grid, path):
    """Serialize a PhaseGrid as `r,ratio,success_rate,trials` rows."""
    lines = ["r,ratio,success_rate,trials"]
    for i, r in enumerate(grid.r_values):
        for j, ratio in enumerate(grid.ratio_values):
            lines.append(f"{r},{ratio},{grid.success_rate[i, j]},{grid.trials_per_cell}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class MetricsRow:
    dataset: str
    task: str
    operator: str
    psnr: float
    ssim: float
    rel_err: float
    wall_time_s: float


def write_metrics_csv(rows, path):
    """Serialize MetricsRow records with the standard metrics header."""
    lines = ["dataset,task,operator,psnr,ssim,rel_err,wall_time_s"]
    for row in rows:
        lines.append(
            f"{row.dataset},{row.task},{row.operator},{row.psnr},"
            f"{row.ssim},{row.rel_err},{row.wall_time_s}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trace_csv(report, path):
    """Serialize per-iteration solver history as a trace CSV."""
    with_err = report.rel_err_history is not None
    header = "iter,objective,rel_change" + (",rel_err_vs_truth" if with_err else "")
    lines = [header]
    for k in range(report.iterations_run):
        row = f"{k},{report.objective_history[k]},{report.rel_change_history[k]}"
        if with_err:
            row += f",{report.rel_err_history[k]}"
        lines.append(row)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_as_matrix(path, op):
    """Read a tensor file and unfold to a matrix matching the operator."""
    arr = read_tensor(path)
    if arr.ndim == 3:
        if arr.shape[0] != op.h or arr.shape[1] != op.w:
            raise DimensionError(
                f"{path}: stack planes {arr.shape[0]}x{arr.shape[1]} do not "
                f"match operator planes {op.h}x{op.w}"
            )
        return unfold3(arr), True
    if arr.shape[0] != op.h * op.w:
        raise DimensionError(
            f"{path}: {arr.shape[0]} rows do not fold into {op.h}x{op.w} planes"
        )
    return arr, False


def run_restoration(
    m_path,
    truth_path,
    task,
    op,
    cfg,
    out_path,
    mask_path=None,
    peak=None,
    dataset=None,
):
    """Solve one stored dataset and write the recovered tensor.

    Returns a MetricsRow; quality metrics are NaN when no truth file is
    given. The recovered tensor mirrors the rank (2-D or 3-D) of the
    input file.
    """
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    m, was_stack = _load_as_matrix(m_path, op)
    if task == "mc":
        if mask_path is None:
            raise ConfigError("completion needs a mask file")
        mask_arr, _ = _load_as_matrix(mask_path, op)
        mask = mask_arr != 0.0
    truth = None
    if truth_path is not None:
        truth, _ = _load_as_matrix(truth_path, op)

    t0 = time.perf_counter()
    if task == "rpca":
        sol = solve_rpca(m, op, cfg=cfg, truth=truth)
    else:
        sol = solve_mc(m, mask, op, cfg=cfg, truth=truth)
    wall = time.perf_counter() - t0

    x_hat = sol.x_hat
    write_tensor(out_path, fold3(x_hat, op.h, op.w) if was_stack else x_hat)

    if truth is not None:
        row = MetricsRow(
            dataset=dataset if dataset is not None else os.path.basename(str(m_path)),
            task=task,
            operator=op.name,
            psnr=psnr(x_hat, truth, peak=peak),
            ssim=ssim(fold3(x_hat, op.h, op.w), fold3(truth, op.h, op.w)),
            rel_err=rel_error(x_hat, truth),
            wall_time_s=wall,
        )
    else:
        row = MetricsRow(
            dataset=dataset if dataset is not None else os.path.basename(str(m_path)),
            task=task,
            operator=op.name,
            psnr=math.nan,
            ssim=math.nan,
            rel_err=math.nan,
            wall_time_s=wall,
        )
    return row, sol
