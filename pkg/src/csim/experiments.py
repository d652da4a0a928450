"""Batch experiment harness: recovery sweeps, CSV output, plot scripts.

Every trial derives its signal and mask from substreams keyed by
(master seed, trial index, tag), so serial and parallel runs produce
identical rows.  Trials run on a thread pool capped by the CSIM_THREADS
environment variable; aggregation is an ordered reduce by trial index.

Wall-clock columns are zero unless timing is requested, because the
default CSV contract is byte-identical output across runs with equal
seeds, which measured times cannot satisfy.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import FistaConfig, IhtConfig, fista_solve, iht_adaptive_solve
from .dictionaries import Dictionary, dct_dictionary, haar_wp_dictionary
from .fileio import load_pgm
from .metrics import PSNR_CSV_CAP, QualityScore, mse, psnr, relative_error, ssim_global
from .signals import apply_mask, random_mask, substream, synth_sparse_signal
from .solver import RecoveryResult, SolverConfig, solve

__all__ = [
    "ExperimentSpec",
    "SWEEP_SR_HEADER",
    "SWEEP_ITERS_HEADER",
    "build_dictionary",
    "run_solver",
    "sweep_sr",
    "sweep_iters",
    "emit_plot_script",
    "synthetic_image",
    "add_noise_snr",
    "image_ssim",
]

SOLVER_NAMES = ("csim-alm", "fista", "iht")
SWEEP_SR_HEADER = "trial,seed,solver,sr,n,p,dict,iters,psnr_db,ssim,relerr,runtime_ms"
SWEEP_ITERS_HEADER = "solver,sr,trial,seed,iter,relerr,elapsed_ms"

# Substream tags.
_TAG_SIGNAL = 1
_TAG_MASK = 2
_TAG_NOISE = 3


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: dictionary, sampling ratios, trial count, solvers.

    With ``corpus`` empty, trial signals are synthetic exactly-sparse
    patches (ground truth known, relerr reported).  Otherwise trials
    draw square patches uniformly from the listed PGM files or
    directories and the relerr column is nan.
    """

    dict_kind: str = "dct"
    n: int = 64
    p: int = 64
    srs: tuple[float, ...] = (0.4, 0.6, 0.8)
    trials: int = 100
    seed: int = 0
    solvers: tuple[str, ...] = ("csim-alm", "fista")
    max_iter: int = 50
    timing: bool = False
    corpus: tuple[str, ...] = ()
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.srs:
            raise ValueError("need at least one sampling ratio")
        for sr in self.srs:
            if not 0.0 < sr <= 1.0:
                raise ValueError("sampling ratios must lie in (0, 1]")
        for solver in self.solvers:
            if solver not in SOLVER_NAMES:
                raise ValueError(f"unknown solver {solver!r}")
        if self.dict_kind not in ("dct", "haar-wp"):
            raise ValueError(f"unknown dictionary kind {self.dict_kind!r}")
        if self.corpus:
            side = math.isqrt(self.n)
            if side * side != self.n:
                raise ValueError("corpus mode needs a square patch length")


def build_dictionary(kind: str, n: int, p: int) -> Dictionary:
    if kind == "dct":
        return dct_dictionary(n, p)
    if kind == "haar-wp":
        return haar_wp_dictionary(n, p)
    raise ValueError(f"unknown dictionary kind {kind!r}")


def _worker_count() -> int:
    env = os.environ.get("CSIM_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _map_ordered(fn, items):
    """Apply fn over items on the worker pool, results in input order."""
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_solver(
    name: str,
    y,
    mask,
    D: Dictionary,
    max_iter: int = 50,
    record_iterates: bool = False,
    overrides: dict | None = None,
    feasibility_tol: float | None = None,
) -> RecoveryResult:
    """Dispatch one solver by harness name."""
    kwargs = {"max_iter": max_iter, "record_iterates": record_iterates}
    if name == "csim-alm" and feasibility_tol is not None:
        kwargs["feasibility_tol"] = feasibility_tol
    kwargs.update(overrides or {})
    if name == "csim-alm":
        return solve(y, mask, D, SolverConfig(**kwargs))
    if name == "fista":
        return fista_solve(y, mask, D, FistaConfig(**kwargs))
    if name == "iht":
        return iht_adaptive_solve(y, mask, D, IhtConfig(**kwargs))
    raise ValueError(f"unknown solver {name!r}")


def load_corpus(paths) -> list[np.ndarray]:
    """Float images from PGM files or directories of them."""
    files: list[Path] = []
    for entry in paths:
        path = Path(entry)
        if path.is_dir():
            files.extend(sorted(path.glob("*.pgm")))
        else:
            files.append(path)
    if not files:
        raise ValueError("corpus contains no PGM files")
    return [load_pgm(f).astype(float) for f in files]


def _corpus_patch(images, side: int, rng) -> np.ndarray:
    image = images[int(rng.integers(len(images)))]
    h, w = image.shape
    if h < side or w < side:
        raise ValueError("corpus image smaller than one patch")
    r = int(rng.integers(h - side + 1))
    c = int(rng.integers(w - side + 1))
    return image[r : r + side, c : c + side].reshape(-1)


def _trial_data(spec: ExperimentSpec, D: Dictionary, sr: float, trial: int, images=None):
    """(true sparse code or None, clean signal, mask, observations)."""
    n = D.n
    m = min(max(int(round(sr * n)), 1), n)
    mask = random_mask(n, m, substream(spec.seed, trial, _TAG_MASK, m))
    if images is None:
        k = max(1, math.ceil(0.1 * D.p))
        signal = synth_sparse_signal(D, k, substream(spec.seed, trial, _TAG_SIGNAL))
        s_true, x_true = signal.s, signal.x
    else:
        rng = substream(spec.seed, trial, _TAG_SIGNAL)
        s_true, x_true = None, _corpus_patch(images, math.isqrt(n), rng)
    return s_true, x_true, mask, apply_mask(x_true, mask)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _csv_psnr(value: float) -> float:
    return PSNR_CSV_CAP if math.isinf(value) else value


def _score_against_truth(x_hat, x_true, s_hat, s_true) -> QualityScore:
    if s_true is None:
        peak = 255.0
        rel_err = float("nan")
    else:
        peak = float(x_true.max() - x_true.min())
        if peak <= 0.0:
            peak = 1.0
        rel_err = relative_error(s_hat, s_true)
    return QualityScore(
        psnr_db=psnr(x_hat, x_true, peak),
        ssim=ssim_global(x_hat, x_true, (0.01 * peak) ** 2, (0.03 * peak) ** 2),
        mse=mse(x_hat, x_true),
        rel_err=rel_err,
    )


def sweep_sr(spec: ExperimentSpec) -> str:
    """Recovery-quality sweep over sampling ratios; returns CSV text.

    One row per (solver, sampling ratio, trial) in that loop order.
    Synthetic exactly-sparse signals give a ground-truth relerr and are
    scored against the clean signal with its dynamic range as peak;
    corpus patches are scored on the 8-bit scale with relerr = nan.
    """
    D = build_dictionary(spec.dict_kind, spec.n, spec.p)
    images = load_corpus(spec.corpus) if spec.corpus else None

    def one(job):
        solver, sr, trial = job
        s_true, x_true, mask, y = _trial_data(spec, D, sr, trial, images)
        t0 = time.perf_counter()
        result = run_solver(solver, y, mask, D, max_iter=spec.max_iter, overrides=spec.overrides.get(solver))
        runtime_ms = (time.perf_counter() - t0) * 1e3 if spec.timing else 0.0
        score = _score_against_truth(result.x_hat, x_true, result.s_hat, s_true)
        return (
            f"{trial},{spec.seed},{solver},{_fmt(sr)},{D.n},{D.p},{spec.dict_kind},"
            f"{result.iterations},{_fmt(_csv_psnr(score.psnr_db))},{_fmt(score.ssim)},"
            f"{_fmt(score.rel_err)},{runtime_ms:.3f}"
        )

    jobs = [
        (solver, sr, trial)
        for solver in spec.solvers
        for sr in spec.srs
        for trial in range(spec.trials)
    ]
    rows = _map_ordered(one, jobs)
    return SWEEP_SR_HEADER + "\n" + "\n".join(rows) + "\n"


def sweep_iters(spec: ExperimentSpec) -> str:
    """Per-iteration relative-error traces; returns long-format CSV text.

    Ground-truth synthetic signals only.  Solvers run their full
    iteration budget (no early stop) so the iteration column spans
    1..max_iter for every trace.
    """
    if spec.corpus:
        raise ValueError("iteration traces need ground-truth synthetic signals")
    D = build_dictionary(spec.dict_kind, spec.n, spec.p)

    def one(job):
        solver, sr, trial = job
        s_true, _, mask, y = _trial_data(spec, D, sr, trial)
        result = run_solver(
            solver,
            y,
            mask,
            D,
            max_iter=spec.max_iter,
            record_iterates=True,
            overrides=spec.overrides.get(solver),
            feasibility_tol=0.0,
        )
        lines = []
        for t, s_t in enumerate(result.iterates, start=1):
            rel = relative_error(s_t, s_true)
            ms = result.elapsed_ms[t - 1] if spec.timing else 0.0
            lines.append(
                f"{solver},{_fmt(sr)},{trial},{spec.seed},{t},{_fmt(rel)},{ms:.6f}"
            )
        return "\n".join(lines)

    jobs = [
        (solver, sr, trial)
        for solver in spec.solvers
        for sr in spec.srs
        for trial in range(spec.trials)
    ]
    chunks = _map_ordered(one, jobs)
    return SWEEP_ITERS_HEADER + "\n" + "\n".join(chunks) + "\n"


_PLOT_TEMPLATE = '''"""Generated plot script; needs matplotlib."""

import csv
from collections import defaultdict

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}
X_COLUMN = {x_column!r}
Y_COLUMN = {y_column!r}

series = defaultdict(lambda: defaultdict(list))
with open(CSV_PATH) as fh:
    for row in csv.DictReader(fh):
        series[row["solver"]][float(row[X_COLUMN])].append(float(row[Y_COLUMN]))

fig, ax = plt.subplots()
for solver in sorted(series):
    xs = sorted(series[solver])
    means = [sum(series[solver][x]) / len(series[solver][x]) for x in xs]
    ax.plot(xs, means, marker="o", label=solver)
ax.set_xlabel(X_COLUMN)
ax.set_ylabel("mean " + Y_COLUMN)
ax.legend()
fig.savefig(CSV_PATH + ".png", dpi=150)
print("wrote", CSV_PATH + ".png")
'''


def emit_plot_script(csv_name: str, mode: str) -> str:
    """Standalone script that renders mean curves per solver."""
    if mode == "sweep-sr":
        x_column, y_column = "sr", "relerr"
    elif mode == "sweep-iters":
        x_column, y_column = "iter", "relerr"
    else:
        raise ValueError(f"unknown plot mode {mode!r}")
    return _PLOT_TEMPLATE.format(csv_path=csv_name, x_column=x_column, y_column=y_column)


def synthetic_image(height: int = 128, width: int = 128, seed: int = 0) -> np.ndarray:
    """Piecewise-smooth 8-bit test image: blockwise offsets over a
    smooth field, for experiments that need a known clean reference."""
    rng = substream(seed, 7)
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    smooth = (
        128.0
        + 45.0 * np.sin(2.0 * np.pi * rows / height)
        + 35.0 * np.cos(2.0 * np.pi * cols / width)
    )
    block = 32
    for r0 in range(0, height, block):
        for c0 in range(0, width, block):
            smooth[r0 : r0 + block, c0 : c0 + block] += rng.uniform(-25.0, 25.0)
    return np.clip(np.round(smooth), 0, 255).astype(np.uint8)


def add_noise_snr(image, snr_db: float, seed) -> np.ndarray:
    """Add white Gaussian noise at the given SNR (image variance over
    noise variance, in dB); returns a float image, not clipped."""
    x = np.asarray(image, dtype=float)
    signal_var = float(x.var())
    noise_var = signal_var / (10.0 ** (snr_db / 10.0))
    keys = seed if isinstance(seed, (tuple, list)) else (seed,)
    rng = substream(*keys, _TAG_NOISE)
    return x + math.sqrt(noise_var) * rng.standard_normal(x.shape)


def image_ssim(a, b, side: int = 8, c1: float = (0.01 * 255.0) ** 2, c2: float = (0.03 * 255.0) ** 2) -> float:
    """Mean single-window SSIM over non-overlapping square tiles."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError("need two equal-shape images")
    scores = []
    for r in range(0, a.shape[0] - side + 1, side):
        for c in range(0, a.shape[1] - side + 1, side):
            scores.append(
                ssim_global(
                    a[r : r + side, c : c + side].reshape(-1),
                    b[r : r + side, c : c + side].reshape(-1),
                    c1,
                    c2,
                )
            )
    return float(np.mean(scores))
