"""Command-line driver.

Subcommands: recover, denoise, sweep-sr, sweep-iters, params, dict-info.
Exit codes: 0 success, 2 bad arguments, 3 runtime failure.  A flat
key=value config file can preset solver options; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import CsimParams, sensitivity_ratio
from .denoise import denoise_image
from .dictionaries import Dictionary
from .experiments import (
    ExperimentSpec,
    build_dictionary,
    emit_plot_script,
    image_ssim,
    run_solver,
    sweep_iters,
    sweep_sr,
)
from .fileio import load_csv_vector, load_pgm, save_csv_vector, save_pgm
from .metrics import psnr, relative_error
from .paramselect import select_ratio
from .signals import PatchGrid, apply_mask, extract_patches, random_mask, reassemble, substream
from .solver import SolverConfig, effective_config, solve

_SOLVER_KEYS = {
    "rho1": float,
    "rho2": float,
    "slack_ridge": float,
    "majorizer_growth": float,
    "majorizer0": float,
    "l1_decay": float,
    "l1_init_scale": float,
    "l1_weight_min": float,
    "max_iter": int,
    "mean_weight": float,
    "var_weight": float,
    "feasibility_tol": float,
    "l1_weight": float,
    "continuation": lambda v: v.lower() in ("1", "true", "yes"),
    "project_observed": lambda v: v.lower() in ("1", "true", "yes"),
}


def _load_config_file(path) -> dict:
    """Flat key = value lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _SOLVER_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _SOLVER_KEYS[key](value)
    return out


def _solver_config(args) -> SolverConfig:
    options = {}
    if getattr(args, "config", None):
        options.update(_load_config_file(args.config))
    if getattr(args, "max_iter", None) is not None:
        options["max_iter"] = args.max_iter
    return SolverConfig(**options)


def _add_dict_args(parser, default_n=64, default_p=None):
    parser.add_argument("--dict", choices=("dct", "haar-wp"), default="dct")
    parser.add_argument("--n", type=int, default=default_n)
    parser.add_argument("--p", type=int, default=default_p)


def _dictionary_from_args(args) -> Dictionary:
    p = args.p if args.p is not None else args.n
    return build_dictionary(args.dict, args.n, p)


def _cmd_dict_info(args) -> int:
    D = _dictionary_from_args(args)
    gram = D.atoms.T @ D.atoms
    ortho = float(np.abs(gram - np.eye(D.p)).max()) if D.n == D.p else float("nan")
    print(f"dict: {args.dict}  n={D.n}  p={D.p}")
    print(f"coherence: {D.coherence:.12g}")
    print(f"spectral_norm_sq: {D.spectral_norm_sq:.12g}")
    if D.n == D.p:
        print(f"max |gram - identity|: {ortho:.3e}")
    if args.export:
        D.to_csv(args.export)
        print(f"wrote atoms to {args.export}")
    return 0


def _cmd_params(args) -> int:
    D = _dictionary_from_args(args)
    selection = select_ratio(D, kappa_max=args.kappa_max, delta=args.delta, k=args.k)
    kappa_b = selection.kappa_bound
    rip_b = selection.rip_bound
    print(f"dict: {args.dict}  n={D.n}  p={D.p}")
    print(f"coherence: {D.coherence:.12g}")
    print(f"spectral_norm_sq: {D.spectral_norm_sq:.12g}")
    if kappa_b.feasible:
        print(f"kappa bound: ratio <= {kappa_b.ratio_upper:.6g}")
    else:
        print(f"kappa bound: infeasible ({kappa_b.reason})")
    if rip_b is None:
        print("rip bound: skipped (support size out of range)")
    elif rip_b.feasible:
        print(f"rip bound: ratio <= {rip_b.ratio_upper:.6g}")
    else:
        print(f"rip bound: infeasible ({rip_b.violated})")
    print(f"selected ratio var_weight/mean_weight: {selection.ratio:.6g} [{selection.source}]")
    params = CsimParams(
        mean_weight=(D.n - 1) / selection.ratio, var_weight=float(D.n - 1), n=D.n
    )
    print(f"sensitivity ratio: {sensitivity_ratio(params):.9g}")
    return 0


def _echo_config(log, config: SolverConfig, mask, D) -> None:
    values = effective_config(config, mask, D)
    log.write(json.dumps({"event": "config", **values}, sort_keys=True) + "\n")


def _recover_one(args, config, y, mask, D):
    if args.solver == "csim-alm":
        return solve(y, mask, D, config)
    return run_solver(args.solver, y, mask, D, max_iter=config.max_iter)


def _cmd_recover(args) -> int:
    config = _solver_config(args)
    out_log = args.out + ".log.jsonl"
    if args.input.endswith(".pgm"):
        image = load_pgm(args.input).astype(float)
        grid = PatchGrid(image.shape[0], image.shape[1], side=8, stride=8)
        patches = extract_patches(image, grid)
        n = grid.side * grid.side
        D = build_dictionary(args.dict, n, args.p if args.p is not None else n)
        m = max(1, min(n, int(round(args.sr * n))))
        recovered = np.empty_like(patches)
        with open(out_log, "w", newline="\n") as log:
            first_mask = random_mask(n, m, substream(args.seed, 0, 2, m))
            _echo_config(log, config, first_mask, D)
            for i, patch in enumerate(patches):
                mask = random_mask(n, m, substream(args.seed, i, 2, m))
                y = apply_mask(patch, mask)
                result = _recover_one(args, config, y, mask, D)
                recovered[i] = result.x_hat
                log.write(
                    json.dumps(
                        {
                            "event": "patch",
                            "index": i,
                            "iterations": result.iterations,
                            "final_residual": float(result.primal_residuals[-1]),
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
            restored = reassemble(recovered, grid)
            scores = {
                "event": "result",
                "psnr_db": min(psnr(restored, image), 99.0),
            }
            log.write(json.dumps(scores, sort_keys=True) + "\n")
        save_pgm(args.out, np.clip(np.round(restored), 0, 255))
    else:
        x = load_csv_vector(args.input)
        n = x.size
        D = build_dictionary(args.dict, n, args.p if args.p is not None else n)
        m = max(1, min(n, int(round(args.sr * n))))
        mask = random_mask(n, m, substream(args.seed, 0, 2, m))
        y = apply_mask(x, mask)
        with open(out_log, "w", newline="\n") as log:
            _echo_config(log, config, mask, D)
            result = _recover_one(args, config, y, mask, D)
            for t in range(result.iterations):
                entry = {
                    "event": "iteration",
                    "t": t + 1,
                    "coupling_residual": float(result.primal_residuals[t]),
                }
                if result.slack_residuals is not None:
                    entry["slack_residual"] = float(result.slack_residuals[t])
                log.write(json.dumps(entry, sort_keys=True) + "\n")
            scores = {
                "event": "result",
                "iterations": result.iterations,
                "psnr_db": min(psnr(result.x_hat, x, peak=max(x.max() - x.min(), 1.0)), 99.0),
                "rel_data_fidelity": relative_error(result.x_hat, x)
                if np.linalg.norm(x) > 0
                else None,
            }
            log.write(json.dumps(scores, sort_keys=True) + "\n")
        save_csv_vector(args.out, result.x_hat)
    print(f"wrote {args.out} and {out_log}")
    return 0


def _cmd_denoise(args) -> int:
    image = load_pgm(args.input).astype(float)
    params = CsimParams.defaults(64)  # quarter mean/var ratio on 8x8 patches
    out = denoise_image(
        image,
        m=args.m_taps,
        sigma_n_sq=args.sigma_n**2,
        params=params,
        method=args.method,
    )
    save_pgm(args.out, np.clip(np.round(out), 0, 255))
    log_path = args.out + ".log.jsonl"
    with open(log_path, "w", newline="\n") as log:
        log.write(
            json.dumps(
                {
                    "event": "config",
                    "method": args.method,
                    "m_taps": args.m_taps,
                    "sigma_n": args.sigma_n,
                },
                sort_keys=True,
            )
            + "\n"
        )
        entry = {"event": "result"}
        if args.reference:
            clean = load_pgm(args.reference).astype(float)
            entry["psnr_db"] = min(psnr(out, clean), 99.0)
            entry["ssim"] = image_ssim(out, clean)
            entry["input_psnr_db"] = min(psnr(image, clean), 99.0)
        log.write(json.dumps(entry, sort_keys=True) + "\n")
    print(f"wrote {args.out} and {log_path}")
    return 0


def _run_sweep(args, mode: str) -> int:
    spec = ExperimentSpec(
        dict_kind=args.dict,
        n=args.n,
        p=args.p if args.p is not None else args.n,
        srs=tuple(args.sr) if args.sr else (0.4, 0.6, 0.8),
        trials=args.trials,
        seed=args.seed,
        solvers=tuple(args.solver) if args.solver else ("csim-alm", "fista"),
        max_iter=args.max_iter if args.max_iter is not None else 50,
        timing=args.timing,
        corpus=tuple(getattr(args, "corpus", None) or ()),
    )
    text = sweep_sr(spec) if mode == "sweep-sr" else sweep_iters(spec)
    with open(args.out, "w", newline="\n") as fh:
        fh.write(text)
    script_path = args.out + ".plot.py"
    with open(script_path, "w", newline="\n") as fh:
        fh.write(emit_plot_script(args.out, mode))
    print(f"wrote {args.out} and {script_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csim",
        description="Convex-similarity missing-sample recovery and denoising",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rec = sub.add_parser("recover", help="recover one CSV vector or PGM image")
    p_rec.add_argument("--input", required=True)
    p_rec.add_argument("--out", required=True)
    p_rec.add_argument("--sr", type=float, default=0.8, help="sampling ratio")
    p_rec.add_argument("--seed", type=int, default=0)
    p_rec.add_argument(
        "--solver", choices=("csim-alm", "fista", "iht"), default="csim-alm"
    )
    p_rec.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p_rec.add_argument("--config", default=None, help="key=value config file")
    _add_dict_args(p_rec)
    p_rec.set_defaults(func=_cmd_recover)

    p_den = sub.add_parser("denoise", help="FIR-denoise a PGM image")
    p_den.add_argument("--input", required=True)
    p_den.add_argument("--out", required=True)
    p_den.add_argument("--sigma-n", dest="sigma_n", type=float, required=True)
    p_den.add_argument("--method", choices=("mse", "csim"), default="csim")
    p_den.add_argument("--m-taps", dest="m_taps", type=int, default=6)
    p_den.add_argument("--reference", default=None, help="clean image for scoring")
    p_den.set_defaults(func=_cmd_denoise)

    for mode in ("sweep-sr", "sweep-iters"):
        p_sw = sub.add_parser(mode, help=f"batch experiment: {mode}")
        _add_dict_args(p_sw)
        p_sw.add_argument("--sr", type=float, action="append", default=None)
        p_sw.add_argument("--trials", type=int, default=100)
        p_sw.add_argument("--seed", type=int, default=0)
        p_sw.add_argument(
            "--solver",
            action="append",
            choices=("csim-alm", "fista", "iht"),
            default=None,
        )
        p_sw.add_argument("--max-iter", dest="max_iter", type=int, default=None)
        p_sw.add_argument("--out", required=True)
        if mode == "sweep-sr":
            p_sw.add_argument(
                "--timing",
                action="store_true",
                help="include wall-clock runtimes (breaks byte reproducibility)",
            )
            p_sw.add_argument(
                "--corpus",
                action="append",
                default=None,
                help="PGM file or directory to draw patches from (repeatable); "
                "default is synthetic exactly-sparse signals",
            )
            p_sw.set_defaults(func=lambda a: _run_sweep(a, "sweep-sr"))
        else:
            p_sw.add_argument(
                "--no-timing",
                dest="timing",
                action="store_false",
                help="zero the elapsed column for byte reproducibility",
            )
            p_sw.set_defaults(timing=True, func=lambda a: _run_sweep(a, "sweep-iters"))

    p_par = sub.add_parser("params", help="report weight-ratio bounds")
    _add_dict_args(p_par)
    p_par.add_argument("--kappa-max", dest="kappa_max", type=float, default=4.0)
    p_par.add_argument("--delta", type=float, default=0.4)
    p_par.add_argument("--k", type=int, default=None)
    p_par.set_defaults(func=_cmd_params)

    p_di = sub.add_parser("dict-info", help="describe a dictionary")
    _add_dict_args(p_di)
    p_di.add_argument("--export", default=None, help="write atoms to CSV")
    p_di.set_defaults(func=_cmd_dict_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
