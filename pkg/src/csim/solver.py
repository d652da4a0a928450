"""ADMM solver for missing-sample recovery under the convex similarity index.

Solves, over coefficients s, signal x, and slack z,

    minimize  csim(z) + l1_weight * ||s||_1 + slack_ridge * ||z||^2
    subject to  x = D s  and  z = M x - y

where M keeps the observed samples of x.  Each subproblem has a closed
form: the x system is diagonal, the s step is one soft-thresholded
gradient step on a majorizing surrogate (with backtracking on the
surrogate constant), and the z system is diagonal-plus-rank-one.  The
l1 weight optionally decays geometrically across iterations
(continuation) and observed samples can be re-imposed on x every
iteration (projection); disabling both gives the plain ADMM whose fixed
point satisfies the stationarity system checked by `kkt_residuals`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import CsimKernel, CsimParams, apply_kernel, csim_stats
from .dictionaries import spectral_norm_sq
from .signals import SamplingMask, apply_mask

__all__ = [
    "SolverConfig",
    "RecoveryResult",
    "BacktrackingLimitError",
    "NonFiniteError",
    "soft_threshold",
    "x_update",
    "projection",
    "s_update_backtracking",
    "z_update",
    "multipliers_update",
    "alpha_schedule",
    "solve",
    "kkt_residuals",
]

_BACKTRACK_CAP = 64


class BacktrackingLimitError(RuntimeError):
    """Backtracking grew the surrogate constant 64 times without the
    majorization check passing; the configuration is inconsistent."""


class NonFiniteError(RuntimeError):
    """An iterate left the finite range."""


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters; ``None`` fields are derived at solve time.

    Derivations follow the reference experiment protocol: with sampling
    ratio m/n, rho1 = 0.4 m/n and rho2 = 2 m/n; var_weight = n - 1 with
    mean_weight = 0.25 var_weight; majorizer0 = 1.05 * ||D||^2.  The l1
    weight starts at l1_init_scale * max|D.T y| (floored at
    l1_weight_min) and decays by l1_decay per iteration while
    ``continuation`` is on.  ``project_observed`` re-imposes the known
    samples on x each iteration; turn both flags off (see ``analysis``)
    to run the plain ADMM with a fixed l1 weight.
    """

    rho1: float | None = None
    rho2: float | None = None
    slack_ridge: float = 1.0
    majorizer_growth: float = 1.1
    majorizer0: float | None = None
    l1_decay: float = 0.95
    l1_init_scale: float = 0.1
    l1_weight_min: float = 1e-4
    max_iter: int = 50
    mean_weight: float | None = None
    var_weight: float | None = None
    feasibility_tol: float = 1e-6
    continuation: bool = True
    project_observed: bool = True
    l1_weight: float | None = None
    record_iterates: bool = False

    @classmethod
    def analysis(cls, l1_weight: float, **kwargs) -> "SolverConfig":
        """Fixed-l1-weight, no-projection configuration (the regime in
        which the iteration provably reaches the stationarity system)."""
        return cls(
            continuation=False,
            project_observed=False,
            l1_weight=float(l1_weight),
            **kwargs,
        )


def effective_config(config: SolverConfig, mask: SamplingMask, D) -> dict:
    """Concrete value of every hyperparameter for a given problem."""
    n = mask.n
    ratio = mask.m / n
    atoms = np.asarray(getattr(D, "atoms", D), dtype=float)
    gram_norm = getattr(D, "spectral_norm_sq", None)
    if gram_norm is None:
        gram_norm = spectral_norm_sq(atoms)
    var_weight = config.var_weight if config.var_weight is not None else float(n - 1)
    mean_weight = (
        config.mean_weight if config.mean_weight is not None else 0.25 * var_weight
    )
    rho1 = config.rho1 if config.rho1 is not None else 0.4 * ratio
    rho2 = config.rho2 if config.rho2 is not None else 2.0 * ratio
    majorizer0 = (
        config.majorizer0 if config.majorizer0 is not None else 1.05 * gram_norm
    )
    out = {
        "rho1": float(rho1),
        "rho2": float(rho2),
        "slack_ridge": float(config.slack_ridge),
        "majorizer_growth": float(config.majorizer_growth),
        "majorizer0": float(majorizer0),
        "l1_decay": float(config.l1_decay),
        "l1_init_scale": float(config.l1_init_scale),
        "l1_weight_min": float(config.l1_weight_min),
        "max_iter": int(config.max_iter),
        "mean_weight": float(mean_weight),
        "var_weight": float(var_weight),
        "feasibility_tol": float(config.feasibility_tol),
        "continuation": bool(config.continuation),
        "project_observed": bool(config.project_observed),
        "l1_weight": None if config.l1_weight is None else float(config.l1_weight),
        "record_iterates": bool(config.record_iterates),
        "gram_norm": float(gram_norm),
    }
    if not out["rho1"] > 0 or not out["rho2"] > 0:
        raise ValueError("penalty parameters must be positive")
    if out["slack_ridge"] < 0:
        raise ValueError("slack_ridge must be nonnegative")
    if not out["majorizer_growth"] > 1:
        raise ValueError("majorizer_growth must exceed 1")
    if not 0 < out["l1_decay"] < 1:
        raise ValueError("l1_decay must lie in (0, 1)")
    if not out["l1_weight_min"] > 0:
        raise ValueError("l1_weight_min must be positive")
    if out["max_iter"] < 1:
        raise ValueError("max_iter must be positive")
    if out["majorizer0"] <= out["gram_norm"]:
        raise ValueError("majorizer0 must exceed the squared spectral norm of D")
    return out


@dataclass
class RecoveryResult:
    """Solve outcome with per-iteration diagnostics.

    ``primal_residuals[t]`` is ||x - D s|| and ``slack_residuals[t]`` is
    ||z - M x + y|| after iteration t; ``objectives[t]`` is the problem
    objective csim(z) + l1_weight ||s||_1 + slack_ridge ||z||^2 at the
    iterate (with the l1 weight current at that iteration).
    ``elapsed_ms`` is cumulative wall time.  Baseline solvers reuse this
    type with ``slack_residuals`` and the final duals set to None.
    """

    x_hat: np.ndarray
    s_hat: np.ndarray
    iterations: int
    primal_residuals: np.ndarray
    slack_residuals: np.ndarray | None
    objectives: np.ndarray
    elapsed_ms: np.ndarray
    iterates: list[np.ndarray] | None = None
    final_slack: np.ndarray | None = None
    final_dual_x: np.ndarray | None = None
    final_dual_z: np.ndarray | None = None
    l1_weight_final: float | None = None
    majorizer_final: float | None = None


def soft_threshold(v, tau: float) -> np.ndarray:
    """Componentwise sign(v) * max(|v| - tau, 0)."""
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def x_update(b, mask: SamplingMask, rho1: float, rho2: float) -> np.ndarray:
    """Solve (rho1 I + rho2 M.T M) x = b; the system is diagonal, so
    observed entries divide by rho1 + rho2 and the rest by rho1."""
    x = np.asarray(b, dtype=float) / rho1
    x[mask.observed] = b[mask.observed] / (rho1 + rho2)
    return x


def projection(x, y, mask: SamplingMask) -> np.ndarray:
    """Replace the observed entries of x by the corresponding samples of y."""
    out = np.array(x, dtype=float)
    out[mask.observed] = np.asarray(y, dtype=float)[mask.observed]
    return out


def _coupling_target(x, dual_x, rho1: float) -> np.ndarray:
    return np.asarray(x, dtype=float) + np.asarray(dual_x, dtype=float) / rho1


def _s_objective(s, atoms, target, l1_over_rho) -> float:
    r = target - atoms @ s
    return 0.5 * float(r @ r) + l1_over_rho * float(np.abs(s).sum())


def _s_surrogate(s, s0, residual0, grad0, majorizer, l1_over_rho) -> float:
    d = s - s0
    return (
        0.5 * float(residual0 @ residual0)
        + float(d @ grad0)
        + 0.5 * majorizer * float(d @ d)
        + l1_over_rho * float(np.abs(s).sum())
    )


def s_update_backtracking(
    s,
    x,
    dual_x,
    D,
    rho1: float,
    l1_weight: float,
    majorizer: float,
    growth: float,
) -> tuple[np.ndarray, float, int]:
    """One majorize-minimize step on the s subproblem.

    Proposes a soft-thresholded gradient step with the current surrogate
    constant; if the true subproblem objective exceeds the surrogate
    value at the proposal, the constant is grown and the step retried.
    Returns (new s, accepted constant, number of retries).  The accepted
    step never increases the subproblem objective.
    """
    atoms = np.asarray(getattr(D, "atoms", D), dtype=float)
    s = np.asarray(s, dtype=float)
    target = _coupling_target(x, dual_x, rho1)
    residual0 = target - atoms @ s
    grad0 = -(atoms.T @ residual0)
    l1_over_rho = l1_weight / rho1

    retries = 0
    while True:
        candidate = soft_threshold(s - grad0 / majorizer, l1_over_rho / majorizer)
        value = _s_objective(candidate, atoms, target, l1_over_rho)
        bound = _s_surrogate(
            candidate, s, residual0, grad0, majorizer, l1_over_rho
        )
        if not (np.isfinite(value) and np.isfinite(bound)):
            raise NonFiniteError("non-finite value in the coefficient update")
        if value <= bound + 1e-12 * (1.0 + abs(value)):
            return candidate, majorizer, retries
        retries += 1
        if retries > _BACKTRACK_CAP:
            raise BacktrackingLimitError(
                "majorization never held after 64 growth steps; "
                "check the surrogate constant and dictionary scaling"
            )
        majorizer *= growth


def z_update(
    c,
    kernel: CsimKernel,
    rho2: float,
    slack_ridge: float,
) -> np.ndarray:
    """Solve (rho2 I + 2 (W + slack_ridge I)) z = c in O(n).

    The system matrix is diagonal-plus-rank-one, so its inverse is a
    scale plus a rank-one correction.
    """
    c = np.asarray(c, dtype=float)
    diag = rho2 + 2.0 * kernel.diag_coef + 2.0 * slack_ridge
    ones = 2.0 * kernel.ones_coef
    full = diag + kernel.n * ones
    if full <= 0:
        raise AssertionError("slack system lost positive definiteness")
    return (c - (ones * float(c.sum()) / full)) / diag


def multipliers_update(
    dual_x,
    dual_z,
    coupling_residual,
    slack_residual,
    rho1: float,
    rho2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-ascent step on the duals: add rho times each residual."""
    return dual_x + rho1 * coupling_residual, dual_z + rho2 * slack_residual


def alpha_schedule(l1_weight: float, decay: float, floor: float) -> float:
    """Geometric decay of the l1 weight, floored."""
    return max(decay * l1_weight, floor)


def solve(y, mask: SamplingMask, D, config: SolverConfig | None = None) -> RecoveryResult:
    """Run the full iteration from zero initial iterates.

    ``y`` is read only at the observed positions.  Stops at ``max_iter``
    or as soon as both feasibility residuals drop below
    ``feasibility_tol``, whichever comes first.
    """
    if config is None:
        config = SolverConfig()
    atoms = np.asarray(getattr(D, "atoms", D), dtype=float)
    n, p = atoms.shape
    if mask.n != n:
        raise ValueError("mask does not match the dictionary dimension")
    cfg = effective_config(config, mask, D)
    y = apply_mask(y, mask)
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("observed samples contain non-finite values")
    obs = mask.observed

    params = CsimParams(cfg["mean_weight"], cfg["var_weight"], n)
    kernel = CsimKernel(params)
    rho1, rho2 = cfg["rho1"], cfg["rho2"]
    ridge = cfg["slack_ridge"]

    if cfg["l1_weight"] is not None:
        l1_weight = cfg["l1_weight"]
    else:
        l1_weight = cfg["l1_init_scale"] * float(np.abs(atoms.T @ y).max())
        l1_weight = max(l1_weight, cfg["l1_weight_min"])
    majorizer = cfg["majorizer0"]

    s = np.zeros(p)
    z = np.zeros(n)
    dual_x = np.zeros(n)
    dual_z = np.zeros(n)
    synthesized = atoms @ s

    primal_hist: list[float] = []
    slack_hist: list[float] = []
    objective_hist: list[float] = []
    elapsed: list[float] = []
    iterates: list[np.ndarray] | None = [] if cfg["record_iterates"] else None

    start = time.perf_counter()
    iterations = 0
    for _ in range(cfg["max_iter"]):
        b = rho1 * synthesized - dual_x
        b[obs] += rho2 * (z[obs] + y[obs]) + dual_z[obs]
        x = x_update(b, mask, rho1, rho2)
        if cfg["project_observed"]:
            x = projection(x, y, mask)

        s, majorizer, _ = s_update_backtracking(
            s, x, dual_x, atoms, rho1, l1_weight, majorizer, cfg["majorizer_growth"]
        )
        synthesized = atoms @ s

        masked_x = np.zeros(n)
        masked_x[obs] = x[obs]
        c = rho2 * (masked_x - y) - dual_z
        z = z_update(c, kernel, rho2, ridge)

        coupling_residual = x - synthesized
        slack_residual = z - masked_x + y
        dual_x, dual_z = multipliers_update(
            dual_x, dual_z, coupling_residual, slack_residual, rho1, rho2
        )

        iterations += 1
        r1 = float(np.linalg.norm(coupling_residual))
        r2 = float(np.linalg.norm(slack_residual))
        primal_hist.append(r1)
        slack_hist.append(r2)
        objective_hist.append(
            csim_stats(z, params)
            + l1_weight * float(np.abs(s).sum())
            + ridge * float(z @ z)
        )
        if cfg["continuation"]:
            l1_weight = alpha_schedule(
                l1_weight, cfg["l1_decay"], cfg["l1_weight_min"]
            )
        elapsed.append((time.perf_counter() - start) * 1e3)
        if iterates is not None:
            iterates.append(s.copy())

        if not (
            np.isfinite(r1)
            and np.isfinite(r2)
            and np.all(np.isfinite(s))
            and np.all(np.isfinite(z))
        ):
            raise NonFiniteError(f"non-finite iterate at iteration {iterations}")
        if r1 < cfg["feasibility_tol"] and r2 < cfg["feasibility_tol"]:
            break

    return RecoveryResult(
        x_hat=x,
        s_hat=s,
        iterations=iterations,
        primal_residuals=np.asarray(primal_hist),
        slack_residuals=np.asarray(slack_hist),
        objectives=np.asarray(objective_hist),
        elapsed_ms=np.asarray(elapsed),
        iterates=iterates,
        final_slack=z,
        final_dual_x=dual_x,
        final_dual_z=dual_z,
        l1_weight_final=l1_weight,
        majorizer_final=majorizer,
    )


def kkt_residuals(
    result: RecoveryResult,
    mask: SamplingMask,
    kernel: CsimKernel,
    slack_ridge: float,
) -> tuple[float, float]:
    """Stationarity gaps at the returned iterate.

    Returns (||2 (W + slack_ridge I) z + dual_z||,
    ||dual_x - M.T dual_z||); both vanish at an optimum of the fixed-
    weight problem.
    """
    z = result.final_slack
    dual_x = result.final_dual_x
    dual_z = result.final_dual_z
    if z is None or dual_x is None or dual_z is None:
        raise ValueError("result does not carry final duals")
    grad_z = 2.0 * (apply_kernel(z, kernel) + slack_ridge * z) + dual_z
    masked_dual = np.zeros(mask.n)
    masked_dual[mask.observed] = dual_z[mask.observed]
    return float(np.linalg.norm(grad_z)), float(np.linalg.norm(dual_x - masked_dual))
