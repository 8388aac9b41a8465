# mcsense/api/services/mc_solvers.py - Majorization-Minimization matrix completion solvers

import logging
from typing import List, Optional, Tuple

import numpy as np

from ...models import Observations, SolveResult, SolverConfig, SolverState, TraceRow
from .errors import InvalidArgumentError, NumericalFailureError
from .linalg import singular_values, svd
from .sampling import restrict, scatter

logger = logging.getLogger(__name__)

AUTO_LAMBDA_FACTOR = 0.99
NOISELESS_SIGMA_FACTOR = 1e-6


# ---------------------------------------------------------------- data step

def landweber_step(x: np.ndarray, obs: Observations, alpha: float = 1.0) -> np.ndarray:
    """x + (1/alpha) M^T (y - M x); alpha = 1 writes the observations in place."""
    x = np.asarray(x, dtype=np.float64)
    mask = obs.mask
    if x.shape != (mask.rows, mask.cols):
        raise InvalidArgumentError(f"iterate shape {x.shape} does not match mask ({mask.rows}, {mask.cols})")
    if alpha < 1:
        raise InvalidArgumentError(f"alpha must be at least 1 for a masking operator, got {alpha}")

    rows, cols = mask.indices[:, 0], mask.indices[:, 1]
    step = x.copy()
    if alpha == 1:
        step[rows, cols] = obs.values
    else:
        step[rows, cols] += (obs.values - x[rows, cols]) / alpha
    return step


# ---------------------------------------------------------------- singular value rules

def _check_threshold(t: float) -> None:
    if t < 0:
        raise InvalidArgumentError(f"threshold must be non-negative, got {t}")


def soft_threshold(s: np.ndarray, t: float) -> np.ndarray:
    _check_threshold(t)
    return np.maximum(np.asarray(s, dtype=np.float64) - t, 0.0)


def hard_threshold(s: np.ndarray, t: float) -> np.ndarray:
    """Keep entries strictly above t."""
    _check_threshold(t)
    s = np.asarray(s, dtype=np.float64)
    return np.where(s > t, s, 0.0)


def hard_threshold_level(lam: float, alpha: float, rule: str = "paper") -> float:
    """lambda/(2 alpha) ("paper", alias "half"), or sqrt(lambda/alpha), the exact minimiser of the decoupled cost ("derived")."""
    if rule in ("paper", "half"):
        return lam / (2 * alpha)
    if rule == "derived":
        return float(np.sqrt(lam / alpha))
    raise InvalidArgumentError(f"Unknown hard-threshold rule '{rule}'")


def _nonconvex_weights(s_prev: np.ndarray, p: float, floor: float) -> np.ndarray:
    """|s_prev|^(p-2), or 0 where s_prev is at or below the floor (those entries are absorbed)."""
    weights = np.zeros_like(s_prev)
    live = s_prev > floor
    weights[live] = s_prev[live] ** (p - 2)
    return weights


def nonconvex_shrink(s_next: np.ndarray, s_prev: np.ndarray, lam: float, alpha: float,
                     p: float, weight_floor: float = 1e-12) -> np.ndarray:
    """s_next / (1 + (lambda/2 alpha) |s_prev|^(p-2)), with saturated weights mapped to 0."""
    if not 0 < p < 1:
        raise InvalidArgumentError(f"non-convex shrinkage needs 0 < p < 1, got {p}")
    s_next = np.asarray(s_next, dtype=np.float64)
    s_prev = np.asarray(s_prev, dtype=np.float64)
    if s_next.shape != s_prev.shape:
        raise InvalidArgumentError(f"spectra differ in length: {s_next.shape} vs {s_prev.shape}")
    if lam == 0:
        return s_next.copy()

    floor = weight_floor * max(s_next.max(initial=0.0), s_prev.max(initial=0.0))
    live = s_prev > floor
    shrunk = np.zeros_like(s_next)
    weights = _nonconvex_weights(s_prev, p, floor)
    shrunk[live] = s_next[live] / (1 + lam / (2 * alpha) * weights[live])
    return shrunk


def _shrink_spectrum(s: np.ndarray, s_prev: np.ndarray, lam: float, cfg: SolverConfig,
                     hard_rule: Optional[str] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if cfg.p == 1:
        return soft_threshold(s, lam / (2 * cfg.alpha)), None
    if cfg.p == 0:
        return hard_threshold(s, hard_threshold_level(lam, cfg.alpha, hard_rule or cfg.hard_rule)), None
    shrunk = nonconvex_shrink(s, s_prev, lam, cfg.alpha, cfg.p, cfg.weight_floor)
    floor = cfg.weight_floor * max(s.max(initial=0.0), s_prev.max(initial=0.0))
    return shrunk, _nonconvex_weights(s_prev, cfg.p, floor)


def _shrink_factors(factors: Tuple[np.ndarray, np.ndarray, np.ndarray], s_prev: Optional[np.ndarray],
                    lam: float, cfg: SolverConfig, hard_rule: Optional[str] = None):
    """Apply the p-dependent rule to an SVD and reassemble; s_prev=None weights from the spectrum itself."""
    u, s, vt = factors
    shrunk, weights = _shrink_spectrum(s, s if s_prev is None else s_prev, lam, cfg, hard_rule)
    return (u * shrunk) @ vt, shrunk, weights


def sv_update(x_next: np.ndarray, state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """SVD the Landweber iterate, apply the p-dependent rule to its spectrum, reassemble."""
    estimate, _, _ = _shrink_factors(
        svd(np.asarray(x_next, dtype=np.float64)), np.asarray(state.singular_values), state.lam, cfg,
    )
    return estimate


# ---------------------------------------------------------------- objective

def penalty(s: np.ndarray, p: float) -> float:
    """Nuclear norm (p=1), rank (p=0) or (1/p) sum sigma^p."""
    s = np.asarray(s, dtype=np.float64)
    if p == 1:
        return float(np.sum(s))
    if p == 0:
        return float(np.count_nonzero(s > 0))
    return float(np.sum(s ** p) / p)


def objective(residual: float, s: np.ndarray, lam: float, p: float) -> float:
    return residual ** 2 + lam * penalty(s, p)


def _residual(obs: Observations, x: np.ndarray) -> float:
    return float(np.linalg.norm(obs.values - restrict(obs.mask, x)))


def auto_lambda(obs: Observations) -> float:
    """0.99 * sigma_1 of the zero-filled observation matrix."""
    return AUTO_LAMBDA_FACTOR * float(singular_values(scatter(obs.mask, obs.values))[0])


def residual_target(obs: Observations, noise_std: Optional[float] = None) -> float:
    """sqrt(m) * noise std for noisy data, 1e-6 ||y|| when noiseless."""
    if noise_std:
        return float(np.sqrt(obs.mask.size) * noise_std)
    return NOISELESS_SIGMA_FACTOR * float(np.linalg.norm(obs.values))


# ---------------------------------------------------------------- inner loop

def _mm_step(obs: Observations, x: np.ndarray, s_x: np.ndarray, current: float, lam: float,
             cfg: SolverConfig, seeded: bool = False):
    """One Landweber + singular value update; returns (iterate, spectrum, weights, residual, objective)."""
    factors = svd(landweber_step(x, obs, cfg.alpha))
    candidate, shrunk, weights = _shrink_factors(factors, None if seeded else s_x, lam, cfg)
    cand_residual = _residual(obs, candidate)
    cand_objective = objective(cand_residual, shrunk, lam, cfg.p)

    inexact = seeded or (cfg.p == 0 and cfg.hard_rule == "paper")
    if cfg.monotone and inexact and cand_objective > current:
        # fall back to the exact minimiser of the majoriser
        candidate, shrunk, weights = _shrink_factors(factors, s_x, lam, cfg, hard_rule="derived")
        cand_residual = _residual(obs, candidate)
        cand_objective = objective(cand_residual, shrunk, lam, cfg.p)

    if not np.isfinite(cand_objective):
        raise NumericalFailureError("objective became non-finite", {"lambda": lam})
    return candidate, shrunk, weights, cand_residual, cand_objective


def solve_fixed_lambda(obs: Observations, x0: np.ndarray, lam: float, cfg: SolverConfig,
                       s0: Optional[np.ndarray] = None) -> SolverState:
    """Minimise J = ||y - Mx||^2 + lambda * penalty at fixed lambda by MM iterations.

    Stops once (J_k - J_{k+1}) / (J_k + J_{k+1}) drops below cfg.inner_tol.
    """
    if lam <= 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    x = np.array(x0, dtype=np.float64)
    if x.shape != (obs.mask.rows, obs.mask.cols):
        raise InvalidArgumentError(f"initial iterate shape {x.shape} does not match the mask")

    s_x = singular_values(x) if s0 is None else np.asarray(s0, dtype=np.float64)
    residual = _residual(obs, x)
    current = objective(residual, s_x, lam, cfg.p)
    objectives: List[float] = [current]
    residuals: List[float] = [residual]
    weights: Optional[np.ndarray] = None
    nonconvex = 0 < cfg.p < 1

    inner = 0
    for inner in range(1, cfg.max_inner + 1):
        # first step of each loop seeds the weights from the Landweber spectrum
        seeded = nonconvex and inner == 1
        x, s_x, weights, residual, next_objective = _mm_step(obs, x, s_x, current, lam, cfg, seeded)
        total = current + next_objective
        decrease = (current - next_objective) / total if total > 0 else 0.0
        current = next_objective
        objectives.append(current)
        residuals.append(residual)
        if decrease < cfg.inner_tol:
            break

    return SolverState(
        iterate=x,
        lam=lam,
        objective=current,
        residual=residual,
        inner_count=inner,
        singular_values=s_x,
        weights=weights,
        objectives=objectives,
        residuals=residuals,
    )


def polish(obs: Observations, state: SolverState, cfg: SolverConfig) -> SolverState:
    """Continue MM steps at the state's lambda until ||x_{k+1} - x_k|| <= polish_tol * ||x_{k+1}||.

    Capped at cfg.max_polish steps; counts, objectives and residuals extend the given state.
    """
    x = np.array(state.iterate)
    s_x = np.asarray(state.singular_values)
    current, residual, weights = state.objective, state.residual, state.weights
    objectives: List[float] = []
    residuals: List[float] = []

    for _ in range(cfg.max_polish):
        nxt, s_x, weights, residual, current = _mm_step(obs, x, s_x, current, state.lam, cfg)
        objectives.append(current)
        residuals.append(residual)
        moved = float(np.linalg.norm(nxt - x))
        x = nxt
        if moved <= cfg.polish_tol * max(float(np.linalg.norm(x)), 1e-300):
            break

    return state.model_copy(update={
        "iterate": x,
        "objective": current,
        "residual": residual,
        "singular_values": s_x,
        "weights": weights,
        "inner_count": state.inner_count + len(objectives),
        "objectives": state.objectives + objectives,
        "residuals": state.residuals + residuals,
    })


# ---------------------------------------------------------------- cooling loop

def solve(obs: Observations, cfg: SolverConfig) -> SolveResult:
    """Cooling continuation: shrink lambda by dec_fac until ||y - Mx|| <= sigma.

    Once the target is met the iterate is polished at that lambda; if polishing moves the
    residual back above sigma, cooling resumes.
    """
    y = np.asarray(obs.values)
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("observations contain non-finite values")
    if cfg.alpha < 1:
        raise InvalidArgumentError(f"alpha must be at least 1 for a masking operator, got {cfg.alpha}")

    shape = (obs.mask.rows, obs.mask.cols)
    x = np.zeros(shape)
    s_x = np.zeros(min(shape))
    lam = auto_lambda(obs) if cfg.lambda_init == "auto" else float(cfg.lambda_init)
    residual = float(np.linalg.norm(y))
    state = SolverState(
        iterate=x, lam=lam, objective=residual ** 2, residual=residual,
        singular_values=s_x, objectives=[residual ** 2], residuals=[residual],
    )
    lambdas: List[float] = []
    trace: Optional[List[TraceRow]] = [] if cfg.record_trace else None
    total_inner = 0
    outer = 0
    converged = residual <= cfg.sigma

    while not converged and outer < cfg.max_outer:
        outer += 1
        state = solve_fixed_lambda(obs, x, lam, cfg, s0=s_x)
        if state.residual <= cfg.sigma and cfg.max_polish > 0:
            state = polish(obs, state, cfg)
        lambdas.append(lam)
        total_inner += state.inner_count
        if trace is not None:
            trace.extend(
                TraceRow(outer=outer, inner=k, lam=lam, objective=j, residual=r)
                for k, (j, r) in enumerate(zip(state.objectives, state.residuals))
            )
        x, s_x = state.iterate, state.singular_values
        converged = state.residual <= cfg.sigma
        lam *= cfg.dec_fac

    state = state.model_copy(update={"outer_count": outer, "inner_count": total_inner})
    logger.debug(
        f"Solve finished ({cfg.mode}): converged={converged}, outer={outer}, "
        f"inner={total_inner}, residual={state.residual:.3e}"
    )
    return SolveResult(estimate=x, converged=converged, state=state, lambdas=lambdas, trace=trace)
