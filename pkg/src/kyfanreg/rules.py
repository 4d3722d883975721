"""Parameter-choice and rate-prediction rules.

Contains the a priori filter rule alpha = C (delta/rho)^(1/(beta(nu+1))),
the discrepancy principle for continuous alpha (Tikhonov filter, bisection
on the monotone residual) and for iteration stopping, the balancing
equation for weighted-lp (Besov) penalties, the inf-max stochastic Tikhonov
rate predictor, and the effective smoothness exponent solved from
rho^(2 nu / (2 nu + 1)) = 2 nu together with its Lambert-W approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .regularization import SolveReport, Tikhonov, filter_reconstruct
from .special import lambert_w0, reg_gamma_q

__all__ = [
    "AprioriFilter",
    "Discrepancy",
    "DiscrepancyStop",
    "Fixed",
    "DiscrepancyResult",
    "NoFeasibleAlpha",
    "NotReached",
    "NoBracket",
    "BesovBalanceParams",
    "BesovBalanceResult",
    "TikhonovRateModel",
    "RatePrediction",
    "NuEstimate",
    "apriori_filter_alpha",
    "discrepancy_alpha",
    "discrepancy_stop_index",
    "besov_balance_alpha",
    "tikhonov_rate_predict",
    "uniform_source_model",
    "heavy_tail_model",
    "combined_model",
    "nu_effective",
]


# -- rule parameter sets ---------------------------------------------------


@dataclass(frozen=True)
class AprioriFilter:
    """A priori rule alpha = C * (delta_eff / rho)^(1/(beta*(nu+1)))."""

    beta: float
    nu: float
    rho: float
    constant: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not (self.nu >= 0.0):
            raise ValueError(f"nu must be nonnegative, got {self.nu!r}")
        if not (self.rho > 0.0):
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if not (self.constant > 0.0):
            raise ValueError(f"constant must be positive, got {self.constant!r}")


@dataclass(frozen=True)
class Discrepancy:
    """Residual band tau1 * delta <= ||A x_alpha - y|| <= tau2 * delta."""

    tau1: float
    tau2: float

    def __post_init__(self):
        if not (1.0 < self.tau1 <= self.tau2):
            raise ValueError(f"need 1 < tau1 <= tau2, got ({self.tau1!r}, {self.tau2!r})")


@dataclass(frozen=True)
class DiscrepancyStop:
    """Stop an iteration at the first residual <= tau_hat * delta (tau_hat > 2)."""

    tau_hat: float

    def __post_init__(self):
        if not (self.tau_hat > 2.0):
            raise ValueError(f"tau_hat must exceed 2, got {self.tau_hat!r}")


@dataclass(frozen=True)
class Fixed:
    """A fixed regularization parameter, no adaptation."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0.0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")


class NoFeasibleAlpha(RuntimeError):
    """No alpha can place the residual inside the discrepancy band."""


class NotReached(RuntimeError):
    """No iteration index satisfies the stopping criterion."""


class NoBracket(RuntimeError):
    """The balancing equation shows no sign change on the scan grid."""

    def __init__(self, message: str, scan):
        super().__init__(message)
        self.scan = scan


# -- a priori and discrepancy rules -----------------------------------------


def apriori_filter_alpha(delta_eff: float, rule: AprioriFilter) -> float:
    """alpha = C * (delta_eff / rho)^(1/(beta*(nu+1)))."""
    if not (delta_eff > 0.0):
        raise ValueError(f"delta_eff must be positive, got {delta_eff!r}")
    exponent = 1.0 / (rule.beta * (rule.nu + 1.0))
    return rule.constant * (delta_eff / rule.rho) ** exponent


@dataclass(frozen=True)
class DiscrepancyResult:
    alpha: float
    report: SolveReport
    trivial: bool = False


def _tikhonov_residual_norm(op, coeffs: np.ndarray, perp_sq: float, alpha: float) -> float:
    s = op.singular_values
    factor = alpha / (s * s + alpha)  # sigma = 0 components stay in full
    return math.sqrt(float(np.sum((factor * coeffs) ** 2)) + perp_sq)


def discrepancy_alpha(op, y, delta_eff: float, rule: Discrepancy) -> DiscrepancyResult:
    """Choose alpha with tau1*delta <= ||A x_alpha - y|| <= tau2*delta (Tikhonov).

    The Tikhonov residual is continuous and non-decreasing in alpha, so a
    bisection on log(alpha) is exact.  Data with ||y|| <= tau1*delta is
    trivial: the zero solution already satisfies the bound and the sentinel
    alpha = inf is returned.  If even alpha -> 0 leaves the residual above
    tau2*delta the data and noise level are inconsistent
    (:class:`NoFeasibleAlpha`).
    """
    if not (delta_eff > 0.0):
        raise ValueError(f"delta_eff must be positive, got {delta_eff!r}")
    y = np.asarray(y, dtype=float)
    lo_target = rule.tau1 * delta_eff
    hi_target = rule.tau2 * delta_eff
    norm_y = float(np.linalg.norm(y))
    if norm_y <= lo_target:
        report = SolveReport(
            solution=np.zeros(op.solution_dim), iterations=0, final_residual=norm_y
        )
        return DiscrepancyResult(alpha=math.inf, report=report, trivial=True)

    coeffs = op.data_coeffs(y)
    perp_sq = max(norm_y**2 - float(coeffs @ coeffs), 0.0)
    residual_floor = _tikhonov_residual_norm(op, coeffs, perp_sq, 0.0)
    if residual_floor > hi_target:
        raise NoFeasibleAlpha(
            f"minimal attainable residual {residual_floor:.6g} exceeds "
            f"tau2*delta_eff = {hi_target:.6g}"
        )

    sigma1 = float(op.singular_values[0]) if op.singular_values.size else 1.0
    scale = max(sigma1**2, 1e-30)
    hi = scale
    evals = 1
    while _tikhonov_residual_norm(op, coeffs, perp_sq, hi) < lo_target:
        hi *= 10.0
        evals += 1
        if hi > 1e300:
            break
    lo = min(hi, scale * 1e-12)
    while _tikhonov_residual_norm(op, coeffs, perp_sq, lo) > hi_target:
        lo /= 10.0
        evals += 1
        if lo < 1e-300:
            raise NoFeasibleAlpha("residual stays above the band down to alpha = 1e-300")

    alpha = hi
    for _ in range(500):
        alpha = math.sqrt(lo * hi)
        res = _tikhonov_residual_norm(op, coeffs, perp_sq, alpha)
        evals += 1
        if res < lo_target:
            lo = alpha
        elif res > hi_target:
            hi = alpha
        else:
            break
        if hi / lo < 1.0 + 1e-14:
            # zero-width band (tau1 == tau2): accept the bisection limit
            res = _tikhonov_residual_norm(op, coeffs, perp_sq, alpha)
            if not (lo_target * (1.0 - 1e-9) <= res <= hi_target * (1.0 + 1e-9)):
                raise NoFeasibleAlpha(
                    f"bisection collapsed at alpha={alpha:.6g} with residual {res:.6g} "
                    f"outside [{lo_target:.6g}, {hi_target:.6g}]"
                )
            break
    solution = filter_reconstruct(op, y, Tikhonov(alpha))
    final_res = float(np.linalg.norm(op.apply(solution) - y))
    report = SolveReport(solution=solution, iterations=evals, final_residual=final_res)
    return DiscrepancyResult(alpha=alpha, report=report)


def discrepancy_stop_index(residuals, tau_hat: float, delta_eff: float) -> int:
    """Smallest index k with residuals[k] <= tau_hat * delta_eff."""
    res = np.asarray(residuals, dtype=float)
    if res.size == 0:
        raise ValueError("residuals must be non-empty")
    hits = np.nonzero(res <= tau_hat * delta_eff)[0]
    if hits.size == 0:
        raise NotReached(
            f"no residual reaches tau_hat*delta_eff = {tau_hat * delta_eff:.6g} "
            f"(minimum {res.min():.6g})"
        )
    return int(hits[0])


# -- balancing rule for the weighted-lp penalty ------------------------------


@dataclass(frozen=True)
class BesovBalanceParams:
    """Inputs of the balancing equation for the weighted-lp prior.

    eta, m: noise level and data dimension; n: truncation level of the
    basis expansion; p in [1, 2]; rho: prior radius; zeta: smoothness gap;
    beta: operator decay exponent; constant: rate constant in front of the
    error term.
    """

    eta: float
    m: int
    n: int
    p: float
    rho: float
    zeta: float
    beta: float
    constant: float = 1.0

    def __post_init__(self):
        if not (self.eta > 0.0):
            raise ValueError("eta must be positive")
        for name in ("m", "n"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not (1.0 <= self.p <= 2.0):
            raise ValueError("p must lie in [1, 2]")
        for name in ("rho", "zeta", "beta", "constant"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class BesovBalanceResult:
    alpha_tilde: float
    lhs: float
    rhs: float
    gap: float


def _besov_log_term(eta: float, m: int) -> float:
    return min(
        0.0,
        2.0 * math.log(eta)
        + math.log(2.0 * math.pi)
        + 2.0 * math.log(m)
        + m * (1.0 - math.log(2.0)),
    )


def _besov_sides(params: BesovBalanceParams, alpha_tilde: float) -> tuple[float, float]:
    lm = _besov_log_term(params.eta, params.m)
    base = params.m - lm
    rho_p = params.rho**params.p
    err = params.eta * (math.sqrt(base) + math.sqrt(base + alpha_tilde * rho_p / 2.0))
    rho_tilde = params.rho + (rho_p + (2.0 * params.m - lm) / alpha_tilde) ** (1.0 / params.p)
    expo = params.zeta / (params.zeta + params.beta)
    lhs = params.constant * err**expo * rho_tilde ** (1.0 - expo)
    rhs = reg_gamma_q(params.m / 2.0, base) + reg_gamma_q(
        params.n / params.p, alpha_tilde * rho_p / 2.0
    )
    return lhs, rhs


def besov_balance_alpha(
    params: BesovBalanceParams,
    log10_range: tuple[float, float] = (-12.0, 12.0),
    scan_points: int = 481,
) -> BesovBalanceResult:
    """Solve the balancing equation error-term = tail-probability-sum.

    Scans log10(alpha_tilde) over ``log10_range`` for a sign change of
    LHS - RHS (no global monotonicity is assumed), then bisects to a
    relative gap of 1e-8.  Raises :class:`NoBracket` with the scan table
    when no sign change exists.
    """
    grid = np.linspace(log10_range[0], log10_range[1], scan_points)
    diffs = []
    for t in grid:
        lhs, rhs = _besov_sides(params, 10.0**t)
        diffs.append(lhs - rhs)
    diffs = np.asarray(diffs)

    bracket = None
    f_lo = 0.0
    for i in range(len(grid) - 1):
        if diffs[i] == 0.0:
            bracket = (grid[i], grid[i])
            f_lo = 0.0
            break
        if diffs[i] * diffs[i + 1] < 0.0:
            bracket = (grid[i], grid[i + 1])
            f_lo = float(diffs[i])
            break
    if bracket is None:
        raise NoBracket(
            "LHS - RHS has no sign change on the scan grid",
            scan=tuple((10.0**t, float(d)) for t, d in zip(grid, diffs)),
        )

    lo, hi = bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lhs, rhs = _besov_sides(params, 10.0**mid)
        gap = lhs - rhs
        if abs(gap) <= 1e-8 * max(abs(lhs), abs(rhs)):
            return BesovBalanceResult(alpha_tilde=10.0**mid, lhs=lhs, rhs=rhs, gap=gap)
        if (gap > 0.0) == (f_lo > 0.0):
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    lhs, rhs = _besov_sides(params, 10.0**mid)
    return BesovBalanceResult(alpha_tilde=10.0**mid, lhs=lhs, rhs=rhs, gap=lhs - rhs)


# -- stochastic Tikhonov rate predictor --------------------------------------


@dataclass(frozen=True)
class TikhonovRateModel:
    """Tail model for the inf-max reconstruction bound.

    ``phi_cl(xi)`` bounds the probability that the closedness product
    exceeds xi; ``phi_de(tau)`` bounds the probability that the source
    element norm exceeds tau.  Both must accept numpy arrays.  The
    regularization parameter inside the bound scales as
    ``alpha_scale * rho_K**alpha_exponent``.
    """

    phi_cl: Callable
    phi_de: Callable
    rate_constant: float = 1.0
    alpha_exponent: float = 1.0
    alpha_scale: float = 1.0


@dataclass(frozen=True)
class RatePrediction:
    bound: float
    xi: float
    tau: float


def default_xi_grid(points: int = 200) -> np.ndarray:
    # log-spaced in 1 - xi for resolution near xi -> 1
    u = np.logspace(math.log10(1e-3), math.log10(1.0 - 1e-3), points)
    return 1.0 - u


def default_tau_grid(points: int = 200) -> np.ndarray:
    return np.logspace(-3.0, 3.0, points)


def tikhonov_rate_predict(
    rho_k: float,
    model: TikhonovRateModel,
    xi_grid=None,
    tau_grid=None,
) -> RatePrediction:
    """Exhaustive inf-max bound evaluation over the supplied grids.

    Evaluates max{rho_K + phi_cl(xi) + phi_de(tau),
    c (rho_K + alpha tau) / (sqrt(alpha) sqrt(1 - xi))} on the grid and
    returns the minimum with its minimizing (xi, tau); ties resolve to the
    smallest flat grid index so concurrent evaluation stays deterministic.
    """
    if not (0.0 < rho_k <= 1.0):
        raise ValueError(f"rho_k must lie in (0, 1], got {rho_k!r}")
    xi = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    tau = default_tau_grid() if tau_grid is None else np.asarray(tau_grid, dtype=float)
    if xi.size == 0 or tau.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(xi <= 0.0) or np.any(xi >= 1.0):
        raise ValueError("xi grid must lie in (0, 1)")
    if np.any(tau <= 0.0):
        raise ValueError("tau grid must be positive")

    alpha = model.alpha_scale * rho_k**model.alpha_exponent
    tail = rho_k + np.asarray(model.phi_cl(xi), dtype=float)[:, None] + np.asarray(
        model.phi_de(tau), dtype=float
    )[None, :]
    err = (
        model.rate_constant
        * (rho_k + alpha * tau[None, :])
        / (math.sqrt(alpha) * np.sqrt(1.0 - xi)[:, None])
    )
    bound = np.maximum(tail, err)
    flat = int(np.argmin(bound))
    i, j = np.unravel_index(flat, bound.shape)
    return RatePrediction(bound=float(bound[i, j]), xi=float(xi[i]), tau=float(tau[j]))


def uniform_source_model(rate_constant: float = 1.0) -> TikhonovRateModel:
    """Source norm uniform on [0, 1]: phi_cl = 1 - xi, phi_de = (1 - tau)_+."""
    return TikhonovRateModel(
        phi_cl=lambda xi: 1.0 - xi,
        phi_de=lambda tau: np.maximum(1.0 - tau, 0.0),
        rate_constant=rate_constant,
    )


def heavy_tail_model(c: float = 0.25, exponent: float = 1.0) -> TikhonovRateModel:
    """phi_de = c tau^-e with a closedness tail bounded below by c."""
    return TikhonovRateModel(
        phi_cl=lambda xi: np.full_like(np.asarray(xi, dtype=float), c),
        phi_de=lambda tau: c * np.asarray(tau, dtype=float) ** (-exponent),
    )


def combined_model(c: float = 1.0, rate_constant: float = 1.0) -> TikhonovRateModel:
    """phi_cl = 1 - xi and phi_de = c/(1 + tau) with alpha ~ rho_K^(5/4)."""
    return TikhonovRateModel(
        phi_cl=lambda xi: 1.0 - xi,
        phi_de=lambda tau: c / (1.0 + np.asarray(tau, dtype=float)),
        rate_constant=rate_constant,
        alpha_exponent=1.25,
    )


# -- effective smoothness from a uniformly distributed source exponent -------


@dataclass(frozen=True)
class NuEstimate:
    nu_exact: float
    nu_approx: float


def nu_effective(rho_k: float) -> NuEstimate:
    """Solve rho^(2 nu/(2 nu+1)) = 2 nu on (0, 1/2] and its W approximation.

    The exact root comes from bisection (the left side exceeds 2 nu near 0
    and is below it at nu = 1/2 for rho < 1); the approximation is
    nu = W(-log rho) / (-2 log rho).
    """
    if not (0.0 < rho_k < 1.0):
        raise ValueError(f"rho_k must lie in (0, 1), got {rho_k!r}")
    log_rho = math.log(rho_k)

    def g(nu: float) -> float:
        return math.exp(2.0 * nu / (2.0 * nu + 1.0) * log_rho) - 2.0 * nu

    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break
    nu_exact = 0.5 * (lo + hi)
    nu_approx = lambert_w0(-log_rho) / (-2.0 * log_rho)
    return NuEstimate(nu_exact=nu_exact, nu_approx=nu_approx)
