"""Bounded Levenberg-Marquardt least squares with numerical Jacobians.

Bounds are handled by smooth reparameterization, so the inner solver is
unconstrained:

* two-sided ``[lo, hi]``: ``p = lo + (hi - lo) sin(u)**2``
* lower only: ``p = lo + s u**2``; upper only: ``p = hi - s u**2``
* unbounded: ``p = s u``

where ``s`` is the parameter's typical magnitude (``x_scale``), which keeps
the internal coordinates of order one. Standard errors are mapped back to
physical coordinates with the chain rule.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .errors import FitError, ValidationError

__all__ = [
    "FitProblem",
    "FitResult",
    "ConvergenceReason",
    "lm_fit",
    "numerical_jacobian",
]

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class ConvergenceReason(str, enum.Enum):
    COST = "cost"
    GRADIENT = "gradient"
    STEP = "step"
    MAX_ITERATIONS = "max_iterations"
    STALLED = "stalled"


@dataclass
class FitProblem:
    """A weighted nonlinear least-squares problem.

    ``residual(params, data)`` returns a real or complex vector; complex
    residuals are fitted by stacking real and imaginary parts. ``weights``
    are per data point (repeated for both quadratures of complex data).
    """

    residual: Callable[[np.ndarray, Any], np.ndarray]
    initial_params: Sequence[float]
    lower_bounds: Optional[Sequence[float]] = None
    upper_bounds: Optional[Sequence[float]] = None
    weights: Optional[Sequence[float]] = None
    data: Any = None
    max_iterations: int = 200
    tolerance_gradient: float = 1e-8
    tolerance_step: float = 1e-10
    tolerance_cost: float = 1e-10
    param_names: Optional[Sequence[str]] = None
    x_scale: Optional[Sequence[float]] = None
    fixed: Optional[Sequence[bool]] = None

    def __post_init__(self):
        p0 = np.asarray(self.initial_params, dtype=float)
        n = p0.size
        self.initial_params = p0
        self.lower_bounds = np.full(n, -np.inf) if self.lower_bounds is None else np.asarray(self.lower_bounds, dtype=float)
        self.upper_bounds = np.full(n, np.inf) if self.upper_bounds is None else np.asarray(self.upper_bounds, dtype=float)
        if self.lower_bounds.shape != (n,) or self.upper_bounds.shape != (n,):
            raise ValidationError("bounds must match the parameter vector")
        if np.any(self.lower_bounds >= self.upper_bounds):
            raise ValidationError("lower bounds must be below upper bounds")
        if not np.all(np.isfinite(p0)):
            raise ValidationError("initial parameters must be finite")
        self.fixed = np.zeros(n, bool) if self.fixed is None else np.asarray(self.fixed, dtype=bool)
        if self.fixed.shape != (n,):
            raise ValidationError("fixed mask must match the parameter vector")
        # fixed parameters may sit on a bound
        outside = ~self.fixed & ((p0 <= self.lower_bounds) | (p0 >= self.upper_bounds))
        if np.any(outside):
            bad = np.flatnonzero(outside)[0]
            raise ValidationError(
                f"initial value of parameter {self._name(bad)} = {p0[bad]!r} is not strictly "
                f"inside its bounds [{self.lower_bounds[bad]}, {self.upper_bounds[bad]}]"
            )
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if np.any(~(self.weights > 0)):
                raise ValidationError("weights must be > 0")
        if self.x_scale is None:
            self.x_scale = np.where(p0 != 0, np.abs(p0), 1.0)
        else:
            self.x_scale = np.asarray(self.x_scale, dtype=float)
            if np.any(~(self.x_scale > 0)):
                raise ValidationError("x_scale must be > 0")
        if self.param_names is None:
            self.param_names = [f"p{i}" for i in range(n)]
        for tol in (self.tolerance_cost, self.tolerance_gradient, self.tolerance_step):
            if not tol > 0:
                raise ValidationError("tolerances must be > 0")

    def _name(self, i):
        names = self.param_names
        return names[i] if names is not None else f"p{i}"


@dataclass
class FitResult:
    params: np.ndarray
    stderr: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    n_iterations: int
    converged: bool
    convergence_reason: ConvergenceReason
    param_names: list = field(default_factory=list)
    covariance_available: bool = True
    warnings: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return float(self.params[self.param_names.index(name)])

    def err(self, name: str) -> float:
        return float(self.stderr[self.param_names.index(name)])

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan


# -- reparameterization -----------------------------------------------------

class _Transform:
    def __init__(self, lo, hi, scale):
        self.lo, self.hi, self.s = lo, hi, scale
        self.kind = np.where(
            np.isfinite(lo) & np.isfinite(hi), 2,
            np.where(np.isfinite(lo), 1, np.where(np.isfinite(hi), -1, 0)),
        )

    def to_internal(self, p):
        u = np.empty_like(p)
        for i, k in enumerate(self.kind):
            if k == 2:
                u[i] = math.asin(math.sqrt((p[i] - self.lo[i]) / (self.hi[i] - self.lo[i])))
            elif k == 1:
                u[i] = math.sqrt((p[i] - self.lo[i]) / self.s[i])
            elif k == -1:
                u[i] = math.sqrt((self.hi[i] - p[i]) / self.s[i])
            else:
                u[i] = p[i] / self.s[i]
        return u

    def to_external(self, u):
        p = np.empty_like(u)
        k = self.kind
        two = k == 2
        p[two] = self.lo[two] + (self.hi[two] - self.lo[two]) * np.sin(u[two]) ** 2
        one = k == 1
        p[one] = self.lo[one] + self.s[one] * u[one] ** 2
        neg = k == -1
        p[neg] = self.hi[neg] - self.s[neg] * u[neg] ** 2
        free = k == 0
        p[free] = self.s[free] * u[free]
        # keep p inside [lo, hi] despite rounding
        return np.clip(p, self.lo, self.hi)

    def derivative(self, u):
        d = np.empty_like(u)
        k = self.kind
        two = k == 2
        d[two] = (self.hi[two] - self.lo[two]) * np.sin(2 * u[two])
        one = k == 1
        d[one] = 2 * self.s[one] * u[one]
        neg = k == -1
        d[neg] = -2 * self.s[neg] * u[neg]
        free = k == 0
        d[free] = self.s[free]
        return d


def _flatten(r) -> np.ndarray:
    r = np.asarray(r)
    if np.iscomplexobj(r):
        return np.concatenate([r.real.ravel(), r.imag.ravel()])
    return r.astype(float).ravel()


def numerical_jacobian(residual, params, scale: Optional[float] = None, floor=1.0,
                       central: bool = False, names: Optional[Sequence[str]] = None,
                       r0: Optional[np.ndarray] = None) -> np.ndarray:
    """Finite-difference Jacobian of ``residual(params)``.

    Step for parameter ``i`` is ``scale * max(|p_i|, floor_i)``; `scale`
    defaults to sqrt(eps) for forward and eps**(1/3) for central differences.
    Complex residuals are stacked as real then imaginary parts.
    """
    p = np.asarray(params, dtype=float)
    if scale is None:
        scale = _EPS ** (1 / 3) if central else math.sqrt(_EPS)
    floor = np.broadcast_to(np.asarray(floor, dtype=float), p.shape)
    if r0 is None and not central:
        r0 = _flatten(residual(p))
    cols = []
    for i in range(p.size):
        h = scale * max(abs(p[i]), floor[i])
        up = p.copy()
        up[i] += h
        h_eff = up[i] - p[i]
        r_up = _flatten(residual(up))
        if central:
            dn = p.copy()
            dn[i] -= h
            r_dn = _flatten(residual(dn))
            col = (r_up - r_dn) / (up[i] - dn[i])
        else:
            col = (r_up - r0) / h_eff
        if not np.all(np.isfinite(col)):
            name = names[i] if names is not None else f"p{i}"
            raise FitError(f"non-finite residual when perturbing parameter {name}", last_params=p)
        cols.append(col)
    return np.column_stack(cols) if cols else np.zeros((0 if r0 is None else r0.size, 0))


def lm_fit(problem: FitProblem) -> FitResult:
    """Minimize ``sum w_i r_i**2`` by Levenberg-Marquardt.

    Damping uses Marquardt's diagonal scaling ``(J^T W J + lam diag(J^T W J))``
    with ``lam`` starting at 1e-3, divided by 10 on accepted and multiplied by
    10 on rejected steps. The covariance at the solution is
    ``(J^T W J)^-1 chi2/dof``.
    """
    pr = problem
    n_all = pr.initial_params.size
    free = ~pr.fixed
    tr = _Transform(pr.lower_bounds[free], pr.upper_bounds[free], pr.x_scale[free])
    p_full = pr.initial_params.copy()

    def expand(u):
        p = p_full.copy()
        p[free] = tr.to_external(u)
        return p

    sqrt_w = None
    if pr.weights is not None:
        sqrt_w = np.sqrt(pr.weights)

    def weighted(u):
        r = _flatten(pr.residual(expand(u), pr.data))
        if sqrt_w is not None:
            w = sqrt_w if sqrt_w.size == r.size else np.concatenate([sqrt_w, sqrt_w])
            r = r * w
        return r

    u = tr.to_internal(pr.initial_params[free])
    r = weighted(u)
    if not np.all(np.isfinite(r)):
        raise FitError("residual is not finite at the initial parameters", last_params=expand(u))
    cost = float(r @ r)
    cost0 = cost
    n_data = r.size
    n_free = int(free.sum())

    lam = 1e-3
    reason = ConvergenceReason.MAX_ITERATIONS
    converged = False
    it = 0
    bad_trials = 0
    while it < pr.max_iterations:
        it += 1
        J = numerical_jacobian(weighted, u, r0=r)
        A = J.T @ J
        g = J.T @ r
        # MINPACK-style scale-free gradient test
        col_norm = np.sqrt(np.diag(A))
        rnorm = math.sqrt(cost)
        if rnorm == 0 or np.max(np.abs(g) / np.where(col_norm > 0, col_norm, 1.0)) <= pr.tolerance_gradient * rnorm:
            reason, converged = ConvergenceReason.GRADIENT, True
            break
        diag = np.maximum(np.diag(A), 1e-12 * max(np.max(np.diag(A)), 1e-300))
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            u_new = u + step
            r_new = weighted(u_new)
            if not np.all(np.isfinite(r_new)):
                bad_trials += 1
                if bad_trials > 10:
                    raise FitError("residual became non-finite during the fit", last_params=expand(u))
                lam *= 10
                continue
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10
        if not accepted:
            reason = ConvergenceReason.STALLED
            # no descent possible: a stationary point if the gradient is tiny
            converged = bool(np.max(np.abs(g) / np.where(col_norm > 0, col_norm, 1.0)) <= 1e-4 * max(rnorm, 1e-300))
            break
        bad_trials = 0
        rel_drop = (cost - cost_new) / cost if cost > 0 else 0.0
        step_small = np.linalg.norm(step) <= pr.tolerance_step * (np.linalg.norm(u) + pr.tolerance_step)
        u, r, cost = u_new, r_new, cost_new
        lam = max(lam / 10, 1e-15)
        log.debug("lm iter %d cost %.6g lambda %.3g", it, cost, lam)
        if cost <= 1e-30 * cost0:
            reason, converged = ConvergenceReason.COST, True
            break
        if rel_drop < pr.tolerance_cost:
            reason, converged = ConvergenceReason.COST, True
            break
        if step_small:
            reason, converged = ConvergenceReason.STEP, True
            break

    params = expand(u)
    dof = n_data - n_free
    result_warnings = []
    cov = np.full((n_all, n_all), np.nan)
    available = False
    J = numerical_jacobian(weighted, u, r0=r) if n_free else np.zeros((n_data, 0))
    A = J.T @ J
    if n_free and dof > 0:
        try:
            if np.linalg.cond(A) < 1e14:
                cov_u = np.linalg.inv(A) * (cost / dof)
                d = tr.derivative(u)
                cov_free = cov_u * np.outer(d, d)
                cov = np.zeros((n_all, n_all))
                cov[np.ix_(free, free)] = 0.5 * (cov_free + cov_free.T)
                available = True
        except np.linalg.LinAlgError:
            pass
    if not available:
        result_warnings.append("covariance unavailable: J^T W J is singular or dof <= 0")
    stderr = np.sqrt(np.clip(np.diag(cov), 0, None)) if available else np.full(n_all, np.nan)
    if available:
        # within one stderr of a bound the interval is truncated
        at_bound = free & ((params - pr.lower_bounds <= stderr) | (pr.upper_bounds - params <= stderr))
        for i in np.flatnonzero(at_bound):
            result_warnings.append(f"parameter {pr.param_names[i]} is at a bound; its stderr is not meaningful")
        stderr[pr.fixed] = 0.0
    return FitResult(
        params=params,
        stderr=stderr,
        covariance=cov,
        chi2=cost,
        dof=dof,
        n_iterations=it,
        converged=converged,
        convergence_reason=reason,
        param_names=list(pr.param_names),
        covariance_available=available,
        warnings=result_warnings,
    )
