"""Energy descent on the Nehari manifold.

The iteration is u_{n+1} = R_{u_n}(alpha_n * xi_n) with the steepest-descent
direction xi_n = -grad_N E(u_n), a Barzilai-Borwein trial step alternating
between the two classical formulas (clamped to [alpha_min, alpha_max]), and a
nonmonotone backtracking line search: a step is accepted when

    E(R_{u_n}(alpha xi_n)) <= C_n + sigma * alpha * (grad_N E(u_n), xi_n)_H,

where the reference value C_n is the weighted running average

    Q_{n+1} = rho_nm * Q_n + 1,
    C_{n+1} = (rho_nm * Q_n * C_n + E(u_{n+1})) / Q_{n+1},

with C_0 = E(u_0), Q_0 = 1.  With rho_nm = 0 this is the monotone Armijo rule.
Every accepted step keeps E(u_n) <= C_n <= C_{n-1} <= E(u_0).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import LineSearchFailure
from .fields import DiscreteField, ManifoldPoint, TangentVector
from .manifold import (
    _scale_from_stats,
    manifold_point,
    nehari_scale,
    riemannian_gradient,
    scale_stats,
)
from .problem import EllipticProblem, h_gradients

STATUS_CONVERGED = "Converged"
STATUS_MAX_ITER = "MaxIter"
STATUS_LINE_SEARCH_FAILURE = "LineSearchFailure"

# stagnation guard: this many consecutive energy-flat iterations trigger a stop
_STAGNATION_RUN = 20
_STAGNATION_REL = 1e-15


@dataclass(frozen=True)
class SolverConfig:
    """Line-search and stopping parameters for the manifold descent."""

    sigma: float = 1e-3
    beta: float = 0.25
    rho_nm: float = 0.85
    alpha_min: float = 1.0
    alpha_max: float = 10.0
    eps_tol: float = 1e-6
    tau0: float = 1.0
    max_iter: int = 500
    max_backtracks: int = 50

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must be in (0,1), got {self.sigma}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if not 0.0 <= self.rho_nm < 1.0:
            raise ValueError(f"rho_nm must be in [0,1), got {self.rho_nm}")
        if not 0.0 < self.alpha_min < self.alpha_max:
            raise ValueError(
                f"need 0 < alpha_min < alpha_max, got {self.alpha_min}, {self.alpha_max}"
            )
        if self.eps_tol <= 0.0:
            raise ValueError(f"eps_tol must be positive, got {self.eps_tol}")
        if self.tau0 <= 0.0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1")


@dataclass(frozen=True)
class NonmonotoneState:
    """Running reference value C_n and weight Q_n of the nonmonotone rule."""

    c_n: float
    q_n: float


def update_nonmonotone(state: NonmonotoneState, e_next: float, cfg: SolverConfig) -> NonmonotoneState:
    q_new = cfg.rho_nm * state.q_n + 1.0
    c_new = (cfg.rho_nm * state.q_n * state.c_n + e_next) / q_new
    return NonmonotoneState(c_n=c_new, q_n=q_new)


def bb_trial_step(
    problem: EllipticProblem,
    n: int,
    prev_step: tuple[DiscreteField, DiscreteField] | None,
    cfg: SolverConfig,
) -> float:
    """Alternating Barzilai-Borwein trial step, clamped to [alpha_min, alpha_max].

    ``prev_step`` holds (v, y) = (u_n - u_{n-1}, grad_N E(u_n) - grad_N E(u_{n-1})).
    Odd n uses tau1 = (v,v)_H / |(v,y)_H|, even n >= 2 uses tau2 = |(v,y)_H| / (y,y)_H.
    A vanishing or nonfinite denominator falls back to alpha_max.
    """
    if n == 0:
        return cfg.tau0
    if prev_step is None:
        raise ValueError("prev_step is required for n >= 1")
    v, y = prev_step
    vy = abs(problem.inner(v.coeffs, y.coeffs))
    if n % 2 == 1:
        denom = vy
        numer = problem.norm_sq(v.coeffs)
    else:
        denom = problem.norm_sq(y.coeffs)
        numer = vy
    if denom <= 0.0 or not np.isfinite(denom):
        return cfg.alpha_max
    tau = numer / denom
    if not np.isfinite(tau):
        return cfg.alpha_max
    return min(max(cfg.alpha_min, tau), cfg.alpha_max)


def backtracking_search(
    problem: EllipticProblem,
    u: ManifoldPoint,
    xi: TangentVector,
    state: NonmonotoneState,
    alpha0: float,
    cfg: SolverConfig,
    slope: float | None = None,
) -> tuple[float, ManifoldPoint, int]:
    """Shrink alpha0 by beta until the nonmonotone acceptance test holds.

    ``slope`` is (grad_N E(u), xi)_H; it is computed if not supplied and must
    be negative (xi must be a descent direction).  Returns the accepted step,
    the retracted next point, and the number of backtracks performed.
    """
    if slope is None:
        rg = riemannian_gradient(problem, u)
        slope = problem.inner(rg.dir.coeffs, xi.dir.coeffs)
    if not slope < 0.0:
        raise ValueError(f"xi is not a descent direction: slope = {slope:g}")
    p = problem.p
    alpha = float(alpha0)
    for backtracks in range(cfg.max_backtracks + 1):
        w = u.coeffs + alpha * xi.dir.coeffs
        s, t = scale_stats(problem, w)
        rho = _scale_from_stats(problem, s, t)
        e_trial = 0.5 * rho ** 2 * s - rho ** (p + 1.0) / (p + 1.0) * t
        if e_trial <= state.c_n + cfg.sigma * alpha * slope:
            u_next = manifold_point(problem, problem.field(rho * w))
            return alpha, u_next, backtracks
        alpha *= cfg.beta
    raise LineSearchFailure(
        f"no acceptable step after {cfg.max_backtracks} backtracks "
        f"(alpha down to {alpha:.3e}); this indicates a tolerance or discretization problem"
    )


@dataclass
class RunRecord:
    """Complete trace of one descent run plus the final solution."""

    status: str
    solution: DiscreteField
    # per-iterate arrays, length = number of visited iterates (steps + 1)
    iteration: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0, dtype=int))
    energy: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    grad_norm: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    alpha: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    backtracks: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0, dtype=int))
    c_n: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    q_n: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    nehari_residual: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    # per accepted step (length = steps)
    slope: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    xi_norm: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    step_norm: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0))
    # worst-case invariant values observed along the run
    max_manifold_residual_rel: float = 0.0
    max_energy_identity_err: float = 0.0
    max_constraint_pairing: float = -np.inf  # max over iterates of (grad G, u)_H; must stay < 0
    final_grad_norm: float = np.nan
    final_energy: float = np.nan
    final_grad_e_norm: float = np.nan
    stagnated: bool = False

    @property
    def iterations(self) -> int:
        return int(self.iteration[-1]) if self.iteration.size else 0

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


def nehari_descent(problem: EllipticProblem, u0_direction: DiscreteField, cfg: SolverConfig) -> RunRecord:
    """Run the manifold descent from rho(v0) * v0 until the Riemannian
    gradient norm drops below eps_tol, the iteration budget runs out, or the
    line search fails (recorded in the status, with the partial trace kept).
    """
    rho0 = nehari_scale(problem, u0_direction)
    u = manifold_point(problem, problem.field(rho0 * u0_direction.coeffs))
    state = NonmonotoneState(c_n=u.energy, q_n=1.0)

    it_n: list[int] = []
    it_e: list[float] = []
    it_g: list[float] = []
    it_alpha: list[float] = []
    it_bt: list[int] = []
    it_c: list[float] = []
    it_q: list[float] = []
    it_res: list[float] = []
    slopes: list[float] = []
    xi_norms: list[float] = []
    step_norms: list[float] = []

    max_res_rel = 0.0
    max_eid_err = 0.0
    max_pairing = -np.inf

    half_gap = 0.5 - 1.0 / (problem.p + 1.0)
    prev_field = None
    prev_rgrad = None
    stag_count = 0
    status = STATUS_MAX_ITER
    stagnated = False
    grads = None
    gn = np.nan

    n = 0
    while True:
        grads = h_gradients(problem, u.field)
        rgrad = riemannian_gradient(problem, u, grads=grads)
        m = problem.operator.matvec(rgrad.dir.coeffs)
        gn_sq = float(rgrad.dir.coeffs @ m)
        gn = float(np.sqrt(max(gn_sq, 0.0)))

        max_res_rel = max(max_res_rel, abs(u.nehari_residual) / u.norm_h_sq)
        eid = abs(u.energy - half_gap * u.norm_h_sq) / max(1.0, abs(u.energy))
        max_eid_err = max(max_eid_err, eid)
        max_pairing = max(max_pairing, problem.inner(grads.grad_g.coeffs, u.coeffs))

        it_n.append(n)
        it_e.append(u.energy)
        it_g.append(gn)
        it_alpha.append(0.0)
        it_bt.append(0)
        it_c.append(state.c_n)
        it_q.append(state.q_n)
        it_res.append(abs(u.nehari_residual))

        if gn < cfg.eps_tol:
            status = STATUS_CONVERGED
            break
        if n >= 1 and abs(it_e[-1] - it_e[-2]) < _STAGNATION_REL * (1.0 + abs(it_e[-1])):
            stag_count += 1
        else:
            stag_count = 0
        if stag_count >= _STAGNATION_RUN:
            stagnated = True
            status = STATUS_CONVERGED if gn < 10.0 * cfg.eps_tol else STATUS_MAX_ITER
            break
        if n >= cfg.max_iter:
            status = STATUS_MAX_ITER
            break

        xi_arr = -rgrad.dir.coeffs
        xi = TangentVector(base=u.field, dir=problem.field(xi_arr))
        # with xi = -rgrad the slope is the exact negation of gn_sq and the
        # direction norm coincides with the gradient norm bit for bit
        slope = float(xi_arr @ m)
        xi_norm = gn

        if n == 0:
            alpha0 = bb_trial_step(problem, 0, None, cfg)
        else:
            v = problem.field(u.coeffs - prev_field.coeffs)
            y = problem.field(rgrad.dir.coeffs - prev_rgrad)
            alpha0 = bb_trial_step(problem, n, (v, y), cfg)

        try:
            alpha, u_next, n_bt = backtracking_search(
                problem, u, xi, state, alpha0, cfg, slope=slope
            )
        except LineSearchFailure:
            # energy decrements below the fp resolution of E make the
            # acceptance test unsatisfiable; if the gradient is already at
            # stopping scale this is saturation, not failure
            if gn < 10.0 * cfg.eps_tol:
                stagnated = True
                status = STATUS_CONVERGED
            else:
                status = STATUS_LINE_SEARCH_FAILURE
            break

        it_alpha[-1] = alpha
        it_bt[-1] = n_bt
        slopes.append(slope)
        xi_norms.append(xi_norm)
        step_norms.append(problem.norm(u_next.coeffs - u.coeffs))

        prev_field = u.field
        prev_rgrad = rgrad.dir.coeffs
        state = update_nonmonotone(state, u_next.energy, cfg)
        u = u_next
        n += 1

    record = RunRecord(
        status=status,
        solution=u.field,
        iteration=np.asarray(it_n, dtype=int),
        energy=np.asarray(it_e),
        grad_norm=np.asarray(it_g),
        alpha=np.asarray(it_alpha),
        backtracks=np.asarray(it_bt, dtype=int),
        c_n=np.asarray(it_c),
        q_n=np.asarray(it_q),
        nehari_residual=np.asarray(it_res),
        slope=np.asarray(slopes),
        xi_norm=np.asarray(xi_norms),
        step_norm=np.asarray(step_norms),
        max_manifold_residual_rel=max_res_rel,
        max_energy_identity_err=max_eid_err,
        max_constraint_pairing=max_pairing,
        final_grad_norm=gn,
        final_energy=u.energy,
        final_grad_e_norm=problem.norm(grads.grad_e.coeffs),
        stagnated=stagnated,
    )
    return record


@dataclass(frozen=True)
class GradientRelatedReport:
    """Post-hoc verification that the search directions were steepest descent
    and measurement of the empirical retraction stretch factor."""

    slope_identity_max_err: float
    norm_identity_max_err: float
    retraction_ratio_max: float  # empirical bound M in ||R_u(xi)-u|| <= M ||xi||
    retraction_ratios: np.ndarray
    tail_step_max: float
    tail_steps: int


def diagnostics_gradient_related(
    record: RunRecord, tail_grad_tol: float | None = None, tail_window: int = 5
) -> GradientRelatedReport:
    """Check the steepest-descent identities (slope = -||grad||^2 and
    ||xi|| = ||grad||) from the trace and report step-size ratios.

    The step-distance tail is the asymptotic segment of the run: the steps
    launched from iterates whose gradient norm is already below
    ``tail_grad_tol`` (so step <= alpha_max * M * tail_grad_tol there).  When
    no threshold is given the last ``tail_window`` steps are used instead.
    """
    n_steps = record.slope.size
    g = record.grad_norm[:n_steps]
    slope_err = float(np.max(np.abs(record.slope + g ** 2))) if n_steps else 0.0
    norm_err = float(np.max(np.abs(record.xi_norm - g))) if n_steps else 0.0
    inputs = record.alpha[:n_steps] * record.xi_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(inputs > 0.0, record.step_norm / inputs, 0.0)
    if tail_grad_tol is not None:
        tail = record.step_norm[g < tail_grad_tol]
    else:
        tail = record.step_norm[-tail_window:]
    return GradientRelatedReport(
        slope_identity_max_err=slope_err,
        norm_identity_max_err=norm_err,
        retraction_ratio_max=float(ratios.max()) if ratios.size else 0.0,
        retraction_ratios=ratios,
        tail_step_max=float(tail.max()) if tail.size else 0.0,
        tail_steps=int(tail.size),
    )


def verify_run_chain(record: RunRecord, cfg: SolverConfig | None = None, slack: float = 1e-12) -> dict:
    """Re-verify E(u_n) <= C_n <= C_{n-1} <= E(u_0) from the stored trace and,
    when the config is supplied, the full acceptance inequality
    E(u_{n+1}) <= C_n + sigma * alpha_n * slope_n at every accepted step."""
    e, c = record.energy, record.c_n
    scale = 1.0 + np.abs(e).max(initial=0.0)
    tol = slack * scale
    checks = {
        "energy_le_reference": bool(np.all(e <= c + tol)),
        "reference_nonincreasing": bool(np.all(np.diff(c) <= tol)),
        "reference_le_initial_energy": bool(np.all(c <= c[0] + tol)) if c.size else True,
    }
    n_steps = record.slope.size
    if cfg is not None and n_steps:
        margin = c[:n_steps] + cfg.sigma * record.alpha[:n_steps] * record.slope
        checks["acceptance_inequality"] = bool(np.all(e[1 : n_steps + 1] <= margin + tol))
    return checks
