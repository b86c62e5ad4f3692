"""Post-solve verification and the symmetry-breaking study.

Asymmetry degrees quantify how far a computed state is from even (interval)
or radial (disk) symmetry; a bisection on the Henon exponent l locates the
critical value l*(p) where the ground state stops being symmetric; two small
least-squares fits summarize how l*(p) depends on p.  A generalized
eigenvalue check of the second variation against the H-inner product verifies
that converged states are 1-saddles (exactly one negative direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg

from .errors import EigenSolveFailure, InsufficientData, InvalidBracket, NonPositiveData
from .fields import DiscreteField, ManifoldPoint
from .optimizer import RunRecord, SolverConfig, nehari_descent
from .problem import EllipticProblem, preset_henon

#: A state counts as symmetric when its asymmetry degree is below this.
ASYMMETRY_THRESHOLD = {"interval": 1e-5, "square": 1e-5, "disk": 1e-4}


@dataclass(frozen=True)
class AsymmetryReport:
    mu: float
    symmetric: bool
    threshold: float


def asymmetry_1d(u: DiscreteField) -> AsymmetryReport:
    """max_x |u(x) - u(-x)| / max_x |u(x)| over the (symmetric) interval nodes."""
    if u.mesh.domain != "interval":
        raise ValueError("asymmetry_1d expects a field on the interval mesh")
    u.require_nonzero()
    vals = u.coeffs
    mu = float(np.max(np.abs(vals - vals[::-1])) / np.max(np.abs(vals)))
    thr = ASYMMETRY_THRESHOLD["interval"]
    return AsymmetryReport(mu=mu, symmetric=mu < thr, threshold=thr)


def asymmetry_2d_disk(u: DiscreteField) -> AsymmetryReport:
    """Largest angular spread over radial rings, normalized by the peak value."""
    if u.mesh.domain != "disk":
        raise ValueError("asymmetry_2d_disk expects a field on the disk grid")
    u.require_nonzero()
    grid = u.mesh.rings(u.coeffs)
    spread = np.max(grid.max(axis=1) - grid.min(axis=1))
    mu = float(spread / np.max(np.abs(grid)))
    thr = ASYMMETRY_THRESHOLD["disk"]
    return AsymmetryReport(mu=mu, symmetric=mu < thr, threshold=thr)


def asymmetry_square(u: DiscreteField) -> AsymmetryReport:
    """Axis-reflection asymmetry on the square (reporting aid; the exponent
    study itself covers only the interval and the disk)."""
    if u.mesh.domain != "square":
        raise ValueError("asymmetry_square expects a field on the square mesh")
    u.require_nonzero()
    mesh = u.mesh
    grid = u.coeffs.reshape(mesh.nx - 1, mesh.ny - 1)
    dev = max(
        float(np.max(np.abs(grid - grid[::-1, :]))),
        float(np.max(np.abs(grid - grid[:, ::-1]))),
    )
    mu = dev / float(np.max(np.abs(grid)))
    thr = ASYMMETRY_THRESHOLD["square"]
    return AsymmetryReport(mu=mu, symmetric=mu < thr, threshold=thr)


def asymmetry(u: DiscreteField) -> AsymmetryReport:
    """Dispatch on the field's domain."""
    return {
        "interval": asymmetry_1d,
        "disk": asymmetry_2d_disk,
        "square": asymmetry_square,
    }[u.mesh.domain](u)


@dataclass(frozen=True)
class ScalingSymmetryReport:
    radius: float
    mu_original: float
    mu_transformed: float
    difference: float
    invariant: bool


def scaling_symmetry_check(
    problem: EllipticProblem, u: DiscreteField, radius: float, tol: float = 1e-10
) -> ScalingSymmetryReport:
    """The rescaling u -> R^((l+2)/(p-1)) u(R x) maps Henon solutions between
    domains of different radii without touching their symmetry; verify that
    the asymmetry degree of the transformed nodal data matches the original.
    """
    if not problem.is_henon:
        raise ValueError("scaling invariance applies to the Henon preset only")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    kappa = (problem.coeff_g.power + 2.0) / (problem.p - 1.0)
    # on the rescaled grid x' = x / R the nodal values pick up the amplitude
    # factor R^kappa while the node layout (and hence the pairing) is unchanged
    transformed = u.with_coeffs(radius ** kappa * u.coeffs)
    mu0 = asymmetry(u).mu
    mu1 = asymmetry(transformed).mu
    diff = abs(mu0 - mu1)
    return ScalingSymmetryReport(
        radius=radius,
        mu_original=mu0,
        mu_transformed=mu1,
        difference=diff,
        invariant=diff <= tol * max(1.0, mu0),
    )


# -- Morse index -------------------------------------------------------------


@dataclass(frozen=True)
class MorseReport:
    thetas: np.ndarray
    residuals: np.ndarray
    morse_index: int


def generalized_smallest_eigs(b_op, a_op, a_solve, k: int, maxiter: int | None = None):
    """k algebraically smallest eigenpairs of B w = theta A w (A positive
    definite), via implicitly restarted Lanczos on the pencil."""
    n = b_op.shape[0]
    k = min(k, n - 1)
    try:
        thetas, vecs = scipy.sparse.linalg.eigsh(
            b_op,
            k=k,
            M=a_op,
            Minv=a_solve,
            which="SA",
            maxiter=maxiter,
            ncv=min(n, max(4 * k + 1, 24)),
        )
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise EigenSolveFailure(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(thetas)
    return thetas[order], vecs[:, order]


def morse_index_check(
    problem: EllipticProblem, u_star: ManifoldPoint, k: int = 2, maxiter: int | None = None
) -> MorseReport:
    """Smallest eigenvalues of the second variation of E at u_star relative to
    the H-inner product; the count of negative ones estimates the Morse index.
    """
    mesh = problem.mesh
    op = problem.operator
    w_mat = mesh.nl_weight_matrix(u_star.coeffs, problem.g_quad, problem.p)
    n = op.n_dof

    if op.sparse is not None:
        a_mat = op.sparse
        b_mat = (a_mat - problem.p * w_mat).tocsr()
        a_lin = a_mat
        b_lin = b_mat
    else:
        a_lin = scipy.sparse.linalg.LinearOperator((n, n), matvec=op.matvec, dtype=float)
        b_lin = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=lambda x: op.matvec(x) - problem.p * (w_mat @ x), dtype=float
        )
    a_solve = scipy.sparse.linalg.LinearOperator(
        (n, n), matvec=lambda r: op.solve(r, problem.lin_tol), dtype=float
    )
    thetas, vecs = generalized_smallest_eigs(b_lin, a_lin, a_solve, k, maxiter=maxiter)

    residuals = np.empty_like(thetas)
    for i, theta in enumerate(thetas):
        w = vecs[:, i]
        bw = b_lin @ w
        aw = a_lin @ w
        residuals[i] = np.linalg.norm(bw - theta * aw) / np.linalg.norm(aw)
    return MorseReport(thetas=thetas, residuals=residuals, morse_index=int((thetas < 0.0).sum()))


# -- critical exponent bisection ---------------------------------------------


@dataclass
class CriticalExponentResult:
    p: float
    bracket_lo: float
    bracket_hi: float
    l_star_estimate: float
    evaluations: list = dataclass_field(default_factory=list)  # (l, mu) pairs
    n_bisection_evals: int = 0
    total_iterations: int = 0
    statuses: list = dataclass_field(default_factory=list)


def _default_evaluate(mesh, p: float, cfg: SolverConfig, lin_tol: float | None):
    # Near the critical exponent the leading manifold Hessian eigenvalue
    # vanishes, so a gradient tolerance eps leaves an asymmetric residual of
    # order eps / theta_min in the computed state; classifying against the
    # mu threshold therefore needs a tighter stop than a production solve.
    cfg = replace(cfg, eps_tol=min(cfg.eps_tol, 1e-8), max_iter=max(cfg.max_iter, 2000))

    def evaluate(l: float, seed: DiscreteField | None):
        kwargs = {} if lin_tol is None else {"lin_tol": lin_tol}
        problem = preset_henon(l, p, mesh, **kwargs)
        direction = seed if seed is not None else DiscreteField(mesh.initial_direction(), mesh)
        record = nehari_descent(problem, direction, cfg)
        if not record.converged and seed is not None:
            # continuation seed can strand the iteration; restart from scratch
            record = nehari_descent(problem, DiscreteField(mesh.initial_direction(), mesh), cfg)
        mu = asymmetry(record.solution).mu
        return mu, record

    return evaluate


def bisect_critical_l(
    mesh,
    p: float,
    l_lo: float,
    l_hi: float,
    tol: float,
    cfg: SolverConfig | None = None,
    threshold: float | None = None,
    warm_start: bool = True,
    evaluate=None,
    lin_tol: float | None = None,
) -> CriticalExponentResult:
    """Bisection on the predicate "the computed ground state is asymmetric".

    The endpoints are evaluated first and must disagree (symmetric at l_lo,
    asymmetric at l_hi).  Midpoint solves are warm-started from the most
    recent asymmetric solution, which keeps the iteration on the asymmetric
    branch close to the critical exponent; symmetric solutions never seed a
    later solve since they are themselves critical points at every l.
    """
    if not l_lo < l_hi:
        raise InvalidBracket(f"need l_lo < l_hi, got [{l_lo}, {l_hi}]")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    cfg = cfg or SolverConfig()
    threshold = ASYMMETRY_THRESHOLD[mesh.domain] if threshold is None else threshold
    evaluate = evaluate or _default_evaluate(mesh, p, cfg, lin_tol)

    result = CriticalExponentResult(
        p=p, bracket_lo=l_lo, bracket_hi=l_hi, l_star_estimate=0.5 * (l_lo + l_hi)
    )
    asym_solution: DiscreteField | None = None

    def run(l: float, seed):
        mu, record = evaluate(l, seed)
        result.evaluations.append((l, mu))
        if isinstance(record, RunRecord):
            result.total_iterations += record.iterations
            result.statuses.append(record.status)
            if mu >= threshold:
                nonlocal asym_solution
                asym_solution = record.solution
        return mu

    mu_lo = run(l_lo, None)
    if mu_lo >= threshold:
        raise InvalidBracket(
            f"lower endpoint l = {l_lo:g} already asymmetric (mu = {mu_lo:.3e})"
        )
    mu_hi = run(l_hi, None)
    if mu_hi < threshold:
        raise InvalidBracket(
            f"upper endpoint l = {l_hi:g} still symmetric (mu = {mu_hi:.3e})"
        )

    lo, hi = l_lo, l_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        seed = asym_solution if warm_start else None
        mu = run(mid, seed)
        result.n_bisection_evals += 1
        if mu >= threshold:
            hi = mid
        else:
            lo = mid
    result.bracket_lo, result.bracket_hi = lo, hi
    result.l_star_estimate = 0.5 * (lo + hi)
    return result


def expected_bisection_evals(l_lo: float, l_hi: float, tol: float) -> int:
    return int(math.ceil(math.log2((l_hi - l_lo) / tol)))


# -- least-squares fits --------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    model: str
    params: np.ndarray
    mse: float

    def predict(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.model == "inverse_law":
            return self.params[0] / (p - 1.0)
        k1, k2 = self.params
        return k1 * k2 ** (-p) / (p - 1.0)


def fit_inverse_law(points) -> FitResult:
    """Closed-form least squares of l* = k0 / (p - 1)."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise InsufficientData("need at least one (p, l*) point")
    p, l_star = pts[:, 0], pts[:, 1]
    if np.any(p <= 1.0):
        raise ValueError("all p values must exceed 1")
    w = 1.0 / (p - 1.0)
    k0 = float((l_star * w).sum() / (w ** 2).sum())
    mse = float(np.mean((l_star - k0 * w) ** 2))
    return FitResult(model="inverse_law", params=np.array([k0]), mse=mse)


def fit_exp_law(points) -> FitResult:
    """Least squares of l* = k1 * k2^(-p) / (p - 1): a log-linear solve for
    the starting point followed by a refinement of the untransformed error."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 3:
        raise InsufficientData("need at least three (p, l*) points")
    p, l_star = pts[:, 0], pts[:, 1]
    if np.any(p <= 1.0):
        raise ValueError("all p values must exceed 1")
    y = (p - 1.0) * l_star
    if np.any(y <= 0.0):
        raise NonPositiveData("(p-1) * l* must be positive for the log-linear fit")
    slope, intercept = np.polyfit(p, np.log(y), 1)
    k1, k2 = float(np.exp(intercept)), float(np.exp(-slope))

    def resid(params):
        return params[0] * params[1] ** (-p) / (p - 1.0) - l_star

    out = scipy.optimize.least_squares(resid, x0=[k1, k2], bounds=([0.0, 0.0], np.inf))
    params = out.x if np.mean(resid(out.x) ** 2) <= np.mean(resid([k1, k2]) ** 2) else np.array([k1, k2])
    mse = float(np.mean(resid(params) ** 2))
    return FitResult(model="exp_law", params=np.asarray(params, dtype=float), mse=mse)
