"""Geometry of the Nehari manifold N = { u != 0 : G(u) = 0 } where
G(u) = <E'(u), u> = ||u||_H^2 - int g |u|^(p+1).

Provides the constraint residual, the H-orthogonal tangent projection, the
Riemannian gradient, the scaling map rho(v) that pulls a direction onto N, and
the retraction R_u(xi) = rho(u + xi) (u + xi).  For this energy the scaling
map has the closed form

    rho(v) = ( ||v||_H^2 / int g |v|^(p+1) )^(1/(p-1)),

so a retraction costs one H-norm and one nonlinear integral, never a nonlinear
solve.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateConstraintGradient, DegenerateDirection, SolverError
from .fields import DiscreteField, ManifoldPoint, TangentVector
from .problem import EllipticProblem, h_gradients

#: Underflow floor for the nonlinear integral, below which a direction is
#: treated as vanishing on the support of g instead of producing Inf scales.
DEGENERATE_INTEGRAL_FLOOR = 1e-300


def nehari_residual(problem: EllipticProblem, u: DiscreteField) -> float:
    """Constraint value G(u); zero exactly on the manifold."""
    u.require_nonzero()
    return problem.norm_sq(u.coeffs) - problem.nl_integral(u.coeffs)


def scale_stats(problem: EllipticProblem, w: np.ndarray) -> tuple[float, float]:
    """(||w||_H^2, int g |w|^(p+1)) - everything the scaling map needs."""
    return problem.norm_sq(w), problem.nl_integral(w)


def _scale_from_stats(problem: EllipticProblem, s: float, t: float) -> float:
    if not np.isfinite(t) or t < DEGENERATE_INTEGRAL_FLOOR:
        raise DegenerateDirection(
            f"nonlinear integral {t:g} is below the degeneracy floor; the direction "
            "vanishes on the support of g"
        )
    return (s / t) ** (1.0 / (problem.p - 1.0))


def nehari_scale(problem: EllipticProblem, v: DiscreteField) -> float:
    """The unique rho > 0 with rho*v on the manifold."""
    v.require_nonzero()
    s, t = scale_stats(problem, v.coeffs)
    return _scale_from_stats(problem, s, t)


def manifold_point(problem: EllipticProblem, field: DiscreteField) -> ManifoldPoint:
    """Wrap a field as a manifold point, recomputing energy and residual.

    Raises if the constraint residual exceeds the configured relative
    tolerance, so off-manifold data cannot masquerade as an iterate.
    """
    field.require_nonzero()
    s, t = scale_stats(problem, field.coeffs)
    residual = s - t
    if abs(residual) > problem.nehari_tol * s:
        raise SolverError(
            f"field is off the manifold: |G| = {abs(residual):.3e} > "
            f"{problem.nehari_tol:g} * ||u||_H^2 = {problem.nehari_tol * s:.3e}"
        )
    e = 0.5 * s - t / (problem.p + 1.0)
    return ManifoldPoint(field=field, energy=e, nehari_residual=residual, norm_h_sq=s)


def _project(problem: EllipticProblem, phi: np.ndarray, grad_g: np.ndarray) -> np.ndarray:
    gg = problem.norm_sq(grad_g)
    if not np.isfinite(gg) or gg < 1e-280:
        raise DegenerateConstraintGradient(
            "constraint gradient is numerically zero; tangent projection undefined"
        )
    return phi - (problem.inner(grad_g, phi) / gg) * grad_g


def _check_tangency(problem: EllipticProblem, xi: np.ndarray, grad_g: np.ndarray) -> None:
    pairing = abs(problem.inner(grad_g, xi))
    bound = problem.tangency_tol * (
        1.0 + problem.norm(grad_g) * problem.norm(xi)
    )
    if pairing > bound:
        raise SolverError(
            f"projected direction is not tangent: |(grad G, xi)_H| = {pairing:.3e} > {bound:.3e}"
        )


def project_tangent(
    problem: EllipticProblem,
    u: ManifoldPoint,
    phi: DiscreteField,
    grads=None,
) -> TangentVector:
    """H-orthogonal projection of phi onto the tangent space at u."""
    if grads is None:
        grads = h_gradients(problem, u.field)
    xi = _project(problem, phi.coeffs, grads.grad_g.coeffs)
    _check_tangency(problem, xi, grads.grad_g.coeffs)
    return TangentVector(base=u.field, dir=problem.field(xi))


def riemannian_gradient(problem: EllipticProblem, u: ManifoldPoint, grads=None) -> TangentVector:
    """Projection of the H-gradient of E onto the tangent space at u."""
    if grads is None:
        grads = h_gradients(problem, u.field)
    return project_tangent(problem, u, grads.grad_e, grads=grads)


def retract(problem: EllipticProblem, u: ManifoldPoint, xi: TangentVector) -> ManifoldPoint:
    """Nehari retraction R_u(xi) = rho(u + xi) (u + xi).

    R_u(0) returns u itself (bit for bit), matching the defining property of a
    retraction at the origin of the tangent space.
    """
    if xi.dir.is_zero():
        return u
    w = u.coeffs + xi.dir.coeffs
    s, t = scale_stats(problem, w)
    rho = _scale_from_stats(problem, s, t)
    return manifold_point(problem, problem.field(rho * w))
