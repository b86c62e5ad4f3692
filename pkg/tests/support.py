"""Shared helpers for the test suite."""

import nehari_opt as no


def on_manifold(problem, direction=None) -> no.ManifoldPoint:
    """Scale a direction (default: the built-in seed) onto the manifold."""
    mesh = problem.mesh
    if direction is None:
        direction = no.DiscreteField(mesh.initial_direction(), mesh)
    rho = no.nehari_scale(problem, direction)
    return no.manifold_point(problem, problem.field(rho * direction.coeffs))


def random_unit_field(problem, rng) -> no.DiscreteField:
    raw = rng.standard_normal(problem.mesh.n_dof)
    return problem.field(raw / problem.norm(raw))


def random_smooth_field(problem, rng) -> no.DiscreteField:
    """Unit-H-norm random field with the high frequencies damped (inverse
    operator applied to noise); scaling such a field onto the manifold keeps
    its amplitude moderate, unlike raw coefficient noise."""
    raw = problem.operator.solve(rng.standard_normal(problem.mesh.n_dof), problem.lin_tol)
    return problem.field(raw / problem.norm(raw))


def random_tangent(problem, point, rng, grads=None) -> no.TangentVector:
    """A unit-H-norm tangent vector at ``point`` from a random direction."""
    if grads is None:
        grads = no.h_gradients(problem, point.field)
    xi = no.project_tangent(problem, point, random_unit_field(problem, rng), grads=grads)
    scale = problem.norm(xi.dir.coeffs)
    return no.TangentVector(point.field, xi.dir * (1.0 / scale))


def solve_default(problem, cfg=None) -> no.RunRecord:
    mesh = problem.mesh
    v0 = no.DiscreteField(mesh.initial_direction(), mesh)
    return no.nehari_descent(problem, v0, cfg or no.SolverConfig())
