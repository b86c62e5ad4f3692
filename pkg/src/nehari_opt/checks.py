"""Self-verification suite: finite-difference oracles for the derivatives,
Riesz consistency of the H-gradients, the manifold and line-search invariants
of a full run, and the sign pattern of the second-variation spectrum.

Each check yields a named PASS/FAIL line; the CLI turns any FAIL into a
nonzero exit code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import morse_index_check
from .config import RunConfig
from .fields import DiscreteField, TangentVector
from .manifold import manifold_point, nehari_scale, project_tangent, retract, riemannian_gradient
from .optimizer import diagnostics_gradient_related, nehari_descent, verify_run_chain
from .problem import EllipticProblem, apply_derivative, apply_hessian, energy, h_gradients

#: reference linear-solve accuracy per domain; the Riesz check measures
#: against these (not the configured tolerance) so an injected sloppy
#: problem.lin_tol is detected rather than silently excused
REFERENCE_LIN_TOL = {"interval": 1e-12, "square": 1e-10, "disk": 1e-12}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"check={self.name} status={status} {self.detail}"


def _unit_field(problem: EllipticProblem, rng: np.random.Generator) -> DiscreteField:
    raw = rng.standard_normal(problem.mesh.n_dof)
    return problem.field(raw / problem.norm(raw))


def run_checks(rc: RunConfig, n_directions: int = 5) -> list[CheckResult]:
    mesh = rc.build_mesh()
    problem = rc.build_problem(mesh)
    rng = np.random.default_rng(rc.rng_seed)
    results: list[CheckResult] = []

    def add(name: str, passed: bool, detail: str) -> None:
        results.append(CheckResult(name, bool(passed), detail))

    v0 = rc.build_seed(mesh)
    u0 = manifold_point(problem, problem.field(nehari_scale(problem, v0) * v0.coeffs))
    grads0 = h_gradients(problem, u0.field)

    # Riesz representer consistency of both H-gradients
    riesz_tol = 10.0 * REFERENCE_LIN_TOL[mesh.domain]
    worst_e = worst_g = 0.0
    for _ in range(n_directions):
        v = _unit_field(problem, rng)
        pairing_e = apply_derivative(problem, u0.field, v)
        err_e = abs(problem.inner(grads0.grad_e.coeffs, v.coeffs) - pairing_e)
        pairing_g = 2.0 * problem.inner(u0.coeffs, v.coeffs) - (problem.p + 1.0) * float(
            problem.nl_load(u0.coeffs) @ v.coeffs
        )
        err_g = abs(problem.inner(grads0.grad_g.coeffs, v.coeffs) - pairing_g)
        scale = problem.norm(u0.coeffs)  # test directions have unit H-norm
        worst_e = max(worst_e, err_e / scale)
        worst_g = max(worst_g, err_g / scale)
    add("riesz_consistency_e", worst_e <= riesz_tol, f"max_rel_err={worst_e:.3e} tol={riesz_tol:.1e}")
    add("riesz_consistency_g", worst_g <= riesz_tol, f"max_rel_err={worst_g:.3e} tol={riesz_tol:.1e}")

    # first variation against central differences
    h = 1e-4
    worst = 0.0
    for _ in range(n_directions):
        v = _unit_field(problem, rng)
        exact = apply_derivative(problem, u0.field, v)
        fd = (
            energy(problem, u0.field + h * v) - energy(problem, u0.field - h * v)
        ) / (2.0 * h)
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    add("derivative_fd", worst <= 1e-6, f"max_rel_err={worst:.3e} tol=1e-06")

    # second variation against differenced first variation
    worst = 0.0
    for _ in range(n_directions):
        w = _unit_field(problem, rng)
        v = _unit_field(problem, rng)
        exact = apply_hessian(problem, u0.field, w, v)
        fd = (
            apply_derivative(problem, u0.field + h * w, v)
            - apply_derivative(problem, u0.field - h * w, v)
        ) / (2.0 * h)
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    add("hessian_fd", worst <= 1e-5, f"max_rel_err={worst:.3e} tol=1e-05")

    # Riemannian gradient against the derivative of energy along retracted curves
    rg0 = riemannian_gradient(problem, u0, grads=grads0)
    worst = 0.0
    for _ in range(n_directions):
        xi = project_tangent(problem, u0, _unit_field(problem, rng), grads=grads0)
        exact = problem.inner(rg0.dir.coeffs, xi.dir.coeffs)

        def curve(step: float) -> float:
            return retract(problem, u0, TangentVector(u0.field, xi.dir * step)).energy

        def central(step: float) -> float:
            return (curve(step) - curve(-step)) / (2.0 * step)

        fd = (4.0 * central(h / 2.0) - central(h)) / 3.0  # Richardson-extrapolated
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    add("riemannian_gradient_fd", worst <= 1e-5, f"max_rel_err={worst:.3e} tol=1e-05")

    # full descent run and the invariants of its trace
    record = nehari_descent(problem, v0, rc.solver)
    add("solver_converged", record.converged, f"status={record.status} iterations={record.iterations}")
    add(
        "manifold_residual",
        record.max_manifold_residual_rel <= problem.nehari_tol,
        f"max_rel_residual={record.max_manifold_residual_rel:.3e} tol={problem.nehari_tol:.1e}",
    )
    add(
        "energy_identity",
        record.max_energy_identity_err <= 1e-10,
        f"max_rel_err={record.max_energy_identity_err:.3e} tol=1e-10",
    )
    add(
        "constraint_pairing_negative",
        record.max_constraint_pairing < 0.0,
        f"max_(gradG,u)_H={record.max_constraint_pairing:.6e}",
    )
    chain = verify_run_chain(record, rc.solver)
    for key, ok in chain.items():
        add(f"chain_{key}", ok, "")
    if rc.solver.rho_nm == 0.0:
        mono = bool(np.all(np.diff(record.energy) <= 1e-12 * (1.0 + np.abs(record.energy[:-1]))))
        add("monotone_descent", mono, "rho_nm=0 reduces to the monotone step rule")
    qn_exact = np.array(
        [np.polyval(np.ones(n + 1), rc.solver.rho_nm) for n in range(record.q_n.size)]
    )
    q_err = float(np.max(np.abs(record.q_n - qn_exact)))
    add("q_closed_form", q_err <= 1e-12, f"max_err={q_err:.3e}")

    diag = diagnostics_gradient_related(record, tail_grad_tol=10.0 * rc.solver.eps_tol)
    add(
        "steepest_descent_slope_identity",
        diag.slope_identity_max_err <= 1e-12 * (1.0 + float(record.grad_norm.max()) ** 2),
        f"max_err={diag.slope_identity_max_err:.3e}",
    )
    add(
        "steepest_descent_norm_identity",
        diag.norm_identity_max_err == 0.0,
        f"max_err={diag.norm_identity_max_err:.3e}",
    )
    add(
        "retraction_ratio_finite",
        np.isfinite(diag.retraction_ratio_max),
        f"empirical_M={diag.retraction_ratio_max:.6g}",
    )
    add(
        "step_distance_tail",
        diag.tail_step_max < 1e-4,
        f"tail_max={diag.tail_step_max:.3e} tail_steps={diag.tail_steps}",
    )
    add(
        "natural_constraint",
        record.final_grad_e_norm <= 10.0 * rc.solver.eps_tol,
        f"free_gradient_norm={record.final_grad_e_norm:.3e} tol={10.0 * rc.solver.eps_tol:.1e}",
    )

    if record.converged:
        u_star = manifold_point(problem, record.solution)
        morse = morse_index_check(problem, u_star, k=2)
        sign_ok = morse.thetas[0] < -1e-8 and morse.thetas[1] > 1e-8
        add(
            "morse_index_one",
            sign_ok and morse.morse_index == 1,
            f"theta1={morse.thetas[0]:.6e} theta2={morse.thetas[1]:.6e}",
        )
    return results
