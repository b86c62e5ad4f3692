"""Energy model for the semilinear elliptic boundary value problem

    -lap u + a(x) u - g(x) |u|^(p-1) u = 0  in Omega,   u = 0 on the boundary,

with the problem-adapted inner product (u,v)_H = int (grad u . grad v + a u v).
The energy is E(u) = ||u||_H^2 / 2 - int g |u|^(p+1) / (p+1); its H-gradient
and the H-gradient of the constraint G(u) = <E'(u), u> both come from a single
linear elliptic solve:  with  (-lap + a) psi = g |u|^(p-1) u,

    grad E(u) = u - psi,        grad G(u) = 2 u - (p+1) psi.

Presets cover the stationary nonlinear Schroedinger equation
(a = omega |x|^2 + lambda, g = 1, p = 3) and the Henon equation
(a = 0, g = |x|^l).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .discretization import IntervalMesh, SquareMesh
from .diskgrid import DiskMesh
from .errors import InvalidCoefficient
from .fields import DiscreteField

_BESSEL_J0_FIRST_ROOT = 2.404825557695773

#: Closed-form first Dirichlet eigenvalue of -lap for each supported domain.
FIRST_DIRICHLET_EIGENVALUE = {
    "interval": np.pi ** 2 / 4.0,
    "square": np.pi ** 2 / 2.0,
    "disk": _BESSEL_J0_FIRST_ROOT ** 2,
}


def make_mesh(domain: str, resolution: tuple[int, ...], n_quad: int = 4):
    """Construct the mesh named by a domain kind and resolution tuple."""
    if domain == "interval":
        (n,) = resolution
        return IntervalMesh(n, n_quad=n_quad)
    if domain == "square":
        nx, ny = resolution
        return SquareMesh(nx, ny, n_quad=n_quad)
    if domain == "disk":
        n_theta, n_r = resolution
        return DiskMesh(n_theta, n_r)
    raise ValueError(f"unknown domain {domain!r}")


def quad_order_for_exponent(p: float) -> int:
    """Gauss points per element/direction so that int g|u|^(p+1) is resolved."""
    return max(4, int(np.ceil((p + 1.0) / 2.0)) + 1)


@dataclass(frozen=True)
class Coefficient:
    """Pointwise coefficient descriptor: zero, constant, c1*|x|^2 + c0, or |x|^power."""

    kind: str
    c0: float = 0.0
    c1: float = 0.0
    power: float = 0.0

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        if self.kind == "zero":
            return np.zeros(shape)
        if self.kind == "constant":
            return np.full(shape, self.c0)
        r_sq = (pts ** 2).sum(axis=-1)
        if self.kind == "radial_quadratic":
            return self.c1 * r_sq + self.c0
        if self.kind == "radial_power":
            return r_sq ** (self.power / 2.0)
        raise ValueError(f"unknown coefficient kind {self.kind!r}")

    @property
    def lower_bound(self) -> float:
        """Infimum over the domain (all supported coefficients are radial)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.c0
        if self.kind == "radial_quadratic":
            return self.c0  # c1 >= 0 is validated at problem construction
        return 0.0  # |x|^power with power >= 0


@dataclass(frozen=True)
class GradientPair:
    """H-gradients of the energy and of the constraint at one point."""

    grad_e: DiscreteField
    grad_g: DiscreteField


class EllipticProblem:
    """One instance of the BVP on a mesh; immutable after construction."""

    def __init__(
        self,
        mesh,
        coeff_a: Coefficient,
        coeff_g: Coefficient,
        exponent_p: float,
        lin_tol: float | None = None,
        nehari_tol: float = 1e-8,
        tangency_tol: float = 1e-8,
    ):
        if exponent_p <= 1.0:
            raise InvalidCoefficient(f"exponent p must exceed 1, got {exponent_p}")
        if coeff_g.kind == "constant" and coeff_g.c0 <= 0.0:
            raise InvalidCoefficient("coefficient g must be positive")
        if coeff_g.kind == "radial_power" and coeff_g.power < 0.0:
            raise InvalidCoefficient("radial power of g must be >= 0")
        if coeff_g.kind == "zero":
            raise InvalidCoefficient("coefficient g must be positive")
        if coeff_a.kind == "radial_quadratic" and coeff_a.c1 < 0.0:
            raise InvalidCoefficient("quadratic coefficient of a must be >= 0")
        lam1 = FIRST_DIRICHLET_EIGENVALUE[mesh.domain]
        if coeff_a.lower_bound <= -lam1:
            raise InvalidCoefficient(
                f"a(x) >= {coeff_a.lower_bound:g} violates a0 > -lambda_1 = {-lam1:.6g} "
                f"on the {mesh.domain}"
            )
        self.mesh = mesh
        self.coeff_a = coeff_a
        self.coeff_g = coeff_g
        self.p = float(exponent_p)
        if lin_tol is None:
            lin_tol = 1e-10 if mesh.domain == "square" else 1e-12
        self.lin_tol = float(lin_tol)
        self.nehari_tol = float(nehari_tol)
        self.tangency_tol = float(tangency_tol)

    @cached_property
    def operator(self):
        a_quad = None if self.coeff_a.kind == "zero" else self.mesh.eval_at_quad(self.coeff_a)
        return self.mesh.build_operator(a_quad)

    @cached_property
    def g_quad(self) -> np.ndarray:
        return self.mesh.eval_at_quad(self.coeff_g)

    @property
    def is_henon(self) -> bool:
        return self.coeff_a.kind == "zero" and self.coeff_g.kind == "radial_power"

    # -- array-level helpers used throughout the solver --------------------
    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.operator.inner(u, v)

    def norm_sq(self, u: np.ndarray) -> float:
        return self.operator.norm_sq(u)

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.operator.norm_sq(u), 0.0)))

    def nl_integral(self, u: np.ndarray, q: float | None = None) -> float:
        q = self.p + 1.0 if q is None else q
        return self.mesh.integral_power(u, self.g_quad, q)

    def nl_load(self, u: np.ndarray) -> np.ndarray:
        return self.mesh.nl_load(u, self.g_quad, self.p)

    def field(self, coeffs: np.ndarray) -> DiscreteField:
        return DiscreteField(coeffs, self.mesh)


# -- energy model operations -------------------------------------------------

def energy(problem: EllipticProblem, u: DiscreteField) -> float:
    """E(u) = ||u||_H^2 / 2 - int g |u|^(p+1) / (p+1)."""
    s = problem.norm_sq(u.coeffs)
    t = problem.nl_integral(u.coeffs)
    return 0.5 * s - t / (problem.p + 1.0)


def apply_derivative(problem: EllipticProblem, u: DiscreteField, v: DiscreteField) -> float:
    """First variation <E'(u), v> in the weak form."""
    return problem.inner(u.coeffs, v.coeffs) - float(problem.nl_load(u.coeffs) @ v.coeffs)


def apply_hessian(
    problem: EllipticProblem, u: DiscreteField, w: DiscreteField, v: DiscreteField
) -> float:
    """Second variation <E''(u) w, v>."""
    return problem.inner(w.coeffs, v.coeffs) - problem.p * problem.mesh.nl_pairing2(
        u.coeffs, w.coeffs, v.coeffs, problem.g_quad, problem.p
    )


def h_gradients(problem: EllipticProblem, u: DiscreteField) -> GradientPair:
    """Both H-gradients from one linear elliptic solve."""
    psi = problem.operator.solve(problem.nl_load(u.coeffs), problem.lin_tol)
    grad_e = u.coeffs - psi
    grad_g = 2.0 * u.coeffs - (problem.p + 1.0) * psi
    return GradientPair(problem.field(grad_e), problem.field(grad_g))


def preset_nls(omega: float, lam: float, mesh, **kwargs) -> EllipticProblem:
    """Stationary nonlinear Schroedinger model: a = omega |x|^2 + lambda, g = 1, p = 3."""
    if omega <= 0.0:
        raise InvalidCoefficient(f"omega must be positive, got {omega}")
    lam1 = FIRST_DIRICHLET_EIGENVALUE[mesh.domain]
    if lam <= -lam1:
        raise InvalidCoefficient(
            f"lambda = {lam:g} must exceed -lambda_1 = {-lam1:.6g} on the {mesh.domain}"
        )
    return EllipticProblem(
        mesh,
        coeff_a=Coefficient("radial_quadratic", c0=lam, c1=omega),
        coeff_g=Coefficient("constant", c0=1.0),
        exponent_p=3.0,
        **kwargs,
    )


def preset_henon(l: float, p: float, mesh, **kwargs) -> EllipticProblem:
    """Henon model: a = 0, g = |x|^l."""
    if l < 0.0:
        raise InvalidCoefficient(f"l must be >= 0, got {l}")
    if p <= 1.0:
        raise InvalidCoefficient(f"p must exceed 1, got {p}")
    return EllipticProblem(
        mesh,
        coeff_a=Coefficient("zero"),
        coeff_g=Coefficient("radial_power", power=l),
        exponent_p=p,
        **kwargs,
    )
