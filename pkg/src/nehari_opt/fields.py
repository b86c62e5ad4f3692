"""Field containers: coefficient vectors bound to a discretization.

A :class:`DiscreteField` is a vector of coefficients for the interior degrees
of freedom of one mesh.  :class:`TangentVector` and :class:`ManifoldPoint`
attach the extra structure used by the manifold machinery (a base point, and
cached energy / constraint values).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroField


@dataclass(frozen=True)
class DiscreteField:
    """Coefficients of a function in the discrete space, bound to a mesh."""

    coeffs: np.ndarray
    mesh: object

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim != 1 or coeffs.shape[0] != self.mesh.n_dof:
            raise ValueError(
                f"field has {coeffs.shape} coefficients, mesh "
                f"{self.mesh.mesh_id!r} has {self.mesh.n_dof} interior dofs"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("field coefficients must be finite")

    @property
    def mesh_id(self) -> str:
        return self.mesh.mesh_id

    def with_coeffs(self, coeffs: np.ndarray) -> "DiscreteField":
        return DiscreteField(coeffs, self.mesh)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def require_nonzero(self) -> "DiscreteField":
        if self.is_zero():
            raise ZeroField("operation requires a nonzero field")
        return self

    # Small amount of vector arithmetic; enough for callers and test oracles.
    def __add__(self, other: "DiscreteField") -> "DiscreteField":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "DiscreteField") -> "DiscreteField":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "DiscreteField":
        return self.with_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "DiscreteField":
        return self.with_coeffs(-self.coeffs)


@dataclass(frozen=True)
class TangentVector:
    """A direction attached to a manifold base point."""

    base: DiscreteField
    dir: DiscreteField

    def __post_init__(self):
        if self.base.mesh is not self.dir.mesh:
            raise ValueError("tangent vector and base point live on different meshes")


@dataclass(frozen=True)
class ManifoldPoint:
    """A field on the constraint level set with cached energy and residual.

    ``nehari_residual`` is the constraint value G(u) and ``norm_h_sq`` the
    squared H-norm; both are recomputed from the coefficients whenever a
    point is constructed (never updated incrementally).
    """

    field: DiscreteField
    energy: float
    nehari_residual: float
    norm_h_sq: float

    @property
    def coeffs(self) -> np.ndarray:
        return self.field.coeffs

    @property
    def mesh(self):
        return self.field.mesh
