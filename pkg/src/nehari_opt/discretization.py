"""Meshes, quadrature, operator assembly and linear solves.

Two finite-element discretizations live here: piecewise-linear elements on a
uniform partition of the interval (-1,1) and bilinear elements on a uniform
rectangular grid over the square (-1,1)^2.  The polar grid for the unit disk
is in :mod:`nehari_opt.diskgrid`.

Every mesh exposes the same surface:

* ``build_operator(a_values)`` assembles the weak form of ``-lap + a`` on the
  interior dofs and returns an operator with ``matvec / inner / solve``.
* ``integral_power(u, g, q)`` evaluates ``int g |u|^q`` by element quadrature.
* ``nl_load(u, g, p)`` is the dual vector of ``int g |u|^(p-1) u phi_i``.
* ``nl_pairing2 / nl_weight_matrix`` give the weighted bilinear form used by
  the second derivative of the energy.

Coefficient functions are evaluated pointwise at quadrature nodes (no
projection onto the FE space).  Nodes are generated as ``(2*i - n) / n`` so
that the mesh is bitwise symmetric about the origin.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import AssemblyFailure, LinearSolveFailure


def _signed_power(u: np.ndarray, p: float) -> np.ndarray:
    """Continuous odd extension sign(u)*|u|**p (0 maps to 0 for p > 0)."""
    return np.sign(u) * np.abs(u) ** p


def _symmetric_nodes(n: int) -> np.ndarray:
    # (2i - n)/n is bitwise antisymmetric under i -> n - i and hits 0, +-1 exactly
    return (2.0 * np.arange(n + 1) - n) / n


def initial_guess_function(domain: str):
    """The built-in (deliberately non-radial) seed profile for each domain."""
    if domain == "interval":
        return lambda pts: (pts[..., 0] - 1.0) ** 2 * (pts[..., 0] + 1.0)
    if domain == "square":
        return lambda pts: (1.0 - pts[..., 0] ** 2) * (1.0 - pts[..., 1] ** 2)
    if domain == "disk":
        return lambda pts: (1.0 - pts[..., 0] ** 2 - pts[..., 1] ** 2) * np.exp(
            2.0 * pts[..., 0] + pts[..., 1]
        )
    raise ValueError(f"unknown domain {domain!r}")


def radial_guess_function(domain: str):
    """A radially symmetric seed profile, useful for comparison runs."""
    if domain == "interval":
        return lambda pts: 1.0 - pts[..., 0] ** 2
    if domain == "square":
        return lambda pts: (1.0 - pts[..., 0] ** 2) * (1.0 - pts[..., 1] ** 2)
    if domain == "disk":
        return lambda pts: 1.0 - pts[..., 0] ** 2 - pts[..., 1] ** 2
    raise ValueError(f"unknown domain {domain!r}")


def _pcg(matvec, b, precond, tol, maxiter):
    """Preconditioned conjugate gradients with a relative-residual stop."""
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b)
    r = b.copy()
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    for _ in range(maxiter):
        ap = matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0 or not np.isfinite(pap):
            raise AssemblyFailure("conjugate gradient breakdown: operator is not positive definite")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= tol * b_norm:
            return x
        z = precond(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolveFailure(
        f"conjugate gradient did not reach relative residual {tol:g} in {maxiter} iterations"
    )


class TridiagonalOperator:
    """SPD tridiagonal H-inner-product operator on interval interior dofs."""

    def __init__(self, diag: np.ndarray, off: np.ndarray):
        n = diag.shape[0]
        self.n_dof = n
        ab = np.zeros((2, n))
        ab[0, 1:] = off
        ab[1, :] = diag
        self._ab = ab
        try:
            self._chol = scipy.linalg.cholesky_banded(ab, lower=False)
        except scipy.linalg.LinAlgError as exc:
            raise AssemblyFailure(f"inner-product operator is not positive definite: {exc}") from exc
        self.sparse = scipy.sparse.diags(
            [off, diag, off], [-1, 0, 1], shape=(n, n), format="csr"
        )

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.sparse @ u

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(v @ (self.sparse @ u))

    def norm_sq(self, u: np.ndarray) -> float:
        return float(u @ (self.sparse @ u))

    def solve(self, rhs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        # direct banded elimination; tol only documents the contract here
        return scipy.linalg.cho_solve_banded((self._chol, False), rhs)


class SparsePcgOperator:
    """SPD sparse operator solved by incomplete-factorization PCG."""

    def __init__(self, matrix: scipy.sparse.csr_matrix):
        self.sparse = matrix
        self.n_dof = matrix.shape[0]
        diag = matrix.diagonal()
        if np.any(diag <= 0.0):
            raise AssemblyFailure("inner-product operator has a nonpositive diagonal")
        try:
            ilu = scipy.sparse.linalg.spilu(matrix.tocsc(), drop_tol=1e-5, fill_factor=12)
            self._precond = ilu.solve
        except RuntimeError:
            inv_diag = 1.0 / diag
            self._precond = lambda r: inv_diag * r

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.sparse @ u

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(v @ (self.sparse @ u))

    def norm_sq(self, u: np.ndarray) -> float:
        return float(u @ (self.sparse @ u))

    def solve(self, rhs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        return _pcg(self.matvec, rhs, self._precond, tol, maxiter=10 * self.n_dof)


class IntervalMesh:
    """Uniform P1 elements on (-1,1) with homogeneous Dirichlet boundary."""

    domain = "interval"
    dim = 1

    def __init__(self, n_elements: int = 1000, n_quad: int = 4):
        if n_elements < 2:
            raise ValueError("need at least 2 elements")
        self.n_elements = n_elements
        self.n_quad = n_quad
        self.h = 2.0 / n_elements
        self.nodes = _symmetric_nodes(n_elements)
        self.n_dof = n_elements - 1
        self.mesh_id = f"interval:{n_elements}"
        self.resolution = (n_elements,)

        t, w = np.polynomial.legendre.leggauss(n_quad)
        centers = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        self._xq = centers[:, None] + 0.5 * self.h * t[None, :]  # (n_el, n_q)
        self._wq = 0.5 * self.h * w  # (n_q,)
        self._phi = np.stack([(1.0 - t) / 2.0, (1.0 + t) / 2.0])  # (2, n_q)

    # -- geometry ---------------------------------------------------------
    def coordinates(self) -> np.ndarray:
        return self.nodes[1:-1, None]

    def quad_points(self) -> np.ndarray:
        return self._xq[..., None]

    def interpolate(self, fn) -> np.ndarray:
        return np.asarray(fn(self.coordinates()), dtype=float)

    def initial_direction(self) -> np.ndarray:
        return self.interpolate(initial_guess_function(self.domain))

    def radial_direction(self) -> np.ndarray:
        return self.interpolate(radial_guess_function(self.domain))

    def eval_at_quad(self, fn) -> np.ndarray:
        return np.asarray(fn(self.quad_points()), dtype=float)

    def _full(self, u: np.ndarray) -> np.ndarray:
        z = np.zeros(self.n_elements + 1)
        z[1:-1] = u
        return z

    def _at_quad(self, u: np.ndarray) -> np.ndarray:
        z = self._full(u)
        return z[:-1, None] * self._phi[0] + z[1:, None] * self._phi[1]

    # -- assembly ---------------------------------------------------------
    def build_operator(self, a_quad: np.ndarray | None = None) -> TridiagonalOperator:
        n = self.n_dof
        diag = np.full(n, 2.0 / self.h)
        off = np.full(n - 1, -1.0 / self.h)
        if a_quad is not None:
            m_ll = (a_quad * self._wq * self._phi[0] ** 2).sum(axis=1)
            m_rr = (a_quad * self._wq * self._phi[1] ** 2).sum(axis=1)
            m_lr = (a_quad * self._wq * self._phi[0] * self._phi[1]).sum(axis=1)
            full_diag = np.zeros(self.n_elements + 1)
            full_diag[:-1] += m_ll
            full_diag[1:] += m_rr
            diag = diag + full_diag[1:-1]
            off = off + m_lr[1:-1]
        return TridiagonalOperator(diag, off)

    def _weighted_mass(self, c_quad: np.ndarray) -> scipy.sparse.csr_matrix:
        m_ll = (c_quad * self._wq * self._phi[0] ** 2).sum(axis=1)
        m_rr = (c_quad * self._wq * self._phi[1] ** 2).sum(axis=1)
        m_lr = (c_quad * self._wq * self._phi[0] * self._phi[1]).sum(axis=1)
        full_diag = np.zeros(self.n_elements + 1)
        full_diag[:-1] += m_ll
        full_diag[1:] += m_rr
        return scipy.sparse.diags(
            [m_lr[1:-1], full_diag[1:-1], m_lr[1:-1]], [-1, 0, 1], format="csr"
        )

    # -- nonlinear terms ----------------------------------------------------
    def integral_power(self, u: np.ndarray, g_quad, q: float) -> float:
        uq = self._at_quad(u)
        return float(((np.abs(uq) ** q) * g_quad * self._wq).sum())

    def nl_load(self, u: np.ndarray, g_quad, p: float) -> np.ndarray:
        fq = g_quad * _signed_power(self._at_quad(u), p) * self._wq
        full = np.zeros(self.n_elements + 1)
        full[:-1] += fq @ self._phi[0]
        full[1:] += fq @ self._phi[1]
        return full[1:-1]

    def nl_pairing2(self, u, w, v, g_quad, p: float) -> float:
        cq = g_quad * np.abs(self._at_quad(u)) ** (p - 1.0) * self._wq
        return float((cq * self._at_quad(w) * self._at_quad(v)).sum())

    def nl_weight_matrix(self, u: np.ndarray, g_quad, p: float) -> scipy.sparse.csr_matrix:
        return self._weighted_mass(g_quad * np.abs(self._at_quad(u)) ** (p - 1.0))


class SquareMesh:
    """Uniform bilinear elements on (-1,1)^2 with Dirichlet boundary."""

    domain = "square"
    dim = 2

    def __init__(self, nx: int = 100, ny: int | None = None, n_quad: int = 4):
        ny = nx if ny is None else ny
        if nx < 2 or ny < 2:
            raise ValueError("need at least 2 elements per direction")
        self.nx, self.ny = nx, ny
        self.n_quad = n_quad
        self.hx, self.hy = 2.0 / nx, 2.0 / ny
        self.x_nodes = _symmetric_nodes(nx)
        self.y_nodes = _symmetric_nodes(ny)
        self.n_dof = (nx - 1) * (ny - 1)
        self.mesh_id = f"square:{nx}x{ny}"
        self.resolution = (nx, ny)

        # interior dof numbering: lexicographic over interior node (i, j)
        ii, jj = np.meshgrid(np.arange(1, nx), np.arange(1, ny), indexing="ij")
        self._interior_nodes = (ii * (ny + 1) + jj).ravel()

        ei, ej = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        g = (ei * (ny + 1) + ej).ravel()
        self._elem2node = np.stack(
            [g, g + (ny + 1), g + 1, g + (ny + 1) + 1], axis=1
        )  # (n_el, 4): LL, LR, UL, UR

        t, w = np.polynomial.legendre.leggauss(n_quad)
        s2, t2 = np.meshgrid(t, t, indexing="ij")
        s2, t2 = s2.ravel(), t2.ravel()
        w2 = np.outer(w, w).ravel()
        self._wq = 0.25 * self.hx * self.hy * w2  # (n_q2,)

        phi = np.stack(
            [
                (1 - s2) * (1 - t2) / 4,
                (1 + s2) * (1 - t2) / 4,
                (1 - s2) * (1 + t2) / 4,
                (1 + s2) * (1 + t2) / 4,
            ],
            axis=1,
        )  # (n_q2, 4)
        dphi_ds = np.stack([-(1 - t2) / 4, (1 - t2) / 4, -(1 + t2) / 4, (1 + t2) / 4], axis=1)
        dphi_dt = np.stack([-(1 - s2) / 4, -(1 + s2) / 4, (1 - s2) / 4, (1 + s2) / 4], axis=1)
        self._phi = phi
        self._gdx = dphi_ds * (2.0 / self.hx)
        self._gdy = dphi_dt * (2.0 / self.hy)

        cx = 0.5 * (self.x_nodes[:-1] + self.x_nodes[1:])
        cy = 0.5 * (self.y_nodes[:-1] + self.y_nodes[1:])
        ex, ey = np.meshgrid(cx, cy, indexing="ij")
        xq = ex.ravel()[:, None] + 0.5 * self.hx * s2[None, :]
        yq = ey.ravel()[:, None] + 0.5 * self.hy * t2[None, :]
        self._quad_xy = np.stack([xq, yq], axis=-1)  # (n_el, n_q2, 2)

    # -- geometry ---------------------------------------------------------
    def coordinates(self) -> np.ndarray:
        xx, yy = np.meshgrid(self.x_nodes[1:-1], self.y_nodes[1:-1], indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=1)

    def quad_points(self) -> np.ndarray:
        return self._quad_xy

    def interpolate(self, fn) -> np.ndarray:
        return np.asarray(fn(self.coordinates()), dtype=float)

    def initial_direction(self) -> np.ndarray:
        return self.interpolate(initial_guess_function(self.domain))

    def radial_direction(self) -> np.ndarray:
        return self.interpolate(radial_guess_function(self.domain))

    def eval_at_quad(self, fn) -> np.ndarray:
        return np.asarray(fn(self._quad_xy), dtype=float)

    def _full(self, u: np.ndarray) -> np.ndarray:
        z = np.zeros((self.nx + 1) * (self.ny + 1))
        z[self._interior_nodes] = u
        return z

    def _at_quad(self, u: np.ndarray) -> np.ndarray:
        ze = self._full(u)[self._elem2node]  # (n_el, 4)
        return ze @ self._phi.T  # (n_el, n_q2)

    # -- assembly ---------------------------------------------------------
    def _scatter(self, local: np.ndarray) -> scipy.sparse.csr_matrix:
        """Sum (n_el, 4, 4) local matrices into the interior-dof CSR matrix."""
        n_full = (self.nx + 1) * (self.ny + 1)
        full2dof = np.full(n_full, -1, dtype=int)
        full2dof[self._interior_nodes] = np.arange(self.n_dof)
        rows = full2dof[self._elem2node][:, :, None]  # (n_el, 4, 1)
        cols = full2dof[self._elem2node][:, None, :]  # (n_el, 1, 4)
        rows, cols = np.broadcast_arrays(rows, cols)
        keep = (rows >= 0) & (cols >= 0)
        mat = scipy.sparse.coo_matrix(
            (local[keep], (rows[keep], cols[keep])), shape=(self.n_dof, self.n_dof)
        )
        return mat.tocsr()

    def build_operator(self, a_quad: np.ndarray | None = None) -> SparsePcgOperator:
        k0 = np.einsum("qa,qb->ab", self._gdx * self._wq[:, None], self._gdx)
        k0 += np.einsum("qa,qb->ab", self._gdy * self._wq[:, None], self._gdy)
        local = np.broadcast_to(k0, (self.nx * self.ny, 4, 4)).copy()
        if a_quad is not None:
            local += np.einsum("eq,qa,qb->eab", a_quad * self._wq, self._phi, self._phi)
        # exact symmetrization: einsum reductions need not pair (a,b) and (b,a)
        local = 0.5 * (local + local.transpose(0, 2, 1))
        return SparsePcgOperator(self._scatter(local))

    def _weighted_mass(self, c_quad: np.ndarray) -> scipy.sparse.csr_matrix:
        local = np.einsum("eq,qa,qb->eab", c_quad * self._wq, self._phi, self._phi)
        local = 0.5 * (local + local.transpose(0, 2, 1))
        return self._scatter(local)

    # -- nonlinear terms ----------------------------------------------------
    def integral_power(self, u: np.ndarray, g_quad, q: float) -> float:
        uq = self._at_quad(u)
        return float(((np.abs(uq) ** q) * g_quad * self._wq).sum())

    def nl_load(self, u: np.ndarray, g_quad, p: float) -> np.ndarray:
        fq = g_quad * _signed_power(self._at_quad(u), p) * self._wq
        contrib = fq @ self._phi  # (n_el, 4)
        full = np.zeros((self.nx + 1) * (self.ny + 1))
        np.add.at(full, self._elem2node, contrib)
        return full[self._interior_nodes]

    def nl_pairing2(self, u, w, v, g_quad, p: float) -> float:
        cq = g_quad * np.abs(self._at_quad(u)) ** (p - 1.0) * self._wq
        return float((cq * self._at_quad(w) * self._at_quad(v)).sum())

    def nl_weight_matrix(self, u: np.ndarray, g_quad, p: float) -> scipy.sparse.csr_matrix:
        return self._weighted_mass(g_quad * np.abs(self._at_quad(u)) ** (p - 1.0))
