"""Polar grid on the unit disk: Fourier collocation in the angle, conservative
second-order finite differences on a shifted radial grid.

Radial cells are centered at r_k = (k + 1/2) h with h = 1/n_r, so the pole
r = 0 is a cell face with zero flux weight (no pole condition needed) and the
Dirichlet boundary r = 1 is the outermost face (handled by ghost reflection).
The angular direction is a uniform periodic grid diagonalized by the real FFT,
so applying or inverting ``-lap + a(r)`` decouples into one symmetric
positive-definite tridiagonal system per Fourier mode.

All integrals use the midpoint rule with weights r_k * h * h_theta, which
makes the weighted operator symmetric and keeps radially symmetric data
exactly radial through assembly and solves (modes m != 0 stay at roundoff).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .discretization import _signed_power, initial_guess_function, radial_guess_function
from .errors import AssemblyFailure


class DiskOperator:
    """Weighted -lap + a operator on the polar grid, FFT-diagonalized in theta."""

    def __init__(self, mesh: "DiskMesh", a_ring: np.ndarray):
        self.mesh = mesh
        self.n_dof = mesh.n_dof
        self.sparse = None  # matrix-free; use matvec / solve

        n_r, n_theta = mesh.n_r, mesh.n_theta
        h, h_theta = mesh.h_r, mesh.h_theta
        faces = np.arange(n_r + 1) * h  # cell faces, faces[0] = 0, faces[-1] = 1
        r = mesh.r_centers

        self._off = -(h_theta / h) * faces[1:n_r]  # coupling between rings k, k+1
        base_diag = (h_theta / h) * (faces[:-1] + faces[1:])
        base_diag[-1] += (h_theta / h) * faces[-1]  # ghost reflection across r = 1
        base_diag = base_diag + h * h_theta * r * a_ring

        modes = np.arange(n_theta // 2 + 1)
        # (n_r, n_modes) diagonal: radial part + spectral angular multiplier m^2
        self._diag = base_diag[:, None] + (h * h_theta) * modes[None, :] ** 2 / r[:, None]

        self._chol = []
        for m in range(n_theta // 2 + 1):
            ab = np.zeros((2, n_r))
            ab[0, 1:] = self._off
            ab[1, :] = self._diag[:, m]
            try:
                self._chol.append(scipy.linalg.cholesky_banded(ab, lower=False))
            except scipy.linalg.LinAlgError as exc:
                raise AssemblyFailure(
                    f"disk operator is not positive definite (mode {m}): {exc}"
                ) from exc

    def matvec(self, u: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        uh = np.fft.rfft(u.reshape(mesh.n_r, mesh.n_theta), axis=1)
        y = self._diag * uh
        y[:-1] += self._off[:, None] * uh[1:]
        y[1:] += self._off[:, None] * uh[:-1]
        return np.fft.irfft(y, n=mesh.n_theta, axis=1).ravel()

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(v @ self.matvec(u))

    def norm_sq(self, u: np.ndarray) -> float:
        return float(u @ self.matvec(u))

    def solve(self, rhs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        # direct per-mode banded elimination; tol documents the contract only
        mesh = self.mesh
        bh = np.fft.rfft(rhs.reshape(mesh.n_r, mesh.n_theta), axis=1)
        out = np.empty_like(bh)
        for m, chol in enumerate(self._chol):
            stacked = np.stack([bh[:, m].real, bh[:, m].imag], axis=1)
            sol = scipy.linalg.cho_solve_banded((chol, False), stacked)
            out[:, m] = sol[:, 0] + 1j * sol[:, 1]
        return np.fft.irfft(out, n=mesh.n_theta, axis=1).ravel()


class DiskMesh:
    """Collocation grid on the unit disk (theta uniform, r cell-centered)."""

    domain = "disk"
    dim = 2

    def __init__(self, n_theta: int = 64, n_r: int = 64):
        if n_theta % 2 != 0 or n_theta < 4:
            raise ValueError("n_theta must be even and >= 4")
        if n_r < 2:
            raise ValueError("n_r must be >= 2")
        self.n_theta, self.n_r = n_theta, n_r
        self.h_r = 1.0 / n_r
        self.h_theta = 2.0 * np.pi / n_theta
        self.r_centers = (np.arange(n_r) + 0.5) * self.h_r
        self.theta = np.arange(n_theta) * self.h_theta
        self.n_dof = n_r * n_theta
        self.mesh_id = f"disk:{n_theta}x{n_r}"
        self.resolution = (n_theta, n_r)
        # midpoint quadrature weight per grid point, flattened like fields
        self._wq = np.repeat(self.r_centers * self.h_r * self.h_theta, n_theta)

    # -- geometry ---------------------------------------------------------
    def coordinates(self) -> np.ndarray:
        rr = np.repeat(self.r_centers, self.n_theta)
        tt = np.tile(self.theta, self.n_r)
        return np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=1)

    def interpolate(self, fn) -> np.ndarray:
        return np.asarray(fn(self.coordinates()), dtype=float)

    def initial_direction(self) -> np.ndarray:
        return self.interpolate(initial_guess_function(self.domain))

    def radial_direction(self) -> np.ndarray:
        return self.interpolate(radial_guess_function(self.domain))

    def eval_at_quad(self, fn) -> np.ndarray:
        return self.interpolate(fn)

    def rings(self, u: np.ndarray) -> np.ndarray:
        """Field values reshaped to (n_r, n_theta)."""
        return np.asarray(u).reshape(self.n_r, self.n_theta)

    def _ring_values(self, vals: np.ndarray, what: str) -> np.ndarray:
        grid = self.rings(vals)
        spread = np.max(np.abs(grid - grid[:, :1]))
        scale = max(1.0, float(np.max(np.abs(grid))))
        if spread > 1e-12 * scale:
            raise AssemblyFailure(f"disk discretization requires a radially symmetric {what}")
        return grid[:, 0]

    # -- assembly ---------------------------------------------------------
    def build_operator(self, a_quad: np.ndarray | None = None) -> DiskOperator:
        if a_quad is None:
            a_ring = np.zeros(self.n_r)
        else:
            a_ring = self._ring_values(np.asarray(a_quad, dtype=float), "coefficient a")
        return DiskOperator(self, a_ring)

    # -- nonlinear terms ----------------------------------------------------
    def integral_power(self, u: np.ndarray, g_quad, q: float) -> float:
        return float((self._wq * g_quad * np.abs(u) ** q).sum())

    def nl_load(self, u: np.ndarray, g_quad, p: float) -> np.ndarray:
        return self._wq * g_quad * _signed_power(u, p)

    def nl_pairing2(self, u, w, v, g_quad, p: float) -> float:
        return float((self._wq * g_quad * np.abs(u) ** (p - 1.0) * w * v).sum())

    def nl_weight_matrix(self, u: np.ndarray, g_quad, p: float):
        import scipy.sparse

        return scipy.sparse.diags(self._wq * g_quad * np.abs(u) ** (p - 1.0), format="csr")
