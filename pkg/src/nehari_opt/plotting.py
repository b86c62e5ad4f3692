"""Figure rendering for the report path of the CLI.

Figures are written next to the delimited outputs; the CSVs remain the
canonical record.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import CriticalExponentResult, FitResult
from .fields import DiscreteField
from .optimizer import RunRecord


def save_convergence_plot(record: RunRecord, path) -> None:
    fig, (ax_e, ax_g) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax_e.plot(record.iteration, record.energy, "b-", lw=1.2, label="energy")
    ax_e.plot(record.iteration, record.c_n, "r--", lw=1.0, label="reference $C_n$")
    ax_e.set_xlabel("iteration")
    ax_e.set_ylabel("energy")
    ax_e.legend(fontsize=8)
    ax_g.semilogy(record.iteration, np.maximum(record.grad_norm, 1e-300), "k-", lw=1.2)
    ax_g.set_xlabel("iteration")
    ax_g.set_ylabel("Riemannian gradient norm")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_field_plot(field: DiscreteField, path, title: str = "") -> None:
    mesh = field.mesh
    fig = plt.figure(figsize=(5.4, 4.2))
    if mesh.domain == "interval":
        ax = fig.add_subplot(111)
        x = mesh.coordinates()[:, 0]
        full_x = np.concatenate([[-1.0], x, [1.0]])
        full_u = np.concatenate([[0.0], field.coeffs, [0.0]])
        ax.plot(full_x, full_u, "b-", lw=1.4)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    elif mesh.domain == "square":
        ax = fig.add_subplot(111)
        grid = field.coeffs.reshape(mesh.nx - 1, mesh.ny - 1)
        im = ax.imshow(
            grid.T, origin="lower", extent=(-1, 1, -1, 1), cmap="viridis", aspect="equal"
        )
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:  # disk
        ax = fig.add_subplot(111)
        grid = mesh.rings(field.coeffs)
        theta = np.concatenate([mesh.theta, [2.0 * np.pi]])
        closed = np.concatenate([grid, grid[:, :1]], axis=1)
        tt, rr = np.meshgrid(theta, mesh.r_centers)
        im = ax.pcolormesh(rr * np.cos(tt), rr * np.sin(tt), closed, cmap="viridis", shading="gouraud")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bisect_plot(result: CriticalExponentResult, threshold: float, path) -> None:
    ls = np.array([l for l, _ in result.evaluations])
    mus = np.array([mu for _, mu in result.evaluations])
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.semilogy(ls, np.maximum(mus, 1e-18), "bo", ms=5)
    ax.axhline(threshold, color="r", ls="--", lw=1.0, label="symmetry threshold")
    ax.axvline(result.l_star_estimate, color="g", ls=":", lw=1.2, label="$l^*$ estimate")
    ax.set_xlabel("l")
    ax.set_ylabel("asymmetry degree")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_fit_plot(results: list[CriticalExponentResult], fit: FitResult, path) -> None:
    ps = np.array([r.p for r in results])
    ls = np.array([r.l_star_estimate for r in results])
    order = np.argsort(ps)
    ps, ls = ps[order], ls[order]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(ps, ls, "bo", ms=5, label="bisection estimates")
    grid = np.linspace(ps.min(), ps.max(), 200)
    ax.plot(grid, fit.predict(grid), "r-", lw=1.2, label="fitted law")
    ax.set_xlabel("p")
    ax.set_ylabel("critical exponent $l^*$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
