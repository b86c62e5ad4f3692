"""Text output: field dumps, convergence CSVs, study CSVs and summaries.

Everything is UTF-8 with LF line endings and floats printed with 17
significant digits, which round-trips IEEE doubles exactly.  A field dump is
plain text: line 1 holds the domain kind and resolution, every following line
one node (coordinates then value), columns separated by single spaces.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .analysis import CriticalExponentResult, FitResult
from .fields import DiscreteField
from .optimizer import RunRecord
from .problem import make_mesh

CONVERGENCE_COLUMNS = "n,energy,grad_norm,alpha,backtracks,C_n,nehari_residual"
SWEEP_COLUMNS = "p,l_lo,l_hi,l_star,n_evals,total_iters"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_w(path):
    return io.open(path, "w", encoding="utf-8", newline="\n")


def write_field(field: DiscreteField, path) -> None:
    mesh = field.mesh
    coords = mesh.coordinates()
    with _open_w(path) as fh:
        fh.write(mesh.domain + " " + " ".join(str(r) for r in mesh.resolution) + "\n")
        for row, val in zip(coords, field.coeffs):
            fh.write(" ".join(fmt(c) for c in row) + " " + fmt(val) + "\n")


def read_field(path, mesh=None) -> DiscreteField:
    with io.open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header:
            raise ValueError(f"{path}: empty field dump")
        domain, resolution = header[0], tuple(int(tok) for tok in header[1:])
        if mesh is None:
            mesh = make_mesh(domain, resolution)
        elif mesh.domain != domain or tuple(mesh.resolution) != resolution:
            raise ValueError(
                f"{path}: dump is {domain} {resolution}, expected "
                f"{mesh.domain} {tuple(mesh.resolution)}"
            )
        values = [float(line.split()[-1]) for line in fh if line.strip()]
    coeffs = np.asarray(values)
    if coeffs.shape[0] != mesh.n_dof:
        raise ValueError(f"{path}: has {coeffs.shape[0]} values, mesh needs {mesh.n_dof}")
    return DiscreteField(coeffs, mesh)


def write_convergence_csv(record: RunRecord, path, meta: dict | None = None) -> None:
    with _open_w(path) as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write(CONVERGENCE_COLUMNS + "\n")
        for i in range(record.iteration.size):
            fh.write(
                ",".join(
                    [
                        str(int(record.iteration[i])),
                        fmt(record.energy[i]),
                        fmt(record.grad_norm[i]),
                        fmt(record.alpha[i]),
                        str(int(record.backtracks[i])),
                        fmt(record.c_n[i]),
                        fmt(record.nehari_residual[i]),
                    ]
                )
                + "\n"
            )


def write_summary(path, entries: dict) -> None:
    with _open_w(path) as fh:
        for key, value in entries.items():
            if isinstance(value, float):
                value = fmt(value)
            fh.write(f"{key}={value}\n")


def write_bisect_csv(result: CriticalExponentResult, path_result, path_evals) -> None:
    with _open_w(path_result) as fh:
        fh.write(SWEEP_COLUMNS + "\n")
        fh.write(
            ",".join(
                [
                    fmt(result.p),
                    fmt(result.bracket_lo),
                    fmt(result.bracket_hi),
                    fmt(result.l_star_estimate),
                    str(result.n_bisection_evals),
                    str(result.total_iterations),
                ]
            )
            + "\n"
        )
    with _open_w(path_evals) as fh:
        fh.write("l,mu\n")
        for l_val, mu in result.evaluations:
            fh.write(fmt(l_val) + "," + fmt(mu) + "\n")


def write_sweep_csv(results: list[CriticalExponentResult], path) -> None:
    with _open_w(path) as fh:
        fh.write(SWEEP_COLUMNS + "\n")
        for res in sorted(results, key=lambda r: r.p):
            fh.write(
                ",".join(
                    [
                        fmt(res.p),
                        fmt(res.bracket_lo),
                        fmt(res.bracket_hi),
                        fmt(res.l_star_estimate),
                        str(res.n_bisection_evals),
                        str(res.total_iterations),
                    ]
                )
                + "\n"
            )


def fit_summary_lines(fit: FitResult, extra: dict | None = None) -> list[str]:
    lines = [f"model={fit.model}"]
    if fit.model == "inverse_law":
        lines.append(f"k0={fmt(fit.params[0])}")
    else:
        lines.append(f"k1={fmt(fit.params[0])}")
        lines.append(f"k2={fmt(fit.params[1])}")
    lines.append(f"mse={fmt(fit.mse)}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={fmt(value) if isinstance(value, float) else value}")
    return lines


def ensure_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out
