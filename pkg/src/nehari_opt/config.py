"""Run configuration: flat ``section.key = value`` files.

Blank lines and ``#`` comments are ignored, unknown or duplicate keys are
rejected by name, and every numeric range is validated at parse time so that
a bad file fails before any computation starts.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field


from .discretization import initial_guess_function, radial_guess_function
from .errors import ConfigError
from .fields import DiscreteField
from .optimizer import SolverConfig
from .problem import EllipticProblem, make_mesh, preset_henon, preset_nls, quad_order_for_exponent

_DOMAINS = ("interval", "square", "disk")

#: default sweep brackets, as multiples of 1/(p-1); the interval upper scale
#: sits on the proven upper bound 4/(p-1) for the critical exponent there
DEFAULT_BRACKET_SCALES = {"interval": (1.0, 4.0), "disk": (0.5, 2.5)}


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from exc


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from exc


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be true or false, got {raw!r}")


def _parse_float_list(key: str, raw: str) -> list[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma-separated list of numbers, got {raw!r}") from exc
    if not values:
        raise ConfigError(f"{key} must contain at least one value")
    return values


@dataclass
class RunConfig:
    """All settings of a run, grouped the way the config file is."""

    # problem section
    preset: str = ""
    domain: str = ""
    omega: float | None = None
    lam: float | None = None
    henon_l: float | None = None
    henon_p: float | None = None
    n_elements: int = 1000
    nx: int = 100
    ny: int | None = None
    n_theta: int = 64
    n_r: int = 64
    lin_tol: float | None = None
    # optimizer section
    solver: SolverConfig = field(default_factory=SolverConfig)
    # experiment section
    bracket_lo: float | None = None
    bracket_hi: float | None = None
    bisect_tol: float = 0.01
    p_grid: list[float] = field(default_factory=list)
    fit: str | None = None
    bracket_lo_scale: float | None = None
    bracket_hi_scale: float | None = None
    morse_check: bool = False
    rng_seed: int = 12345
    warm_start: bool = True
    # seed section
    seed_kind: str = "default"
    seed_path: str | None = None

    # -- builders ----------------------------------------------------------
    def build_mesh(self):
        p = self.henon_p if self.preset == "henon" else 3.0
        n_quad = quad_order_for_exponent(p)
        if self.domain == "interval":
            return make_mesh("interval", (self.n_elements,), n_quad=n_quad)
        if self.domain == "square":
            ny = self.nx if self.ny is None else self.ny
            return make_mesh("square", (self.nx, ny), n_quad=n_quad)
        return make_mesh("disk", (self.n_theta, self.n_r))

    def build_problem(self, mesh=None) -> EllipticProblem:
        mesh = mesh or self.build_mesh()
        kwargs = {} if self.lin_tol is None else {"lin_tol": self.lin_tol}
        if self.preset == "nls":
            return preset_nls(self.omega, self.lam, mesh, **kwargs)
        if self.henon_l is None:
            raise ConfigError("problem.l is required to build the henon problem")
        return preset_henon(self.henon_l, self.henon_p, mesh, **kwargs)

    def build_seed(self, mesh) -> DiscreteField:
        if self.seed_kind == "default":
            return DiscreteField(mesh.interpolate(initial_guess_function(mesh.domain)), mesh)
        if self.seed_kind == "radial":
            return DiscreteField(mesh.interpolate(radial_guess_function(mesh.domain)), mesh)
        from .fileio import read_field

        return read_field(self.seed_path, mesh)

    def sweep_bracket(self, p: float) -> tuple[float, float]:
        lo_scale, hi_scale = DEFAULT_BRACKET_SCALES.get(self.domain, (1.0, 4.0))
        lo = self.bracket_lo_scale if self.bracket_lo_scale is not None else lo_scale
        hi = self.bracket_hi_scale if self.bracket_hi_scale is not None else hi_scale
        return lo / (p - 1.0), hi / (p - 1.0)


def _read_pairs(path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    with io.open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
            key, _, value = text.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
            if key in pairs:
                raise ConfigError(f"duplicate key {key}")
            pairs[key] = value
    return pairs


def parse_config(path) -> RunConfig:
    pairs = _read_pairs(path)
    rc = RunConfig()
    solver_kwargs: dict[str, float | int] = {}

    handlers = {
        "problem.preset": lambda v: setattr(rc, "preset", v),
        "problem.domain": lambda v: setattr(rc, "domain", v),
        "problem.omega": lambda v: setattr(rc, "omega", _parse_float("problem.omega", v)),
        "problem.lambda": lambda v: setattr(rc, "lam", _parse_float("problem.lambda", v)),
        "problem.l": lambda v: setattr(rc, "henon_l", _parse_float("problem.l", v)),
        "problem.p": lambda v: setattr(rc, "henon_p", _parse_float("problem.p", v)),
        "problem.n_elements": lambda v: setattr(rc, "n_elements", _parse_int("problem.n_elements", v)),
        "problem.nx": lambda v: setattr(rc, "nx", _parse_int("problem.nx", v)),
        "problem.ny": lambda v: setattr(rc, "ny", _parse_int("problem.ny", v)),
        "problem.n_theta": lambda v: setattr(rc, "n_theta", _parse_int("problem.n_theta", v)),
        "problem.n_r": lambda v: setattr(rc, "n_r", _parse_int("problem.n_r", v)),
        "problem.lin_tol": lambda v: setattr(rc, "lin_tol", _parse_float("problem.lin_tol", v)),
        "experiment.bracket_lo": lambda v: setattr(rc, "bracket_lo", _parse_float("experiment.bracket_lo", v)),
        "experiment.bracket_hi": lambda v: setattr(rc, "bracket_hi", _parse_float("experiment.bracket_hi", v)),
        "experiment.bisect_tol": lambda v: setattr(rc, "bisect_tol", _parse_float("experiment.bisect_tol", v)),
        "experiment.p_grid": lambda v: setattr(rc, "p_grid", _parse_float_list("experiment.p_grid", v)),
        "experiment.fit": lambda v: setattr(rc, "fit", v),
        "experiment.bracket_lo_scale": lambda v: setattr(
            rc, "bracket_lo_scale", _parse_float("experiment.bracket_lo_scale", v)
        ),
        "experiment.bracket_hi_scale": lambda v: setattr(
            rc, "bracket_hi_scale", _parse_float("experiment.bracket_hi_scale", v)
        ),
        "experiment.morse_check": lambda v: setattr(rc, "morse_check", _parse_bool("experiment.morse_check", v)),
        "experiment.rng_seed": lambda v: setattr(rc, "rng_seed", _parse_int("experiment.rng_seed", v)),
        "experiment.warm_start": lambda v: setattr(rc, "warm_start", _parse_bool("experiment.warm_start", v)),
        "seed.kind": lambda v: setattr(rc, "seed_kind", v),
        "seed.path": lambda v: setattr(rc, "seed_path", v),
    }
    solver_float_keys = ("sigma", "beta", "rho_nm", "alpha_min", "alpha_max", "eps_tol", "tau0")
    solver_int_keys = ("max_iter", "max_backtracks")

    for key, value in pairs.items():
        if key in handlers:
            handlers[key](value)
        elif key.startswith("optimizer."):
            name = key[len("optimizer.") :]
            if name in solver_float_keys:
                solver_kwargs[name] = _parse_float(key, value)
            elif name in solver_int_keys:
                solver_kwargs[name] = _parse_int(key, value)
            else:
                raise ConfigError(f"unknown key {key}")
        else:
            raise ConfigError(f"unknown key {key}")

    try:
        rc.solver = SolverConfig(**solver_kwargs)
    except ValueError as exc:
        # name the offending optimizer.* key in the message
        raise ConfigError(f"optimizer.{exc}") from exc

    _validate(rc)
    return rc


def _validate(rc: RunConfig) -> None:
    if rc.preset not in ("nls", "henon"):
        raise ConfigError(f"problem.preset must be nls or henon, got {rc.preset!r}")
    if rc.domain not in _DOMAINS:
        raise ConfigError(f"problem.domain must be one of {', '.join(_DOMAINS)}, got {rc.domain!r}")
    if rc.preset == "nls":
        if rc.omega is None or rc.lam is None:
            raise ConfigError("problem.omega and problem.lambda are required for the nls preset")
        if rc.omega <= 0.0:
            raise ConfigError(f"problem.omega must be positive, got {rc.omega}")
    else:
        # problem.l may be omitted for bisect / sweep-fit, which scan over it
        if rc.henon_p is None:
            raise ConfigError("problem.p is required for the henon preset")
        if rc.henon_l is not None and rc.henon_l < 0.0:
            raise ConfigError(f"problem.l must be >= 0, got {rc.henon_l}")
        if rc.henon_p <= 1.0:
            raise ConfigError(f"problem.p must exceed 1, got {rc.henon_p}")
    if rc.n_elements < 2:
        raise ConfigError(f"problem.n_elements must be >= 2, got {rc.n_elements}")
    if rc.nx < 2 or (rc.ny is not None and rc.ny < 2):
        raise ConfigError("problem.nx and problem.ny must be >= 2")
    if rc.n_theta % 2 != 0 or rc.n_theta < 4:
        raise ConfigError(f"problem.n_theta must be even and >= 4, got {rc.n_theta}")
    if rc.n_r < 2:
        raise ConfigError(f"problem.n_r must be >= 2, got {rc.n_r}")
    if rc.lin_tol is not None and not 0.0 < rc.lin_tol < 1.0:
        raise ConfigError(f"problem.lin_tol must be in (0,1), got {rc.lin_tol}")
    if rc.bisect_tol <= 0.0:
        raise ConfigError(f"experiment.bisect_tol must be positive, got {rc.bisect_tol}")
    if rc.bracket_lo is not None and rc.bracket_hi is not None and not rc.bracket_lo < rc.bracket_hi:
        raise ConfigError("experiment.bracket_lo must be below experiment.bracket_hi")
    if any(p <= 1.0 for p in rc.p_grid):
        raise ConfigError("experiment.p_grid entries must exceed 1")
    if rc.fit is not None and rc.fit not in ("inverse", "exp"):
        raise ConfigError(f"experiment.fit must be inverse or exp, got {rc.fit!r}")
    if rc.seed_kind not in ("default", "radial", "file"):
        raise ConfigError(f"seed.kind must be default, radial or file, got {rc.seed_kind!r}")
    if rc.seed_kind == "file" and not rc.seed_path:
        raise ConfigError("seed.path is required when seed.kind=file")
