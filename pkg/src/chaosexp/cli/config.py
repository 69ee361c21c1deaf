"""Single home for tolerances and default experiment settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    sandwich_rel: float = 1e-10
    dual_path_rel: float = 1e-10
    closed_form_abs: float = 1e-12
    inversion_1d: float = 1e-8
    inversion_2d: float = 1e-6
    normalization: float = 1e-9
    improvement_ratio: float = 0.75
    density_gap_se: float = 5.0
    joint_clt_abs: float = 0.02
    rate_slope: float = -0.5
    rate_slope_tol: float = 0.15
    diagonal_c12: float = 1e-8
    var_y_gap: float = 1e-2
    perturbation_se: float = 3.0
    functional_se: float = 3.0
    limit_constants: float = 1e-8


TOLERANCES = Tolerances()


@dataclass(frozen=True)
class AcceptanceSettings:
    seed: int = 20_160_403
    h: float = 0.6
    n: int = 512
    replications: int = 2_000_000
    clt_replications: int = 1_000_000
    density_halfwidth: float = 3.0
    density_points: int = 601
    kolmogorov_points: int = 61
    rate_grid: tuple = tuple(2**k for k in range(7, 14))
    rate_method: str = "exact"
    pair: tuple = (0.55, 0.6)
    pair_grid: tuple = tuple(2**k for k in range(8, 14))
    perturbation_q: int = 3
    perturbation_beta: float = 1.0
    workers: int = 1
    tolerances: Tolerances = field(default_factory=Tolerances)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_REPLICATIONS = 200_000
COMMANDS = ("constants", "cumulants", "expand", "simulate", "validate", "rates")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed command line; echoed verbatim into every report header."""

    command: str
    h: float | None = None
    h1: float | None = None
    h2: float | None = None
    table: str | None = None
    decay_exponent: float | None = None
    n: int | None = None
    n_grid: tuple | None = None
    seed: int = 20_160_403
    replications: int | None = None  # None: 200000, or the acceptance default under validate --check
    workers: int = 1
    x_min: float = -3.0
    x_max: float = 3.0
    points: int = 601
    alphas: tuple = (0, 1, 2)
    gamma: float | None = None
    rho: float | None = None
    perturb_q: int | None = None
    perturb_beta: float = 1.0
    method: str = "exact"
    output: str | None = None
    fmt: str = "json"
    check: bool = False
    criteria: tuple | None = None

    def __post_init__(self):
        errors = []
        if self.command not in COMMANDS:
            errors.append(f"command: must be one of {', '.join(COMMANDS)}")
        for name in ("h", "h1", "h2"):
            val = getattr(self, name)
            if val is not None and not 0 < val < 1:
                errors.append(f"{name}: must lie in (0, 1), got {val}")
        if self.n is not None and self.n < 2:
            errors.append(f"n: must be >= 2, got {self.n}")
        if self.n_grid is not None and (len(self.n_grid) < 1 or min(self.n_grid) < 2):
            errors.append("n_grid: needs sizes >= 2")
        if self.replications is not None and self.replications < 1:
            errors.append("replications: must be >= 1")
        if self.workers < 1:
            errors.append("workers: must be >= 1")
        if not self.x_min < self.x_max:
            errors.append("x_min/x_max: need x_min < x_max")
        if self.points < 2:
            errors.append("points: must be >= 2")
        if self.fmt not in ("json", "csv"):
            errors.append("fmt: must be json or csv")
        if self.method not in ("exact", "mc"):
            errors.append("method: must be exact or mc")
        if self.table is not None and self.decay_exponent is None:
            errors.append("decay_exponent: required with a covariance table")
        if self.criteria is not None and not set(self.criteria) <= set(range(1, 12)):
            errors.append("criteria: numbers must lie in 1..11")
        if not 0 <= self.seed < 2**64:
            errors.append("seed: must be a 64-bit unsigned integer")
        if errors:
            raise ConfigError("; ".join(errors))

    def to_dict(self) -> dict:
        return asdict(self)


def parse_n_grid(text: str) -> tuple:
    """``"128..8192"`` (powers of two) or ``"100,200,400"``."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            if lo < 1 or hi < lo or lo & (lo - 1) or hi & (hi - 1):
                raise ValueError
            out = []
            k = lo
            while k <= hi:
                out.append(k)
                k *= 2
            return tuple(out)
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"n_grid: cannot parse {text!r}; use LO..HI with powers of two or a comma list") from exc
