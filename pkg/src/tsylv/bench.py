"""Method runners and the two-row convection-diffusion benchmark."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .block_krylov import bas_solve, tbas_restarted
from .errors import MaxRestartsExceeded, TensorError
from .factorizations import t_bartels_stewart
from .krylov import SylvesterOperator, restarted_solve
from .problems import ProblemConfig, load_problem
from .report import SolveReport
from .tensor import fro_norm

METHODS = ("tbas", "bas", "tfom", "tgmres", "tbs")

# (n, q, n3, m) of the two benchmark rows
TABLE1_CONFIGS = ((1000, 3, 2, 10), (2000, 3, 2, 6))

# reference (iterations, residual) per method for the two rows
REFERENCE_ROWS = (
    {"tbas": (11, 5.55e-7), "bas": (65, None), "tfom": (66, None), "tgmres": (39, 9.50e-7)},
    {"tbas": (12, 6.86e-8), "bas": (69, None), "tfom": (69, 6.91e-7), "tgmres": (41, None)},
)


@dataclass
class BenchmarkRow:
    method: str
    iterations: int
    residual: float
    wall_time_ms: float
    converged: bool
    restarts: int = 0
    error: str | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _direct(a, b, c, cfg):
    t0 = time.perf_counter()
    x = t_bartels_stewart(a, b, c, cfg.sign)
    n, q, n3 = c.shape
    rep = SolveReport("tbs", n, q, n3, cfg.m, cfg.tol)
    rep.explicit_residuals.append(fro_norm(c - SylvesterOperator(a, b, cfg.sign)(x)))
    rep.converged = rep.final_residual < cfg.tol
    rep.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    return x, rep


def solve_problem(method, a, b, c, cfg: ProblemConfig):
    """Run ``method`` from ``x0 = 0``; returns ``(x, report)`` and lets solver errors through."""
    if method == "tbs":
        return _direct(a, b, c, cfg)
    if method == "tbas":
        return tbas_restarted(a, b, c, None, cfg.m, cfg.tol, cfg.max_restarts, cfg.sign)
    if method == "bas":
        return bas_solve(a, b, c, None, cfg.m, cfg.tol, cfg.max_restarts, cfg.sign)
    if method in ("tfom", "tgmres"):
        op = SylvesterOperator(a, b, cfg.sign)
        return restarted_solve(op, c, None, cfg.m, cfg.tol, cfg.max_restarts, method)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def _config_echo(cfg):
    return {k: v for k, v in asdict(cfg).items() if v is not None}


def run_method(method, cfg: ProblemConfig, problem=None):
    """Solve one configuration and summarize it as a :class:`BenchmarkRow`.

    Returns ``(row, x, report)``; ``x`` and ``report`` are ``None`` when the
    solver failed before producing an iterate.
    """
    a, b, c = load_problem(cfg) if problem is None else problem
    t0 = time.perf_counter()
    try:
        x, rep = solve_problem(method, a, b, c, cfg)
        error = None
    except MaxRestartsExceeded as exc:
        x, rep, error = exc.x, exc.report, str(exc)
    except (TensorError, np.linalg.LinAlgError) as exc:
        x, rep, error = None, None, f"{type(exc).__name__}: {exc}"
    if rep is None:
        row = BenchmarkRow(method, 0, float("nan"), 1e3 * (time.perf_counter() - t0), False,
                           error=error, config=_config_echo(cfg))
    else:
        row = BenchmarkRow(method, rep.iterations, rep.final_residual, rep.wall_time_ms,
                           bool(rep.converged), rep.restarts, error, _config_echo(cfg))
    return row, x, rep


def run_table1(mu=1.0, max_restarts=100, seed=0, methods=("tbas", "bas", "tfom", "tgmres"), configs=None):
    """Both benchmark rows for every method; failures are recorded, not raised."""
    rows = []
    for n, q, n3, m in configs or TABLE1_CONFIGS:
        cfg = ProblemConfig(n=n, q=q, n3=n3, m=m, tol=1e-6, max_restarts=max_restarts, mu=mu, seed=seed)
        problem = load_problem(cfg)
        for method in methods:
            rows.append(run_method(method, cfg, problem)[0])
    return rows


def format_table(rows):
    head = f"{'n':>6} {'q':>3} {'m':>3}  {'method':<7} {'its':>6} {'residual':>10} {'time[ms]':>10}  status"
    lines = [head, "-" * len(head)]
    for r in rows:
        c = r.config
        status = "ok" if r.converged else "FAILED" + (f" ({r.error})" if r.error else "")
        lines.append(
            f"{c.get('n', ''):>6} {c.get('q', ''):>3} {c.get('m', ''):>3}  {r.method:<7} {r.iterations:>6} "
            f"{r.residual:>10.3e} {r.wall_time_ms:>10.1f}  {status}"
        )
    return "\n".join(lines)


def rows_to_json(rows, **kwargs):
    return json.dumps([r.to_dict() for r in rows], **kwargs)
