"""Solver reports."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass
class SolveReport:
    """What a solver did.

    ``residual_history`` holds the cheap residual estimate after every inner
    iteration, across all restarts.  ``explicit_residuals`` holds the
    recomputed ``||c - M(x)||_F`` for the initial guess and after every
    restart; ``restart_estimates[k]`` is the estimate that cycle ``k`` ended
    with, so it pairs with ``explicit_residuals[k + 1]``.
    """

    method: str
    n: int
    s: int
    n3: int
    m: int
    tol: float
    iterations: int = 0
    restarts: int = 0
    converged: bool = False
    residual_history: list = field(default_factory=list)
    explicit_residuals: list = field(default_factory=list)
    restart_estimates: list = field(default_factory=list)
    wall_time_ms: float = 0.0
    block_width: int | None = None
    warnings: list = field(default_factory=list)

    @property
    def final_residual(self):
        return self.explicit_residuals[-1] if self.explicit_residuals else float("nan")

    def to_dict(self):
        out = asdict(self)
        if self.block_width is None:
            del out["block_width"]
        out["residual"] = self.final_residual
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)
