"""Per-iteration convergence records shared by the Wahba and iLQR solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConvergenceTrace:
    """Entry 0 describes the initial iterate; entry ``k`` the state after iteration ``k``.

    ``values`` holds whatever the solver monitors (error to a reference for
    Wahba, task cost for iLQR).  ``flags`` lists iterations where a safeguard
    kicked in (damping, restarts).
    """

    values: list[float] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)
    flags: list[int] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.values) - 1

    @property
    def final(self) -> float:
        return self.values[-1]

    def record(self, value: float, wall_time: float) -> None:
        value = float(value)
        if not value >= 0.0:  # also rejects NaN
            raise ValueError(f"trace values must be finite and non-negative, got {value}")
        self.values.append(value)
        self.wall_times.append(float(wall_time))

    def padded(self, max_iters: int) -> tuple[np.ndarray, np.ndarray]:
        """Values and wall times over ``0..max_iters``, repeating the final entries."""
        n = max_iters + 1
        v = np.full(n, self.values[-1])
        w = np.full(n, self.wall_times[-1])
        k = min(n, len(self.values))
        v[:k] = self.values[:k]
        w[:k] = self.wall_times[:k]
        return v, w
