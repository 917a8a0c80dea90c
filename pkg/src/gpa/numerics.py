"""Fixed-step fourth-order Runge-Kutta integration onto a uniform output grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GpaError, GpaRuntimeError
from .moments import CovEntry, MomentIndex, MomentSystem, compile_rhs, mean_index


def build_grid(stop_time: float, step_size: float) -> np.ndarray:
    """Uniform grid 0, h, 2h, ... with floor(stop/h)+1 points (tolerant of float division)."""
    npts = int(np.floor(stop_time / step_size + 1e-9)) + 1
    return np.arange(npts) * step_size


@dataclass
class DataSet:
    """Uniform time grid plus one value series per tracked unknown.

    ``columns`` is keyed by MomentIndex (raw moments) and, for linear-noise
    output, CovEntry. Raw moments of order 2 are derived on demand from the
    mean/covariance layout.
    """

    grid: np.ndarray
    columns: dict
    kind: str  # "odes" | "simulation"
    meta: dict = field(default_factory=dict)

    def raw_moment(self, m: MomentIndex) -> np.ndarray:
        got = self.columns.get(m)
        if got is not None:
            return got
        if m.order == 2:
            active = [d for d, e in enumerate(m.exps) if e]
            i = active[0]
            j = active[-1]
            ndims = len(m.exps)
            cov = self.columns.get(CovEntry(min(i, j), max(i, j)))
            mi = self.columns.get(mean_index(i, ndims))
            mj = self.columns.get(mean_index(j, ndims))
            if cov is not None and mi is not None and mj is not None:
                return cov + mi * mj
        raise GpaError(
            "moment of order %d not available in this data set (linear-noise mode "
            "provides means and covariances only)" % m.order
        )


def integrate_rk4(
    system: MomentSystem,
    init,
    stop_time: float,
    step_size: float,
    density: int,
) -> DataSet:
    """Classic RK4 with ``density`` internal sub-steps per grid interval.

    Deterministic: identical inputs produce bit-identical data sets. Raises
    when the state stops being finite, reporting the first bad grid time.
    """
    if density < 1:
        raise GpaError(f"density must be at least 1, got {density}")
    n = len(system.unknowns)
    if len(init) != n:
        raise GpaError(f"initial state has {len(init)} entries, system has {n} unknowns")
    rhs = compile_rhs(system)
    grid = build_grid(stop_time, step_size)
    traj = np.empty((len(grid), n))

    y = [float(v) for v in init]
    k1 = [0.0] * n
    k2 = [0.0] * n
    k3 = [0.0] * n
    k4 = [0.0] * n
    ytmp = [0.0] * n
    h = step_size / density

    traj[0] = y
    for j in range(1, len(grid)):
        for _ in range(density):
            rhs(y, k1)
            for i in range(n):
                ytmp[i] = y[i] + 0.5 * h * k1[i]
            rhs(ytmp, k2)
            for i in range(n):
                ytmp[i] = y[i] + 0.5 * h * k2[i]
            rhs(ytmp, k3)
            for i in range(n):
                ytmp[i] = y[i] + h * k3[i]
            rhs(ytmp, k4)
            for i in range(n):
                y[i] += h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
        traj[j] = y
        if not np.isfinite(traj[j]).all():
            raise GpaRuntimeError(f"integration produced a non-finite state at t={grid[j]:g}")

    columns = {u: traj[:, i].copy() for i, u in enumerate(system.unknowns)}
    return DataSet(
        grid=grid,
        columns=columns,
        kind="odes",
        meta={"stopTime": stop_time, "stepSize": step_size, "density": density, "mode": system.kind},
    )
