"""Parameter sweeps and log-log slope fits."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import linregress

from ..errors import ConfigInvalid, FitDegenerate
from .config import ScenarioConfig
from .protocols import run

MIN_POINTS = 4
OUTLIER_FACTOR = 3.0
# floor on the residual RMS (in log units) so an essentially exact power law
# does not flag its last point over rounding-level scatter
RMS_FLOOR = 1e-2

DEFAULT_METRIC = {"strobe": "infidelity", "cap": "leakage", "sme": "population_error"}
AXES = {"strobe": ("dt",), "cap": ("kappa",), "sme": ("kappa", "M")}


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int
    excluded: Optional[float] = None


def fit_loglog(x, y) -> SlopeFit:
    """Least-squares slope of ``log y`` against ``log x``.

    When more than ``MIN_POINTS`` points are available, the point at the
    largest ``x`` is dropped if its residual against a fit of the remaining
    points exceeds three times their residual RMS; ``excluded`` names it.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("x and y differ in length")
    if len(x) < MIN_POINTS:
        raise FitDegenerate(f"slope fit needs at least {MIN_POINTS} points, got {len(x)}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitDegenerate("metric must be positive and finite at every sweep point")
    if np.any(x <= 0):
        raise FitDegenerate("axis values must be positive")
    if len(np.unique(x)) < 2:
        raise FitDegenerate("axis values are all equal")
    lx, ly = np.log(x), np.log(y)
    excluded = None
    keep = np.ones(len(x), bool)
    if len(x) > MIN_POINTS:
        last = int(np.argmax(x))
        rest = np.arange(len(x)) != last
        fit = linregress(lx[rest], ly[rest])
        resid = ly[rest] - (fit.intercept + fit.slope * lx[rest])
        rms = max(np.sqrt(np.mean(resid**2)), RMS_FLOOR)
        if abs(ly[last] - (fit.intercept + fit.slope * lx[last])) > OUTLIER_FACTOR * rms:
            keep = rest
            excluded = float(x[last])
    fit = linregress(lx[keep], ly[keep])
    return SlopeFit(float(fit.slope), float(fit.stderr), float(fit.intercept), int(keep.sum()), excluded)


@dataclass
class SweepResult:
    axis: str
    values: list
    metric: str
    fit: SlopeFit
    rows: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"axis": self.axis, "metric": self.metric, "slope": self.fit.slope, "stderr": self.fit.stderr,
                "n_points": self.fit.n_points, "excluded": self.fit.excluded}


def point_config(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "dt":
        return cfg.replace(N=max(1, int(round(cfg.T / value))))
    params = dict(cfg.params)
    if axis == "kappa":
        params["kappa"] = float(value)
    elif axis == "M":
        if int(value) != value or value < 1:
            raise ConfigInvalid("sweep.values", "trajectory counts must be positive integers")
        params["M"] = int(value)
    return cfg.replace(params=params)


def sweep(cfg: ScenarioConfig, axis: Optional[str] = None, values=None, metric: Optional[str] = None,
          threads: int = 1) -> SweepResult:
    """Run the scenario at each axis value and fit the metric's log-log slope.

    Points run in a thread pool; results keep the order of ``values``.
    """
    spec = cfg.sweep
    axis = axis or (spec.axis if spec else None)
    values = list(values if values is not None else (spec.values if spec else ()))
    metric = metric or (spec.metric if spec and spec.metric else DEFAULT_METRIC.get(cfg.protocol))
    if cfg.protocol not in AXES:
        raise ConfigInvalid("protocol", f"protocol {cfg.protocol!r} cannot be swept")
    if axis not in AXES[cfg.protocol]:
        raise ConfigInvalid("sweep.axis", f"axis {axis!r} not available for {cfg.protocol!r}")
    if len(values) < MIN_POINTS:
        raise ConfigInvalid("sweep.values", f"need at least {MIN_POINTS} values")
    if any(not v > 0 for v in values):
        raise FitDegenerate("axis values must be positive")
    configs = [point_config(cfg, axis, v) for v in values]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, configs))
    else:
        results = [run(c) for c in configs]

    rows = []
    for v, res in zip(values, results):
        if metric not in res.summary:
            raise ConfigInvalid("sweep.metric", f"metric {metric!r} not produced by {cfg.protocol!r}")
        row = {"axis": axis, "value": float(v), "metric": metric, "metric_value": float(res.summary[metric])}
        rows.append(row)
    fit = fit_loglog([r["value"] for r in rows], [r["metric_value"] for r in rows])
    return SweepResult(axis, [float(v) for v in values], metric, fit, rows)
