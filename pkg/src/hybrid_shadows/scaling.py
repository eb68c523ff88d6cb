"""Shadow-norm scaling: log ||P||^2 versus operator size, beta/Delta fits.

The norm curve evolves the MPS weight engine at a fixed measurement rate,
terminates the transfer sequence on a measurement layer (snapshot ensembles
end there), and queries consecutive supports centered in the chain.  Weights
are averaged over the two centered placements to cancel the period-2
brick-wall alignment oscillation.

Fitting ``log ||P||^2 = k log(beta) + 2 Delta log(k) + const`` is ordinary
least squares on the design (k, log k, 1).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .weights_mps import DEFAULT_CHI_MAX, DEFAULT_TRUNC_TOL, init_identity_weight

# Depth cap for the steady-state evolution, in units of N periods.  The
# volume phase never converges in useful time under the Markovian
# normalization approximation; a cap of 0.75 N reproduces the reported
# minimum of beta at the critical rate.
DEFAULT_DEPTH_FACTOR = 0.75
DEFAULT_CONV_TOL = 1e-8


@dataclass
class MpsParams:
    chi_max: int = DEFAULT_CHI_MAX
    trunc_tol: float = DEFAULT_TRUNC_TOL
    depth_factor: float = DEFAULT_DEPTH_FACTOR
    conv_tol: float = DEFAULT_CONV_TOL


@dataclass
class NormCurve:
    p: float
    n_qubits: int
    points: list[tuple[int, float]]  # (k, log shadow norm)
    chi_max: int
    trunc_tol: float
    depth: int
    discarded_mass: float = 0.0

    def log_norms(self) -> tuple[np.ndarray, np.ndarray]:
        ks = np.array([k for k, _ in self.points], dtype=float)
        ln = np.array([v for _, v in self.points])
        return ks, ln


@dataclass
class FitResult:
    beta: float
    delta: float
    intercept: float
    covariance: np.ndarray  # 3x3 for (log beta, 2*Delta, intercept)
    k_range: tuple[int, int]
    residual_rms: float = 0.0


def _centered_weight(mps, n_qubits: int, k: int) -> float:
    """Consecutive-support weight averaged over the two centered placements."""
    start = (n_qubits - k) // 2
    w = mps.query_consecutive_weight(start, k)
    if start + 1 + k <= n_qubits:
        w = 0.5 * (w + mps.query_consecutive_weight(start + 1, k))
    return w


def shadow_norm_curve(
    n_qubits: int,
    p: float,
    k_max: int,
    params: MpsParams | None = None,
) -> NormCurve:
    """log ||P||^2 = -log w(P) for consecutive supports k = 1..k_max."""
    if params is None:
        params = MpsParams()
    if k_max > n_qubits:
        raise ValueError("k_max exceeds the chain length")
    mps = init_identity_weight(n_qubits, params.chi_max, params.trunc_tol)
    cap = max(8, math.ceil(params.depth_factor * n_qubits))
    prev = None
    depth = 0
    final = None
    probe_ks = sorted({1, max(1, k_max // 2), k_max})
    for l in range(cap):
        mps.apply_measurement_layer(p)
        mps.apply_unitary_layer(l % 2)
        depth += 1
        probe = mps.copy()
        probe.apply_measurement_layer(p)
        probe.normalize()
        final = probe
        logs = np.array(
            [np.log(max(_centered_weight(probe, n_qubits, k), 1e-300)) for k in probe_ks]
        )
        if prev is not None and np.max(np.abs(logs - prev)) < params.conv_tol:
            break
        prev = logs
    points = []
    for k in range(1, k_max + 1):
        w = _centered_weight(final, n_qubits, k)
        if w <= 0:
            raise ValueError(f"non-positive weight at k={k}: {w}")
        points.append((k, -float(np.log(w))))
    return NormCurve(
        p=p,
        n_qubits=n_qubits,
        points=points,
        chi_max=params.chi_max,
        trunc_tol=params.trunc_tol,
        depth=depth,
        discarded_mass=final.discarded_mass,
    )


def fit_beta_delta(curve: NormCurve, k_range: tuple[int, int]) -> FitResult:
    """Least squares of log ||P||^2 on (k, log k, 1) over the window."""
    k_min, k_max = k_range
    if k_min < 1 or k_max <= k_min:
        raise ValueError(f"bad fit window {k_range}")
    pts = [(k, v) for k, v in curve.points if k_min <= k <= k_max]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 points in window {k_range}, got {len(pts)}")
    ks = np.array([k for k, _ in pts], dtype=float)
    y = np.array([v for _, v in pts])
    design = np.stack([ks, np.log(ks), np.ones_like(ks)], axis=1)
    gram = design.T @ design
    if np.linalg.cond(gram) > 1e12:
        raise ValueError("rank-deficient design: widen the fit window")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(len(pts) - 3, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(gram)
    return FitResult(
        beta=float(np.exp(coef[0])),
        delta=float(coef[1] / 2.0),
        intercept=float(coef[2]),
        covariance=cov,
        k_range=(k_min, k_max),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass
class SweepRow:
    p: float
    beta: float
    delta: float
    fit_rms: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    p_star: float
    beta_min: float
    delta_at_min: float
    curves: list[NormCurve] = field(default_factory=list)
    quadratic_ok: bool = True

    def row_for(self, p: float) -> SweepRow:
        return min(self.rows, key=lambda r: abs(r.p - p))


def _sweep_point(args) -> tuple[NormCurve, SweepRow]:
    n_qubits, p, k_range, params = args
    curve = shadow_norm_curve(n_qubits, p, k_range[1], params)
    fit = fit_beta_delta(curve, k_range)
    return curve, SweepRow(p=p, beta=fit.beta, delta=fit.delta, fit_rms=fit.residual_rms)


def sweep_and_minimize(
    p_grid,
    n_qubits: int,
    k_range: tuple[int, int],
    params: MpsParams | None = None,
    refine_points: int = 5,
    workers: int = 1,
) -> SweepReport:
    """beta(p) over the grid plus a quadratic-fit minimizer near the minimum.

    The coarse grid minimum is refined with ``refine_points`` extra rates
    between its neighbors, then (p*, beta_min) comes from a quadratic fit to
    the points nearest the refined minimum.
    """
    p_grid = sorted(p_grid)
    if len(p_grid) < 5:
        raise ValueError("need a grid of at least 5 rates")
    if params is None:
        params = MpsParams()

    def evaluate(ps):
        jobs = [(n_qubits, p, k_range, params) for p in ps]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(_sweep_point, jobs))
        return [_sweep_point(job) for job in jobs]

    results = dict(zip(p_grid, evaluate(p_grid)))
    betas = [results[p][1].beta for p in p_grid]
    i_min = int(np.argmin(betas))
    lo = p_grid[max(i_min - 1, 0)]
    hi = p_grid[min(i_min + 1, len(p_grid) - 1)]
    refine = [
        lo + (hi - lo) * (j + 1) / (refine_points + 1) for j in range(refine_points)
    ]
    refine = [p for p in refine if all(abs(p - q) > 1e-9 for q in p_grid)]
    results.update(dict(zip(refine, evaluate(refine))))

    all_ps = sorted(results)
    rows = [results[p][1] for p in all_ps]
    curves = [results[p][0] for p in all_ps]
    betas = np.array([r.beta for r in rows])
    ps = np.array(all_ps)
    j_min = int(np.argmin(betas))

    # quadratic fit through the neighborhood of the minimum
    sel = slice(max(j_min - 2, 0), min(j_min + 3, len(ps)))
    pp, bb = ps[sel], betas[sel]
    quad_ok = len(pp) >= 3
    p_star, beta_min = float(ps[j_min]), float(betas[j_min])
    if quad_ok:
        c2, c1, c0 = np.polyfit(pp, bb, 2)
        if c2 > 0:
            p_vertex = -c1 / (2 * c2)
            if pp[0] <= p_vertex <= pp[-1]:
                p_star = float(p_vertex)
                beta_min = float(np.polyval([c2, c1, c0], p_vertex))
            else:
                quad_ok = False
        else:
            quad_ok = False

    return SweepReport(
        rows=rows,
        p_star=p_star,
        beta_min=beta_min,
        delta_at_min=rows[j_min].delta,
        curves=curves,
        quadratic_ok=quad_ok,
    )
