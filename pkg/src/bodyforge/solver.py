"""Inverse shape solving: find β whose avatar satisfies parsed constraints.

The objective is a width-normalized squared hinge on each constrained
measurement's target interval plus an L2 regularizer. Minimization is
projected gradient descent with central finite-difference gradients and a
multi-start strategy, run in lockstep across starts so each iteration costs
one batched measurement evaluation. The descent and the feasibility polish
are independent of the regularizer weight; λ enters only when the final
candidate is selected, which makes the returned norm non-increasing in λ
on any fixed constraint set (argmin exchange argument over a λ-free pool).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .bodymodel import BodyModelAsset, ShapeParams, evaluate_mesh
from .errors import InputError, SolverNumericalError
from .labeling import BinTable, LEVELS, SAMPLING_BOUND, bin_edges, level_index
from .measure import MEASUREMENT_NAMES, measure_all, measure_many
from .textlang import ConstraintSet


@dataclass(frozen=True)
class SolveConfig:
    """Optimizer knobs; defaults are sized for the builtin asset."""

    max_iterations: int = 120
    step_init: float = 0.5
    step_shrink: float = 0.5
    step_grow: float = 1.3
    step_min: float = 1e-7
    fd_epsilon: float = 1e-4
    regularization: float = 1e-3
    tolerance: float = 1e-12
    seed: int = 0
    starts: int = 4

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise InputError("max_iterations must be positive")
        for name in ("step_init", "step_shrink", "step_grow", "step_min", "fd_epsilon"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if not (0 < self.step_shrink < 1):
            raise InputError("step_shrink must be in (0, 1)")
        if self.step_grow < 1:
            raise InputError("step_grow must be at least 1")
        if self.regularization < 0:
            raise InputError("regularization must be non-negative")
        if self.tolerance <= 0:
            raise InputError("tolerance must be positive")
        if self.starts < 1:
            raise InputError("starts must be at least 1")


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome for one constraint: where the value had to land and did it."""

    measurement: str
    level: str
    interval: tuple[float, float]
    achieved: float
    satisfied: bool


@dataclass(frozen=True)
class SolveResult:
    beta: ShapeParams
    objective: float
    satisfied: bool
    iterations: int
    report: tuple[ConstraintReport, ...]
    objective_trace: tuple[float, ...]


def constraint_intervals(
    bins: BinTable, constraints: ConstraintSet
) -> dict[str, tuple[float, float]]:
    """Target [lo, hi) per constrained measurement.

    Interior bins use the calibration thresholds directly; the outer bins'
    unbounded ends are closed at the observed min/max extended by 10% of the
    observed range, keeping targets inside plausible bodies.
    """
    out: dict[str, tuple[float, float]] = {}
    for c in constraints:
        edges = bin_edges(bins, c.measurement)
        k = LEVELS.index(c.level)
        out[c.measurement] = (float(edges[k]), float(edges[k + 1]))
    return out


def _hinge_matrix(
    rows: np.ndarray, cols: np.ndarray, lo: np.ndarray, hi: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """Width-normalized squared-hinge objective for a batch of measurement rows."""
    v = rows[:, cols]
    width = hi - lo
    below = np.maximum(0.0, (lo - v) / width)
    above = np.maximum(0.0, (v - hi) / width)
    return (w * (below**2 + above**2)).sum(axis=1)


class _Problem:
    """Constraint data in array form plus the batched objective."""

    def __init__(self, asset: BodyModelAsset, bins: BinTable, constraints: ConstraintSet):
        intervals = constraint_intervals(bins, constraints)
        self.asset = asset
        self.bins = bins
        self.constraints = list(constraints)
        self.names = [c.measurement for c in self.constraints]
        self.cols = np.array([MEASUREMENT_NAMES.index(n) for n in self.names])
        self.lo = np.array([intervals[n][0] for n in self.names])
        self.hi = np.array([intervals[n][1] for n in self.names])
        self.w = np.array([c.weight for c in self.constraints])
        self.target_idx = np.array([LEVELS.index(c.level) for c in self.constraints])

    def objective_batch(self, betas: np.ndarray) -> np.ndarray:
        rows = measure_many(self.asset, betas)
        if not np.all(np.isfinite(rows[:, self.cols])):
            raise SolverNumericalError("measurement became non-finite during solve")
        return _hinge_matrix(rows, self.cols, self.lo, self.hi, self.w)

    def feasible_batch(self, betas: np.ndarray) -> np.ndarray:
        """Per-row flag: every constrained measurement labels at its target level."""
        rows = measure_many(self.asset, betas)
        ok = np.ones(len(betas), dtype=bool)
        for j, name in enumerate(self.names):
            t = np.asarray(self.bins.thresholds[name])
            idx = np.searchsorted(t, rows[:, self.cols[j]], side="right")
            ok &= idx == self.target_idx[j]
        return ok


def _descend(problem: _Problem, starts: np.ndarray, cfg: SolveConfig):
    """Lockstep projected gradient descent on the hinge objective.

    Returns per-start endpoints, their hinge objectives, the accepted-step
    objective trace of each start, and iterations used.
    """
    n, dim = starts.shape
    beta = starts.copy()
    step = np.full(n, cfg.step_init)
    obj = problem.objective_batch(beta)
    traces: list[list[float]] = [[float(v)] for v in obj]
    active = obj > 0.0
    eps = cfg.fd_epsilon
    iterations = 0

    for _ in range(cfg.max_iterations):
        idx = np.flatnonzero(active & (step >= cfg.step_min))
        if idx.size == 0:
            break
        iterations += 1

        # Central differences for all active starts in one measurement batch.
        probes = np.empty((idx.size * dim * 2, dim))
        for a, s in enumerate(idx):
            block = np.repeat(beta[s][None, :], dim * 2, axis=0)
            span = np.arange(dim)
            block[span * 2, span] += eps
            block[span * 2 + 1, span] -= eps
            probes[a * dim * 2 : (a + 1) * dim * 2] = block
        vals = problem.objective_batch(probes)
        grad = np.zeros((idx.size, dim))
        for a in range(idx.size):
            v = vals[a * dim * 2 : (a + 1) * dim * 2]
            grad[a] = (v[0::2] - v[1::2]) / (2.0 * eps)

        norms = np.linalg.norm(grad, axis=1)
        stalled = norms == 0.0
        # Zero gradient with positive objective: a flat plateau; stop that start.
        active[idx[stalled]] = False
        move = np.flatnonzero(~stalled)
        if move.size == 0:
            continue
        cand = np.clip(
            beta[idx[move]] - (step[idx[move]] / norms[move])[:, None] * grad[move],
            -SAMPLING_BOUND,
            SAMPLING_BOUND,
        )
        cand_obj = problem.objective_batch(cand)
        for pos, s in enumerate(idx[move]):
            if cand_obj[pos] <= obj[s]:
                improved = obj[s] - cand_obj[pos]
                beta[s] = cand[pos]
                obj[s] = cand_obj[pos]
                traces[s].append(float(obj[s]))
                step[s] = min(step[s] * cfg.step_grow, 4.0)
                if obj[s] <= 0.0 or improved < cfg.tolerance:
                    active[s] = False
            else:
                step[s] *= cfg.step_shrink
    return beta, obj, traces, iterations


def _polish(problem: _Problem, beta: np.ndarray, bisections: int = 40) -> np.ndarray:
    """Shrink feasible endpoints toward the origin while staying feasible."""
    n = len(beta)
    feas = problem.feasible_batch(beta)
    out = beta.copy()
    work = np.flatnonzero(feas)
    if work.size == 0:
        return out
    # t=0 feasible means the origin already satisfies everything.
    zero_ok = problem.feasible_batch(np.zeros((work.size, beta.shape[1])))
    lo = np.zeros(work.size)
    hi = np.ones(work.size)
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        ok = problem.feasible_batch(mid[:, None] * beta[work])
        lo = np.where(ok, lo, mid)
        hi = np.where(ok, hi, mid)
    t = np.where(zero_ok, 0.0, hi)
    out[work] = t[:, None] * beta[work]
    # Bisection converges onto the boundary; keep only points still feasible.
    final_ok = problem.feasible_batch(out[work])
    out[work[~final_ok]] = beta[work[~final_ok]]
    return out


def solve_shape(
    asset: BodyModelAsset,
    bins: BinTable,
    constraints: ConstraintSet,
    cfg: SolveConfig = SolveConfig(),
) -> SolveResult:
    """Best-effort β satisfying the constraints; never raises on infeasibility."""
    if len(constraints) == 0:
        raise InputError("constraint set is empty")
    cfg.validate()
    bins.validate()
    problem = _Problem(asset, bins, constraints)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
    starts = np.zeros((cfg.starts, 10))
    if cfg.starts > 1:
        starts[1:] = rng.uniform(-2.0, 2.0, size=(cfg.starts - 1, 10))

    endpoints, hinge_end, traces, iterations = _descend(problem, starts, cfg)
    polished = _polish(problem, endpoints)
    # λ-free candidate pool: raw endpoints and their polished variants.
    pool = np.vstack([endpoints, polished])
    pool_trace = list(traces) + list(traces)

    lam = cfg.regularization
    best = None
    for i, cand in enumerate(pool):
        mv = measure_all(asset, evaluate_mesh(asset, ShapeParams(cand)))
        row = mv.as_array()[None, :]
        hinge = float(_hinge_matrix(row, problem.cols, problem.lo, problem.hi, problem.w)[0])
        reports = []
        for j, c in enumerate(problem.constraints):
            value = float(row[0, problem.cols[j]])
            achieved = level_index(bins, c.measurement, value)
            reports.append(
                ConstraintReport(
                    measurement=c.measurement,
                    level=c.level,
                    interval=(float(problem.lo[j]), float(problem.hi[j])),
                    achieved=value,
                    satisfied=achieved == LEVELS.index(c.level),
                )
            )
        satisfied = all(r.satisfied for r in reports)
        norm2 = float(cand @ cand)
        objective = hinge + lam * norm2
        if not np.isfinite(objective):
            raise SolverNumericalError("objective is not finite")
        # Order: satisfied first, then objective, then norm, then lexicographic.
        key = (not satisfied, objective, norm2, tuple(cand))
        if best is None or key < best[0]:
            best = (key, cand, objective, satisfied, tuple(reports), i)

    _, cand, objective, satisfied, reports, pick = best
    return SolveResult(
        beta=ShapeParams(cand),
        objective=objective,
        satisfied=satisfied,
        iterations=iterations,
        report=reports,
        objective_trace=tuple(pool_trace[pick]),
    )


def solve_description(
    asset: BodyModelAsset,
    bins: BinTable,
    lexicon,
    text: str,
    cfg: SolveConfig = SolveConfig(),
):
    """parse → solve convenience used by the CLI and service."""
    from .textlang import parse_description

    constraints, diagnostics = parse_description(lexicon, text)
    result = solve_shape(asset, bins, constraints, cfg)
    return result, constraints, diagnostics


def mesh_to_obj(vertices: np.ndarray, faces: np.ndarray) -> str:
    """Wavefront-style text: v lines then 1-indexed f lines."""
    lines = []
    for v in vertices:
        lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
    for f in faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"
