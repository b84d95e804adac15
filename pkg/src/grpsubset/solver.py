"""Block coordinate descent for group subset selection with shrinkage.

Each sweep visits coordinate groups and replaces group ``k`` by the
thresholded gradient step ``T(beta_k - grad_k / cbar_k)``, where ``cbar_k``
exceeds the group's Lipschitz constant.  The loop carries the usual
speedups: incremental residuals, gradient screening into strong/weak sets,
gradient ordering, and active-set sweeps with a confirming full pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .design import ExpandedProblem, GroupedProblem
from .losses import (
    WorkingResidual,
    lipschitz_constant,
    loss_from_linear_predictor,
    shift_intercept,
    update_residual,
)
from ._kernels import sweep_contiguous
from .penalty import PenaltyConfig, threshold_scale, threshold_scales


@dataclass
class SolverOptions:
    tol: float = 1e-4
    max_sweeps: int = 10_000
    cbar_factor: float = 1.01
    screening: bool = True
    screen_size: int = 500
    gradient_ordering: bool = True
    active_set: bool = True
    refresh_every: int = 1000
    max_group_norm: float = 1e6
    record_history: bool = False


@dataclass
class SolverState:
    beta: NDArray
    intercept: float
    residual: WorkingResidual
    config: PenaltyConfig
    objective: float
    sweep_count: int = 0
    strong: list = field(default_factory=list)
    weak: list = field(default_factory=list)
    # Squared group norms, kept in step with beta by the sweeps.
    gsq: NDArray | None = None

    def copy(self) -> "SolverState":
        res = self.residual
        return SolverState(
            self.beta.copy(), self.intercept,
            WorkingResidual(res.kind, res.y, res.eta.copy(), res.r.copy(), res.updates_since_refresh),
            self.config, self.objective, self.sweep_count, list(self.strong), list(self.weak),
            None if self.gsq is None else self.gsq.copy(),
        )


@dataclass
class SweepRecord:
    """Objective before/after one sweep and the guaranteed decrease
    sum_k (cbar_k - c_k)/2 ||delta_k||^2 over the groups it visited."""

    objective_before: float
    objective_after: float
    descent_bound: float
    support_changed: bool


@dataclass
class ConvergenceReport:
    converged: bool
    sweeps: int
    final_objective: float
    max_fixedpoint_violation: float
    diverged: bool = False
    history: list[SweepRecord] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "sweeps": self.sweeps,
            "final_objective": self.final_objective,
            "max_fixedpoint_violation": self.max_fixedpoint_violation,
        }


def _as_index(g) -> slice | NDArray:
    g = np.asarray(g, dtype=int)
    if g.size and np.array_equal(g, np.arange(g[0], g[0] + g.size)):
        return slice(int(g[0]), int(g[0]) + g.size)
    return g


class GroupSolver:
    """Coordinate descent over disjoint groups of a fixed design.

    Parameters
    ----------
    X : (n, p) array
        Design, usually the standardized (and expanded) matrix.
    y : (n,) array
    groups : sequence of index sequences
        Disjoint column groups covering every column of ``X``.
    task : {"square", "logistic"}
    fit_intercept : bool, optional
        Carry an unpenalized intercept updated once per sweep.  Defaults to
        True for logistic loss; square loss relies on centred data instead.
    """

    def __init__(self, X, y, groups, task: str = "square", fit_intercept: bool | None = None,
                 options: SolverOptions | None = None):
        self.X = np.asfortranarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.task = task
        self.options = options or SolverOptions()
        self.fit_intercept = (task == "logistic") if fit_intercept is None else fit_intercept
        n, p = self.X.shape
        self.index = [_as_index(g) for g in groups]
        self.n_groups = len(self.index)
        self.group_id = np.full(p, -1, dtype=int)
        for k, ix in enumerate(self.index):
            if np.any(self.group_id[ix] >= 0):
                raise ValueError("solver groups must be disjoint")
            self.group_id[ix] = k
        if np.any(self.group_id < 0):
            raise ValueError("every column must belong to a group")
        self.blocks = [self.X[:, ix] for ix in self.index]
        # Contiguous groups take the compiled sweep.
        self.contiguous = all(isinstance(ix, slice) for ix in self.index)
        if self.contiguous:
            self._starts = np.array([ix.start for ix in self.index], dtype=np.int64)
            self._ends = np.array([ix.stop for ix in self.index], dtype=np.int64)
        self.sizes = np.array([b.shape[1] for b in self.blocks], dtype=float)
        self.c = np.array([lipschitz_constant(task, b) for b in self.blocks])
        self.cbar = self.options.cbar_factor * self.c
        if self.fit_intercept:
            self.c0 = float(n) if task == "square" else n / 4.0
            self.cbar0 = self.options.cbar_factor * self.c0

    @classmethod
    def from_expanded(cls, expanded: ExpandedProblem, **kwargs) -> "GroupSolver":
        return cls(expanded.Xt, expanded.y, expanded.groups, expanded.task, **kwargs)

    @classmethod
    def from_grouped(cls, problem: GroupedProblem, **kwargs) -> "GroupSolver":
        if not problem.is_disjoint():
            raise ValueError("overlapping groups must be expanded first")
        return cls(problem.X, problem.y, problem.groups, problem.task, **kwargs)

    # ------------------------------------------------------------------ state

    def init_state(self, config: PenaltyConfig, beta=None, intercept: float | None = None) -> SolverState:
        if config.n_groups != self.n_groups:
            raise ValueError(f"penalty has {config.n_groups} groups, solver has {self.n_groups}")
        p = self.X.shape[1]
        beta = np.zeros(p) if beta is None else np.array(beta, dtype=float)
        if beta.shape != (p,):
            raise ValueError(f"initial beta must have length {p}")
        if intercept is None:
            intercept = self.null_intercept() if self.fit_intercept else 0.0
        eta = self.X @ beta + intercept
        res = WorkingResidual.from_linear_predictor(self.task, self.y, eta)
        state = SolverState(beta, float(intercept), res, config, 0.0)
        state.objective = self.objective(state)
        return state

    def null_intercept(self) -> float:
        ybar = float(self.y.mean())
        if self.task == "square":
            return ybar
        ybar = min(max(ybar, 1e-10), 1 - 1e-10)
        return math.log(ybar / (1.0 - ybar))

    def group_sq_norms(self, beta: NDArray) -> NDArray:
        return np.bincount(self.group_id, weights=beta * beta, minlength=self.n_groups)

    def active_groups(self, beta: NDArray) -> NDArray:
        return np.flatnonzero(self.group_sq_norms(beta) != 0.0)

    def penalty_value(self, config: PenaltyConfig, beta: NDArray, sq: NDArray | None = None) -> float:
        if sq is None:
            sq = self.group_sq_norms(beta)
        on = sq != 0.0
        return float(np.sum(config.lambda0k[on] + config.lambda1k[on] * np.sqrt(sq[on])
                            + config.lambda2k[on] * sq[on]))

    def objective(self, state: SolverState, fresh: bool = False) -> float:
        if fresh:
            eta = self.X @ state.beta + state.intercept
            loss = loss_from_linear_predictor(self.task, self.y, eta)
        else:
            loss = state.residual.loss()
            if state.gsq is not None:
                return loss + self.penalty_value(state.config, state.beta, state.gsq)
        return loss + self.penalty_value(state.config, state.beta)

    def refresh(self, state: SolverState) -> None:
        eta = self.X @ state.beta + state.intercept
        state.residual = WorkingResidual.from_linear_predictor(self.task, self.y, eta)

    def gradient(self, state: SolverState) -> NDArray:
        """Full loss gradient -X^T r at the current state."""
        return -(self.X.T @ state.residual.r)

    def group_scores(self, state: SolverState) -> NDArray:
        """||grad_k|| / sqrt(p_k), the screening and ordering score."""
        grad = self.gradient(state)
        return np.sqrt(self.group_sq_norms(grad)) / np.sqrt(self.sizes)

    # ---------------------------------------------------------------- updates

    def group_update(self, state: SolverState, k: int) -> tuple[float, float]:
        """Threshold a gradient step on group ``k`` in place.

        Returns ``(||delta_k||, ||beta_k_new||)``.
        """
        ix = self.index[k]
        Xk = self.blocks[k]
        old = state.beta[ix]
        cb = self.cbar[k]
        z = old + (Xk.T @ state.residual.r) / cb
        norm = math.sqrt(float(z @ z))
        cfg = state.config
        phi = threshold_scale(norm, cb, cfg.lambda0k[k], cfg.lambda1k[k], cfg.lambda2k[k])
        if phi == 0.0:
            if not old.any():
                return 0.0, 0.0
            new = np.zeros_like(old)
        else:
            new = phi * z
        delta = new - old
        state.beta[ix] = new
        update_residual(state.residual, Xk, delta)
        return math.sqrt(float(delta @ delta)), phi * norm

    def intercept_update(self, state: SolverState) -> float:
        step = float(np.sum(state.residual.r)) / self.cbar0
        if step != 0.0:
            state.intercept += step
            shift_intercept(state.residual, step)
        return step

    def sweep(self, state: SolverState, order) -> tuple[float, bool, float]:
        """One pass over ``order``.

        Returns the largest relative group movement, whether the support
        changed, and the Lemma-style descent bound for the pass.
        """
        if self.contiguous:
            if state.gsq is None:
                state.gsq = self.group_sq_norms(state.beta)
            tol_move, support_changed, bound = self._sweep_compiled(state, order)
        else:
            tol_move, support_changed, bound = self._sweep_python(state, order)
            state.gsq = self.group_sq_norms(state.beta)
        if self.fit_intercept:
            step = self.intercept_update(state)
            if step:
                tol_move = max(tol_move, abs(step) / (1.0 + abs(state.intercept)))
                bound += 0.5 * (self.cbar0 - self.c0) * step * step
        state.sweep_count += 1
        if state.residual.updates_since_refresh >= self.options.refresh_every:
            self.refresh(state)
        return tol_move, support_changed, bound

    def _sweep_compiled(self, state: SolverState, order) -> tuple[float, bool, float]:
        cfg = state.config
        res = state.residual
        move, changed, bound, updates = sweep_contiguous(
            self.X, self._starts, self._ends, np.asarray(order, dtype=np.int64),
            state.beta, res.eta, res.r, self.y, self.task == "logistic",
            self.cbar, self.c, cfg.lambda0k, cfg.lambda1k, cfg.lambda2k, state.gsq,
        )
        res.updates_since_refresh += updates
        return float(move), bool(changed), float(bound)

    def _sweep_python(self, state: SolverState, order) -> tuple[float, bool, float]:
        tol_move = 0.0
        support_changed = False
        bound = 0.0
        beta = state.beta
        for k in order:
            ix = self.index[k]
            was_active = beta[ix].any()
            move, new_norm = self.group_update(state, k)
            if move:
                tol_move = max(tol_move, move / (1.0 + new_norm))
                bound += 0.5 * (self.cbar[k] - self.c[k]) * move * move
                if was_active != (new_norm != 0.0):
                    support_changed = True
        return tol_move, support_changed, bound

    # ---------------------------------------------------------- certification

    def fixed_point_violation(self, state: SolverState) -> float:
        """max_k ||beta_k - T(beta_k - grad_k/cbar_k)|| / (1 + ||beta_k||)."""
        grad = self.gradient(state)
        cb_col = self.cbar[self.group_id]
        z = state.beta - grad / cb_col
        znorm = np.sqrt(self.group_sq_norms(z))
        cfg = state.config
        phi = threshold_scales(znorm, self.cbar, cfg.lambda0k, cfg.lambda1k, cfg.lambda2k)
        moved = phi[self.group_id] * z - state.beta
        move = np.sqrt(self.group_sq_norms(moved))
        bnorm = np.sqrt(self.group_sq_norms(state.beta))
        viol = float(np.max(move / (1.0 + bnorm))) if self.n_groups else 0.0
        if self.fit_intercept:
            step = float(np.sum(state.residual.r)) / self.cbar0
            viol = max(viol, abs(step) / (1.0 + abs(state.intercept)))
        return viol

    # -------------------------------------------------------------------- fit

    def initial_order(self, state: SolverState) -> tuple[list, list]:
        """Visit order plus the strong/weak split for a fresh fit."""
        opts = self.options
        g = self.n_groups
        active = self.group_sq_norms(state.beta) != 0.0
        if opts.gradient_ordering or opts.screening:
            scores = self.group_scores(state)
        if opts.gradient_ordering:
            # Stable sort on -score keeps ties in index order.
            by_score = np.argsort(-scores, kind="stable")
            order = [k for k in by_score if active[k]] + [k for k in by_score if not active[k]]
        else:
            order = list(range(g))
        n_inactive = g - int(active.sum())
        if opts.screening and n_inactive > opts.screen_size:
            inactive_ranked = np.argsort(-np.where(active, -np.inf, scores), kind="stable")
            chosen = set(inactive_ranked[: opts.screen_size].tolist()) | set(np.flatnonzero(active).tolist())
            strong = [k for k in order if k in chosen]
            weak = [k for k in order if k not in chosen]
        else:
            strong, weak = order, []
        return [int(k) for k in strong], [int(k) for k in weak]

    def fit(self, config: PenaltyConfig, beta=None, intercept: float | None = None,
            state: SolverState | None = None) -> tuple[SolverState, ConvergenceReport]:
        """Run coordinate descent to a fixed point.

        Either pass a ready ``state`` (it is updated in place) or an
        initial ``beta``/``intercept``.
        """
        if state is None:
            state = self.init_state(config, beta, intercept)
        state.config = config
        state.gsq = self.group_sq_norms(state.beta)
        state.objective = self.objective(state)
        opts = self.options
        report = ConvergenceReport(False, 0, state.objective, math.inf)
        state.strong, state.weak = self.initial_order(state)
        start = state.sweep_count
        strong = np.array(state.strong, dtype=np.int64)

        def budget_left():
            return state.sweep_count - start < opts.max_sweeps

        def run_sweep(order):
            before = self.objective(state, fresh=True) if opts.record_history else state.objective
            move, changed, bound = self.sweep(state, order)
            state.objective = self.objective(state)
            if opts.record_history:
                after = self.objective(state, fresh=True)
                report.history.append(SweepRecord(before, after, bound, changed))
            return move, changed, before

        def small(move, before):
            return move <= opts.tol and abs(before - state.objective) <= opts.tol * max(1.0, abs(state.objective))

        def too_large():
            return bool(np.any(state.gsq > opts.max_group_norm ** 2))

        while budget_left():
            # Converge on the strong set, switching to active-only sweeps once
            # the support holds still; a full strong pass confirms.
            restrict = False
            done = False
            while budget_left():
                if restrict:
                    order = strong[state.gsq[strong] != 0.0]
                else:
                    order = strong
                move, changed, before = run_sweep(order)
                if too_large():
                    report.diverged = True
                    break
                if restrict:
                    if small(move, before) or changed:
                        restrict = False
                    continue
                if small(move, before) and not changed:
                    done = True
                    break
                if opts.active_set and not changed:
                    restrict = True
            if report.diverged or not done:
                break
            if state.weak:
                move, changed, before = run_sweep(state.weak)
                on = self.group_sq_norms(state.beta) != 0.0
                promoted = [k for k in state.weak if on[k]]
                if promoted:
                    state.strong = state.strong + promoted
                    state.weak = [k for k in state.weak if not on[k]]
                    strong = np.array(state.strong, dtype=np.int64)
                    continue
            viol = self.fixed_point_violation(state)
            report.max_fixedpoint_violation = viol
            if viol < opts.tol:
                report.converged = True
                break

        self.refresh(state)
        state.objective = self.objective(state)
        report.sweeps = state.sweep_count - start
        report.final_objective = state.objective
        if not report.converged:
            report.max_fixedpoint_violation = self.fixed_point_violation(state)
        return state, report
