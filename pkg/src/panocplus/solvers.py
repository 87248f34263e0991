"""PANOC+, the original PANOC, and the adaptive proximal gradient method.

All three share the same forward-backward oracle (:func:`~panocplus.fbe.pg_step`)
and count their work in evaluations of it. Stepsize and direction
backtracking both halve exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .directions import DirectionProvider, NominalDirection, cap_direction
from .fbe import (PgStep, gamma_condition_violated, gradient_gap_violated, pg_step,
                  tau_condition_violated)
from .problem import CompositeProblem, SolverConfig

TAU_FLOOR = 2.0**-60
GAMMA_FLOOR_RATIO = 1e-18
# slack for the prox-improvement check, relative to the compared values
_EQ21_RTOL = 1e-14


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    ORACLE_ERROR = "OracleError"


class Phase(enum.Enum):
    RESIDUAL = "residual"
    STRENGTHENED = "strengthened"


class Verdict(enum.Enum):
    CONTINUE = "continue"
    ENTER_STRENGTHENED = "enter_strengthened"
    STOP = "stop"


@dataclass
class TraceRecord:
    """One row per forward-backward evaluation, in call order."""

    tgamma_eval_index: int
    k: int
    x: np.ndarray
    x_bar: np.ndarray
    gamma: float
    tau: float
    phi: float
    residual_norm: float
    cost_phi: float


@dataclass
class IterateState:
    """Snapshot of an accepted iteration."""

    k: int
    x: np.ndarray
    x_bar: np.ndarray
    gamma: float
    tau: float
    phi: float  # merit value Phi_k
    fbe: float  # envelope (or augmented Lagrangian) value at x
    delta_k: float  # (1 - alpha) / (2 gamma) ||x_bar - x||^2
    residual: float
    cost: float  # phi(x_bar)
    tgamma_evals: int
    gamma_backtracks: int = 0
    tau_backtracks: int = 0
    tau_fallback: bool = False


@dataclass
class SolveReport:
    final_point: np.ndarray
    final_residual: float
    phi_final: float
    status: Status
    trace: List[TraceRecord] = field(default_factory=list)
    history: List[IterateState] = field(default_factory=list)
    final_x: Optional[np.ndarray] = None
    gamma: float = math.nan
    witness: Optional[np.ndarray] = None
    stationarity: float = math.nan
    strengthened_passed: bool = False
    eq21_violations: int = 0
    message: str = ""

    @property
    def tgamma_evals(self) -> int:
        return len(self.trace)

    @property
    def iterations(self) -> int:
        return len(self.history)


class _Stop(Exception):
    def __init__(self, status, message=""):
        super().__init__(message)
        self.status = status
        self.message = message


def apply_nonmonotone(phi_prev: float, fbe_new: float, p_k: float) -> float:
    """Merit update ``(1 - p_k) Phi_{k-1} + p_k fbe_new``; ``p_k = 1`` is monotone."""
    if p_k == 1.0:
        return fbe_new
    return (1.0 - p_k) * phi_prev + p_k * fbe_new


def _merit(phi_prev, p_k):
    return lambda st: apply_nonmonotone(phi_prev, st.fbe_value, p_k)


def check_termination(step: PgStep, problem: CompositeProblem, config: SolverConfig,
                      phase: Phase) -> Verdict:
    """Two-phase stopping rule on an accepted step.

    A zero residual stops at once. Otherwise the residual test
    ``||x - x_bar|| / gamma <= eps / 2`` must hold; with strengthened
    termination enabled the gradient-gap test
    ``||grad f(x) - grad f(x_bar)|| <= ||x - x_bar|| / gamma`` must hold as
    well. In the residual phase a failing gap test switches the stepsize
    linesearch to the strengthened form (the step accepted in the strengthened
    phase satisfies it by construction).
    """
    if step.is_fixed_point:
        return Verdict.STOP
    if step.residual_norm > 0.5 * config.epsilon:
        return Verdict.CONTINUE
    if not config.strengthened_termination:
        return Verdict.STOP
    if phase is Phase.STRENGTHENED or not gradient_gap_violated(step, problem):
        return Verdict.STOP
    return Verdict.ENTER_STRENGTHENED


class _Run:
    """Bookkeeping shared by the solver loops: budget, trace, phase, history."""

    def __init__(self, problem, config, inexact=None):
        config.validate_for(problem)
        self.problem = problem
        self.config = config
        self.inexact = inexact
        self.trace: List[TraceRecord] = []
        self.history: List[IterateState] = []
        self.phase = Phase.RESIDUAL
        self.eq21_violations = 0
        self.gamma_floor = GAMMA_FLOOR_RATIO * config.gamma0

    def step(self, x, gamma, k, tau, warm=None, merit=None) -> PgStep:
        if len(self.trace) >= self.config.max_tgamma_evals:
            raise _Stop(Status.BUDGET_EXHAUSTED, "forward-backward evaluation budget exhausted")
        st = pg_step(self.problem, x, gamma, warm_start=warm, inexact=self.inexact, k=k)
        if self.inexact is not None and warm is not None:
            ref = st.f_at_base + self.inexact.subproblem_value(
                st.base, st.grad_at_base, gamma, np.asarray(warm.point))
            if st.fbe_value > ref + _EQ21_RTOL * (1.0 + abs(ref)):
                self.eq21_violations += 1
        cost = self.problem.f(st.candidate) + st.g_at_candidate
        self.trace.append(TraceRecord(
            tgamma_eval_index=len(self.trace), k=k, x=st.base, x_bar=st.candidate, gamma=gamma,
            tau=tau, phi=st.fbe_value if merit is None else merit(st),
            residual_norm=st.residual_norm, cost_phi=cost))
        return st

    def gamma_violated(self, st: PgStep) -> bool:
        if gamma_condition_violated(st, self.problem, self.config.alpha):
            return True
        return self.phase is Phase.STRENGTHENED and gradient_gap_violated(st, self.problem)

    def halve(self, gamma):
        gamma = 0.5 * gamma
        if gamma < self.gamma_floor:
            raise _Stop(Status.ORACLE_ERROR,
                        "stepsize fell below its floor; is grad f locally Lipschitz?")
        return gamma

    def accept(self, k, st, tau, phi_k, gb=0, tb=0, fallback=False) -> IterateState:
        state = IterateState(
            k=k, x=st.base, x_bar=st.candidate, gamma=st.gamma, tau=tau, phi=phi_k,
            fbe=st.fbe_value, delta_k=(1 - self.config.alpha) * st.delta,
            residual=st.residual_norm, cost=self.trace[-1].cost_phi,
            tgamma_evals=len(self.trace), gamma_backtracks=gb, tau_backtracks=tb,
            tau_fallback=fallback)
        self.history.append(state)
        return state

    def should_stop(self, st: PgStep) -> bool:
        verdict = check_termination(st, self.problem, self.config, self.phase)
        if verdict is Verdict.ENTER_STRENGTHENED:
            self.phase = Phase.STRENGTHENED
            return False
        if verdict is Verdict.STOP:
            return True
        mi = self.config.max_iter
        if mi is not None and len(self.history) > mi:
            raise _Stop(Status.BUDGET_EXHAUSTED, "iteration cap reached")
        return False

    def report(self, status, last: Optional[PgStep], message="") -> SolveReport:
        rep = SolveReport(
            final_point=np.array([]) if last is None else last.candidate,
            final_residual=math.nan if last is None else last.residual_norm,
            phi_final=math.nan if not self.history else self.history[-1].phi,
            status=status, trace=self.trace, history=self.history,
            eq21_violations=self.eq21_violations, message=message)
        if last is not None:
            rep.final_x = last.base
            rep.gamma = last.gamma
            rep.witness = last.prox.witness
            if rep.witness is not None:
                rep.stationarity = float(np.linalg.norm(
                    rep.witness + self.problem.grad(last.candidate)))
            rep.strengthened_passed = (status is Status.CONVERGED
                                       and self.config.strengthened_termination
                                       and not gradient_gap_violated(last, self.problem))
        return rep


def _initial_iteration(run: _Run, x0) -> tuple:
    """Iteration 0 shared by all solvers: backtrack gamma at the start point."""
    gamma = run.config.gamma0
    gb = 0
    while True:
        st = run.step(x0, gamma, 0, 1.0)
        if run.gamma_violated(st):
            gamma = run.halve(gamma)
            gb += 1
            continue
        return st, gb


def solve_panoc_plus(problem: CompositeProblem, x0, config: SolverConfig,
                     direction: Optional[DirectionProvider] = None,
                     inexact=None) -> SolveReport:
    """PANOC+ with the entangled stepsize and direction linesearches.

    Within an iteration every candidate ``x`` is first checked with the
    current stepsize; a stepsize reduction asks the direction provider for a
    fresh direction and resets ``tau = 1``. The direction test compares the
    fresh envelope value against ``Phi_{k-1} - beta (1 - alpha) / (2 gamma_{k-1})
    ||x_bar_{k-1} - x_{k-1}||^2``.

    Parameters
    ----------
    problem : CompositeProblem
    x0 : array_like
    config : SolverConfig
    direction : DirectionProvider, optional
        Defaults to :class:`NominalDirection`.
    inexact : InexactProxWrapper, optional
        Approximate prox oracle; the warm start of iteration ``k`` is
        ``x_bar_{k-1}``.
    """
    direction = direction or NominalDirection()
    run = _Run(problem, config, inexact)
    x0 = problem.as_vector(x0)
    direction.start(problem)
    last = None
    try:
        st, gb = _initial_iteration(run, x0)
        last = st
        phi_prev = st.fbe_value
        run.accept(0, st, 1.0, phi_prev, gb=gb)
        direction.update(st.base, st.candidate, st.gamma)
        if run.should_stop(st):
            return run.report(Status.CONVERGED, last)
        prev = st
        k = 1
        while True:
            gamma = prev.gamma
            prev_q = prev.dist_sq / prev.gamma
            p_k = config.weight(k)
            merit = _merit(phi_prev, p_k)
            gb = tb = 0
            accepted = None
            while accepted is None:
                d = cap_direction(direction.propose(prev.base, prev.candidate, prev.gamma, gamma),
                                  prev.base, prev.candidate, config.direction_cap)
                # x = x_bar_prev + tau * e; e == 0 makes tau irrelevant
                e = (prev.base - prev.candidate) + d
                nominal = not np.any(e)
                tau = 1.0
                fallback = False
                while True:
                    if nominal or fallback:
                        x = prev.candidate.copy()
                    else:
                        x = prev.candidate + tau * e
                    st = run.step(x, gamma, k, tau, warm=prev.prox, merit=merit)
                    last = st
                    if run.gamma_violated(st):
                        gamma = run.halve(gamma)
                        gb += 1
                        direction.notify_gamma_changed(gamma)
                        break
                    if not (nominal or fallback) and tau_condition_violated(
                            st.fbe_value, phi_prev, prev_q, config.alpha, config.beta):
                        tau *= 0.5
                        tb += 1
                        fallback = tau < TAU_FLOOR
                        continue
                    accepted = st
                    break
            phi_prev = merit(accepted)
            run.accept(k, accepted, tau, phi_prev, gb=gb, tb=tb, fallback=fallback)
            direction.update(accepted.base, accepted.candidate, accepted.gamma)
            if run.should_stop(accepted):
                return run.report(Status.CONVERGED, last)
            prev = accepted
            k += 1
    except _Stop as stop:
        return run.report(stop.status, last, stop.message)


def solve_panoc_classic(problem: CompositeProblem, x0, config: SolverConfig,
                        direction: Optional[DirectionProvider] = None) -> SolveReport:
    """The original PANOC with its adaptive stepsize (exact prox only).

    The direction linesearch runs against the envelope built with the
    previous stepsize, and the stepsize is only adapted once a candidate has
    been accepted. Without a globally Lipschitz gradient this can diverge;
    the solver exists to reproduce that behaviour.
    """
    direction = direction or NominalDirection()
    run = _Run(problem, config)
    x0 = problem.as_vector(x0)
    direction.start(problem)
    last = None
    try:
        st, gb = _initial_iteration(run, x0)
        last = st
        phi_prev = st.fbe_value
        run.accept(0, st, 1.0, phi_prev, gb=gb)
        direction.update(st.base, st.candidate, st.gamma)
        if run.should_stop(st):
            return run.report(Status.CONVERGED, last)
        prev = st
        k = 1
        while True:
            gamma = prev.gamma
            prev_q = prev.dist_sq / prev.gamma
            d = cap_direction(direction.propose(prev.base, prev.candidate, prev.gamma, gamma),
                              prev.base, prev.candidate, config.direction_cap)
            e = (prev.base - prev.candidate) + d
            nominal = not np.any(e)
            tau = 1.0
            tb = 0
            fallback = False
            while True:
                x = prev.candidate.copy() if nominal or fallback else prev.candidate + tau * e
                st = run.step(x, gamma, k, tau)
                last = st
                if not (nominal or fallback) and tau_condition_violated(
                        st.fbe_value, phi_prev, prev_q, config.alpha, config.beta):
                    tau *= 0.5
                    tb += 1
                    fallback = tau < TAU_FLOOR
                    continue
                break
            gb = 0
            while run.gamma_violated(st):
                gamma = run.halve(gamma)
                gb += 1
                direction.notify_gamma_changed(gamma)
                st = run.step(st.base, gamma, k, tau)
                last = st
            phi_prev = st.fbe_value
            run.accept(k, st, tau, phi_prev, gb=gb, tb=tb, fallback=fallback)
            direction.update(st.base, st.candidate, st.gamma)
            if run.should_stop(st):
                return run.report(Status.CONVERGED, last)
            prev = st
            k += 1
    except _Stop as stop:
        return run.report(stop.status, last, stop.message)


def solve_adaptive_pg(problem: CompositeProblem, x0, config: SolverConfig,
                      inexact=None) -> SolveReport:
    """Proximal gradient with the adaptive stepsize rule.

    ``x_k = x_bar_{k-1}``; the stepsize is halved and the prox step redone
    until the quadratic upper bound holds. Equivalent to PANOC+ with the
    nominal direction, without the (vacuous) direction linesearch.
    """
    run = _Run(problem, config, inexact)
    x0 = problem.as_vector(x0)
    last = None
    try:
        st, gb = _initial_iteration(run, x0)
        last = st
        phi_prev = st.fbe_value
        run.accept(0, st, 1.0, phi_prev, gb=gb)
        if run.should_stop(st):
            return run.report(Status.CONVERGED, last)
        prev = st
        k = 1
        while True:
            gamma = prev.gamma
            x = prev.candidate.copy()
            p_k = config.weight(k)
            merit = _merit(phi_prev, p_k)
            gb = 0
            while True:
                st = run.step(x, gamma, k, 1.0, warm=prev.prox, merit=merit)
                last = st
                if run.gamma_violated(st):
                    gamma = run.halve(gamma)
                    gb += 1
                    continue
                break
            phi_prev = merit(st)
            run.accept(k, st, 1.0, phi_prev, gb=gb)
            if run.should_stop(st):
                return run.report(Status.CONVERGED, last)
            prev = st
            k += 1
    except _Stop as stop:
        return run.report(stop.status, last, stop.message)


def verify_descent(report: SolveReport, config: SolverConfig, inf_phi: Optional[float] = None,
                   rtol: float = 1e-12) -> List[str]:
    """Check the sufficient-decrease chain on the accepted iterates of a run.

    Returns a list of human-readable violations (empty when all hold):

    * ``phi(x_bar_k) + delta_k <= fbe_k <= Phi_k``
    * ``Phi_k <= Phi_{k-1} - p_k beta delta_{k-1}`` for ``k >= 1``
    * ``phi(x_bar_k) <= Phi_0`` (sublevel set of the initial merit)
    * ``sum_k ||x_bar_k - x_k||^2 / gamma_k <= 2 (Phi_0 - inf phi) / (p_min beta (1 - alpha))``
      when ``inf_phi`` is given
    """
    out = []
    hist = report.history
    if not hist:
        return out
    tol = lambda v: rtol * (1.0 + abs(v))
    phi0 = hist[0].phi
    p_min = 1.0
    partial = 0.0
    for i, s in enumerate(hist):
        p_k = config.weight(s.k) if s.k > 0 else 1.0
        p_min = min(p_min, p_k)
        if s.cost + s.delta_k > s.fbe + tol(s.fbe):
            out.append(f"k={s.k}: phi(x_bar) + delta = {s.cost + s.delta_k!r} > fbe = {s.fbe!r}")
        if s.fbe > s.phi + tol(s.phi):
            out.append(f"k={s.k}: fbe = {s.fbe!r} > Phi = {s.phi!r}")
        if s.cost > phi0 + tol(phi0):
            out.append(f"k={s.k}: phi(x_bar) = {s.cost!r} above Phi_0 = {phi0!r}")
        if i > 0:
            prev = hist[i - 1]
            bound = prev.phi - p_k * config.beta * prev.delta_k
            if s.phi > bound + tol(prev.phi):
                out.append(f"k={s.k}: Phi = {s.phi!r} > Phi_prev - p beta delta = {bound!r}")
        partial += 2 * s.delta_k / (1 - config.alpha)
        if inf_phi is not None:
            cap = 2 * (phi0 - inf_phi) / (p_min * config.beta * (1 - config.alpha))
            if partial > cap + tol(cap):
                out.append(f"k={s.k}: residual partial sum {partial!r} exceeds {cap!r}")
    return out
