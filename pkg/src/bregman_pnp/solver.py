"""Bregman proximal gradient solvers with backtracking and diagnostics.

Two modes share one engine:

* B-RED minimizes lambda*f + g over the box [0,R]^n by explicit Bregman
  gradient steps on the learned potential's gradient, with a sufficient-
  decrease backtracking rule on the stepsize.  In the Burg geometry the
  projected step has the closed coordinatewise form implemented by
  `bred_step`; with the Euclidean potential it reduces to classical
  projected gradient descent.

* B-PnP applies the denoiser itself as the Bregman proximal map at fixed
  unit stepsize: x_{k+1} = B(grad h*(grad h(x_k) - lambda*grad f(x_k))).
  Its trace objective is lambda*f + phi with phi the denoiser's implicit
  potential, computable along the trajectory.

Runs start with a warm-start phase (large stepsize/strength, small gamma)
before switching to the convergent regime; for B-PnP an observed objective
increase over a sliding window triggers halving lambda and restarting from
the warm-start output.  Every iteration is recorded in a SolverTrace that
exports the diagnostics CSV.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .denoiser.model import ScoreDenoiserModel
from .denoiser import model as _dmodel
from .errors import (
    BacktrackExhausted,
    ConfigError,
    DivergenceInfinity,
    DomainError,
    MirrorDomainError,
    WellPosednessWarning,
)
from .geometry import (
    BOUNDARY_TOL,
    EPS_IMAGE,
    LegendrePotential,
    PotentialKind,
    bregman_div,
    mirror_step,
)
from .poisson import PoissonProblem, datafit_grad, datafit_value, nolip_bound

__all__ = [
    "SolverConfig",
    "TraceRow",
    "SolverTrace",
    "DiagnosticsReport",
    "bred_step",
    "backtrack_stepsize",
    "bpnp_step",
    "run_solver",
    "diagnostics",
]

# Slack used when reporting objective monotonicity.
MONOTONICITY_SLACK = 1e-9


@dataclass
class SolverConfig:
    """Hyperparameters for one run.

    `max_iter` caps the total iteration count including the `warm_start`
    block; the main phase therefore runs at most max_iter - warm_start
    steps. `tau` and `strength` are the main-phase stepsize (B-RED) and
    relaxation (B-PnP); the warm phase uses `warm_tau` / `warm_strength`.
    """

    mode: str
    lam: float
    gamma: float
    tau: float = 0.05
    strength: float = 0.05
    box_bound: float = 1.0
    bt_gamma: float = 0.8
    bt_eta: float = 0.5
    bt_cap: int = 60
    rel_tol: float = 1e-8
    max_iter: int = 500
    warm_start: int = 100
    warm_lam: float = 2.0
    warm_gamma: float = 50.0
    warm_tau: float = 1.0
    warm_strength: float = 1.0
    lam_window: int = 5
    lam_increase_tol: float = 1e-9
    lam_factor: float = 2.0
    lam_max_restarts: int = 6

    def validate(self) -> None:
        if self.mode not in ("bred", "bpnp"):
            raise ConfigError(f"mode must be 'bred' or 'bpnp', got {self.mode!r}")
        if self.lam <= 0 or self.warm_lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.gamma <= 0 or self.warm_gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.tau <= 0 or self.warm_tau <= 0:
            raise ConfigError("tau must be positive")
        if not (0 < self.strength <= 1) or not (0 < self.warm_strength <= 1):
            raise ConfigError("strength must lie in (0, 1]")
        if self.box_bound <= 0:
            raise ConfigError("box bound R must be positive")
        if not (0 < self.bt_gamma < 1):
            raise ConfigError("backtracking gamma must lie in (0, 1)")
        if not (0 <= self.bt_eta < 1):
            raise ConfigError("backtracking eta must lie in [0, 1)")
        if self.bt_cap < 1:
            raise ConfigError("backtracking cap must be >= 1")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be nonnegative")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not (0 <= self.warm_start <= self.max_iter):
            raise ConfigError("warm_start must lie in [0, max_iter]")
        if self.lam_window < 1 or self.lam_factor <= 1 or self.lam_max_restarts < 0:
            raise ConfigError("invalid lambda-reduction parameters")


@dataclass
class TraceRow:
    iter: int
    objective: float
    dh_residual: float
    step_sq: float
    tau: float
    bt_trials: int
    psnr: float
    flags: str


@dataclass
class SolverTrace:
    mode: str
    rows: list = field(default_factory=list)
    stop_reason: str = ""
    lam_final: float = float("nan")
    restart_iters: list = field(default_factory=list)

    def main_rows(self):
        """Rows of the final convergent segment: post warm start, post the
        last lambda restart, excluding the initial iterate row."""
        rows = [r for r in self.rows if r.iter > 0 and "warm" not in r.flags]
        if self.restart_iters:
            last = self.restart_iters[-1]
            rows = [r for r in rows if r.iter > last]
        return rows

    def to_csv(self, path) -> None:
        def fmt(v: float) -> str:
            return "%.17g" % v

        lines = ["iter,objective,dh_residual,step_sq,tau,bt_trials,psnr,flags"]
        for r in self.rows:
            lines.append(
                f"{r.iter},{fmt(r.objective)},{fmt(r.dh_residual)},"
                f"{fmt(r.step_sq)},{fmt(r.tau)},{r.bt_trials},{fmt(r.psnr)},{r.flags}"
            )
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")


def bred_step(x, gradF, tau: float, R: float) -> np.ndarray:
    """Closed-form Burg projected Bregman step, coordinatewise.

    Minimizes u*g_i + (1/tau)*(u/x_i - log(u/x_i)) over u in [0, R]: the
    unconstrained minimizer x_i/(1 + tau*x_i*g_i) when 1 + tau*x_i*g_i > 0
    and it lies in [0, R]; otherwise the objective decreases toward the
    upper bound and the answer is R.  Output stays in (0, R]^n.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    g = np.asarray(gradF, dtype=np.float64).reshape(-1)
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if x.size != g.size:
        raise DomainError(f"x has {x.size} entries, gradF has {g.size}")
    if np.any(x < BOUNDARY_TOL) or np.any(x > R):
        raise DomainError("x must lie in (0, R]^n")
    denom = 1.0 + tau * x * g
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.where(denom > 0.0, x / np.where(denom > 0.0, denom, 1.0), np.inf)
    return np.where((denom > 0.0) & (cand <= R), cand, R)


def _euclidean_box_step(x, gradF, tau: float, R: float) -> np.ndarray:
    """Euclidean counterpart: projected gradient step onto [0, R]^n."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    g = np.asarray(gradF, dtype=np.float64).reshape(-1)
    return np.clip(x - tau * g, 0.0, R)


def backtrack_stepsize(x, objective, step_map, div, tau0: float,
                       bt_gamma: float = 0.8, bt_eta: float = 0.5,
                       cap: int = 60, f_x: float = None):
    """Shrink tau until F(x) - F(T_tau(x)) >= (bt_gamma/tau) * D_h(T_tau(x), x).

    `objective` maps a point to F, `step_map` maps (x, tau) to the candidate
    iterate, `div` is the Bregman divergence D_h(candidate, x).  Returns
    (tau, x_next, trials, F(x_next)) where `trials` counts condition
    evaluations (1 = accepted immediately).  Raises BacktrackExhausted past
    `cap` evaluations.
    """
    fx = objective(x) if f_x is None else f_x
    tau = float(tau0)
    for trial in range(1, cap + 1):
        cand = step_map(x, tau)
        if np.array_equal(cand, x):
            # Exact fixed point: condition holds with both sides zero.
            return tau, cand, trial, fx
        try:
            dh = div(cand, x)
            fc = objective(cand)
        except DivergenceInfinity:
            tau *= bt_eta
            continue
        if fx - fc >= (bt_gamma / tau) * dh:
            return tau, cand, trial, fc
        tau *= bt_eta
    raise BacktrackExhausted(
        f"no acceptable stepsize after {cap} trials (tau shrunk to {tau:g}); "
        "the sufficient-decrease model is violated"
    )


def _problem_interface(P):
    """Value/grad/nolip/shape for a PoissonProblem or any duck-typed problem
    exposing value(x), grad(x), shape and optionally nolip()."""
    if isinstance(P, PoissonProblem):
        return (
            lambda x: datafit_value(P, x),
            lambda x: datafit_grad(P, x),
            nolip_bound(P),
            P.A.shape,
        )
    value = getattr(P, "value", None)
    gradf = getattr(P, "grad", None)
    shape = getattr(P, "shape", None)
    if value is None or gradf is None or shape is None:
        raise ConfigError(
            "problem must be a PoissonProblem or expose value(x)/grad(x)/shape"
        )
    nolip = getattr(P, "nolip", None)
    return value, gradf, (nolip() if callable(nolip) else nolip), tuple(shape)


def bpnp_step(x, P, M: ScoreDenoiserModel, lam: float, gamma: float,
              events=None, strength: float = None) -> np.ndarray:
    """One B-PnP iteration: denoise(mirror_step(x, lam*grad f(x), 1)).

    Raises MirrorDomainError when the mirror step is ill-posed (for Burg:
    some coordinate of 1 + lam*x*grad f(x) <= 0), which run_solver turns
    into a lambda reduction.
    """
    value, gradf, _, shape = _problem_interface(P)
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1)
    pot = M.potential(flat.size)
    z = mirror_step(pot, flat, lam * np.asarray(gradf(flat)).reshape(-1), 1.0)
    out = _dmodel.denoise(M, z.reshape(shape), gamma, events=events, strength=strength)
    return out.reshape(x.shape)


def _psnr_or_nan(x, ref) -> float:
    if ref is None:
        return float("nan")
    mse = float(np.mean((np.asarray(x) - np.asarray(ref)) ** 2))
    if mse == 0.0:
        return 200.0
    return min(10.0 * math.log10(1.0 / mse), 200.0)


def run_solver(P, M: ScoreDenoiserModel, config: SolverConfig, x0=None, x_true=None):
    """Run B-RED or B-PnP with warm start; returns (x_final, SolverTrace).

    The default initialization for Poisson problems is the adjoint estimate
    A^T(y/alpha) clipped to [EPS_IMAGE, R].  `x_true` (optional) fills the
    trace's PSNR column.  Step errors are re-raised with iteration context;
    for B-PnP a mirror-domain failure or an objective increase over
    `lam_window` iterations halves lambda and restarts from the warm-start
    output, at most `lam_max_restarts` times.
    """
    config.validate()
    value, gradf, nolip, shape = _problem_interface(P)
    n = shape[0] * shape[1]
    pot = M.potential(n)

    if x0 is None:
        if not isinstance(P, PoissonProblem):
            raise ConfigError("x0 is required for non-Poisson problems")
        x = np.clip(P.A.adjoint(P.y / P.alpha), EPS_IMAGE, config.box_bound)
    else:
        x = np.asarray(x0, dtype=np.float64).reshape(-1).copy()
        if x.size != n:
            raise ConfigError(f"x0 has {x.size} entries, problem expects {n}")
    ref = None if x_true is None else np.asarray(x_true, dtype=np.float64).reshape(-1)

    if config.mode == "bpnp" and nolip is not None and config.lam * nolip >= 1.0:
        warnings.warn(
            f"lambda*||y||_1 = {config.lam * nolip:.3g} >= 1: the sufficient "
            "condition for well-posed mirror steps is violated (it is usually "
            "conservative; lambda is auto-reduced on failure)",
            WellPosednessWarning,
            stacklevel=2,
        )

    bred_map = bred_step if M.kind is PotentialKind.BURG else _euclidean_box_step
    trace = SolverTrace(mode=config.mode)

    def g_of(xf, gam):
        return _dmodel.g_value(M, xf.reshape(shape), gam)

    def g_grad_of(xf, gam):
        return _dmodel.g_grad(M, xf.reshape(shape), gam).reshape(-1)

    def bred_objective(lam, gam):
        return lambda xf: lam * value(xf) + g_of(xf, gam)

    warm = config.warm_start
    in_warm = warm > 0
    lam_cur = config.warm_lam if in_warm else config.lam
    gam_cur = config.warm_gamma if in_warm else config.gamma
    s_cur = config.warm_strength if in_warm else config.strength
    tau_state = config.warm_tau if in_warm else config.tau

    restarts = 0
    x_warm = None
    k = 0

    def baseline_objective(xf):
        if config.mode == "bred":
            return bred_objective(lam_cur, gam_cur)(xf)
        # phi is only defined along the trajectory; at a fresh starting point
        # use its upper bound s*g, consistent with phi <= s*g everywhere.
        return lam_cur * value(xf) + s_cur * g_of(xf, gam_cur)

    prev_obj = baseline_objective(x)
    trace.rows.append(TraceRow(0, prev_obj, float("nan"), float("nan"),
                               float("nan"), 0, _psnr_or_nan(x, ref),
                               "warm" if in_warm else ""))
    obj_hist = [prev_obj]

    def restart_from_warm(reason_flag: str) -> bool:
        """Halve lambda and restart; returns False when budget exhausted."""
        nonlocal lam_cur, x, prev_obj, obj_hist, restarts
        if restarts >= config.lam_max_restarts:
            return False
        restarts += 1
        lam_cur = lam_cur / config.lam_factor
        x = (x0_saved if x_warm is None else x_warm).copy()
        prev_obj = baseline_objective(x)
        obj_hist = [prev_obj]
        trace.restart_iters.append(k)
        if trace.rows:
            trace.rows[-1].flags = _join_flags(trace.rows[-1].flags, reason_flag)
        return True

    x0_saved = x.copy()

    while k < config.max_iter:
        if in_warm and k >= warm:
            # Switch to the convergent regime; fresh phase hyperparameters.
            in_warm = False
            x_warm = x.copy()
            lam_cur, gam_cur, s_cur = config.lam, config.gamma, config.strength
            # Fresh phase stepsize, but tau never re-grows across the run.
            tau_state = min(tau_state, config.tau)
            prev_obj = baseline_objective(x)
            obj_hist = [prev_obj]

        flags = "warm" if in_warm else ""
        events = []
        try:
            if config.mode == "bred":
                gfx = lam_cur * np.asarray(gradf(x)).reshape(-1) + g_grad_of(x, gam_cur)
                obj_fn = bred_objective(lam_cur, gam_cur)
                tau_state, x_next, trials, obj = backtrack_stepsize(
                    x,
                    obj_fn,
                    lambda xv, tv: bred_map(xv, gfx, tv, config.box_bound),
                    lambda a, b: bregman_div(pot, a, b),
                    tau_state,
                    config.bt_gamma,
                    config.bt_eta,
                    config.bt_cap,
                    f_x=prev_obj,
                )
                tau_row = tau_state
            else:
                z = mirror_step(
                    pot, x, lam_cur * np.asarray(gradf(x)).reshape(-1), 1.0
                )
                x_next = _dmodel.denoise(
                    M, z.reshape(shape), gam_cur, events=events, strength=s_cur
                ).reshape(-1)
                phi = s_cur * g_of(z, gam_cur) - bregman_div(pot, x_next, z)
                obj = lam_cur * value(x_next) + phi
                trials = 0
                tau_row = 1.0
        except MirrorDomainError as exc:
            if config.mode == "bpnp" and restart_from_warm("lam-halved"):
                continue
            raise MirrorDomainError(f"iteration {k + 1}: {exc}") from exc
        except BacktrackExhausted as exc:
            raise BacktrackExhausted(f"iteration {k + 1}: {exc}") from exc

        dh = bregman_div(pot, x_next, x)
        step_sq = float(np.sum((x_next - x) ** 2))
        if events:
            total = sum(ev.count for ev in events)
            flags = _join_flags(flags, f"range-violation:{total}")
        k += 1
        row = TraceRow(k, obj, dh, step_sq, tau_row, trials,
                       _psnr_or_nan(x_next, ref), flags)
        trace.rows.append(row)
        x = x_next

        if not in_warm:
            obj_hist.append(obj)
            if dh == 0.0:
                trace.stop_reason = "fixed-point"
                row.flags = _join_flags(row.flags, "fixed-point")
                break
            if config.mode == "bpnp" and len(obj_hist) > config.lam_window:
                if obj_hist[-1] - obj_hist[-1 - config.lam_window] > config.lam_increase_tol:
                    if restart_from_warm("lam-halved"):
                        continue
            rel = abs(obj - prev_obj) / max(1.0, abs(prev_obj))
            if rel < config.rel_tol:
                trace.stop_reason = "rel-tol"
                break
        prev_obj = obj

    if not trace.stop_reason:
        trace.stop_reason = "max-iter"
    trace.lam_final = lam_cur
    return x, trace


def _join_flags(flags: str, extra: str) -> str:
    return extra if not flags else f"{flags};{extra}"


@dataclass
class DiagnosticsReport:
    monotonicity_violations: int
    violation_iters: list
    running_min_dh: np.ndarray
    loglog_slope: float
    dh_sum: float
    final_step_norm: float
    iterations: int
    stop_reason: str


def diagnostics(trace: SolverTrace) -> DiagnosticsReport:
    """Convergence report over the final post-warm-start trace segment.

    Counts objective increases beyond the 1e-9 slack, computes the running
    minimum of the D_h residuals with the least-squares slope of its log-log
    curve against the iteration count (O(1/K) decay shows as slope <= -1),
    the partial sum of residuals, and the last step norm.
    """
    rows = trace.main_rows()
    if not rows:
        raise ConfigError("trace has no post-warm-start rows")
    objs = [r.objective for r in rows]
    violations = [
        rows[i + 1].iter
        for i in range(len(objs) - 1)
        if objs[i + 1] > objs[i] + MONOTONICITY_SLACK
    ]
    dh = np.array([r.dh_residual for r in rows])
    runmin = np.minimum.accumulate(dh)
    ks = np.arange(1, len(runmin) + 1, dtype=np.float64)
    positive = runmin > 0.0
    if positive.all() and len(runmin) >= 2:
        slope = float(np.polyfit(np.log(ks), np.log(runmin), 1)[0])
    elif len(runmin) >= 2:
        slope = float("-inf")  # an exact fixed point was reached
    else:
        slope = float("nan")
    return DiagnosticsReport(
        monotonicity_violations=len(violations),
        violation_iters=violations,
        running_min_dh=runmin,
        loglog_slope=slope,
        dh_sum=float(dh.sum()),
        final_step_norm=float(np.sqrt(rows[-1].step_sq)),
        iterations=rows[-1].iter,
        stop_reason=trace.stop_reason,
    )
