"""Curvature flows on circle packing metrics.

All ten flow families are integrated in log-radius coordinates, which keeps
radii positive structurally. Fields are expressed as d(log r)/dt:

    ricci                    -R/2                  (alpha fixed to 2)
    ricci_normalized         (R_av - R)/2
    ricci_prescribed         (Rbar - R)/2
    calabi                   (Laplacian R)/2
    calabi_modified          -(A phi)/2            A, phi in log r^2 coords
    alpha_ricci              -R_a
    alpha_ricci_normalized   R_a,av - R_a
    alpha_prescribed         Rbar - R_a
    alpha_calabi             Laplacian_a R_a
    alpha_calabi_modified    -A phi                A, phi in log r coords

The alpha = 2 members of the alpha families trace the same curves as their
classical counterparts, at twice (Ricci) or four times (Calabi) the speed;
this is the log r versus log r^2 time convention.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rk import DomainError, advance
from .errors import (DegenerateTriangleError, NoConvergenceError,
                     NotApplicableError, StepFailureError)
from .mesh import euler_characteristic
from .operators2d import (alpha_laplacian, calabi_energy,
                          calabi_energy_gradient, laplacian,
                          potential_gradient, potential_hessian,
                          ricci_potential)
from .packing2d import (angle_defect, average_curvature, check_metric,
                        curvature, total_measure)

PRESCRIBED_FAMILIES = ("ricci_prescribed", "alpha_prescribed")
ALPHA_FAMILIES = ("alpha_ricci", "alpha_ricci_normalized", "alpha_prescribed",
                  "alpha_calabi", "alpha_calabi_modified")
CLASSIC_FAMILIES = ("ricci", "ricci_normalized", "ricci_prescribed",
                    "calabi", "calabi_modified")
FAMILIES = CLASSIC_FAMILIES + ALPHA_FAMILIES + ("yamabe",)

# conserved quantity per family: "measure" = ||r||_alpha^alpha (product of
# radii when alpha = 0), "product" = prod r_i, None = nothing conserved
CONSERVED = {
    "ricci_normalized": "measure",
    "calabi": "measure",
    "alpha_ricci_normalized": "measure",
    "alpha_calabi": "measure",
    "calabi_modified": "product",
    "alpha_calabi_modified": "product",
    "yamabe": "volume",
}


@dataclass
class FlowSpec:
    """Flow family plus integrator and stopping configuration."""

    family: str
    alpha: float = 2.0
    target: np.ndarray | None = None
    method: str = "dopri5"
    initial_step: float = 1e-2
    min_step: float = 1e-12
    max_step: float | None = None
    rtol: float = 1e-9
    atol: float = 1e-12
    t_max: float = 50.0
    max_steps: int = 100000
    eps: float = 1e-9
    renormalize: bool = True
    record_energies: bool = True
    r_min_guard: float = 1e-8
    r_max_guard: float = 1e8
    # 3-d singularity thresholds (yamabe family only)
    sing_radius: float = 1e-6
    sing_q: float = 1e-8

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family in CLASSIC_FAMILIES and self.alpha != 2.0:
            raise ValueError(f"family {self.family!r} is the alpha = 2 theory; "
                             f"use an alpha_* family for alpha = {self.alpha}")
        if self.family == "yamabe" and self.alpha != 2.0:
            raise ValueError("the 3-d flow uses alpha = 2")
        prescribed = self.family in PRESCRIBED_FAMILIES
        if prescribed and self.target is None:
            raise ValueError(f"family {self.family!r} requires a target")
        if not prescribed and self.target is not None:
            raise ValueError(f"family {self.family!r} takes no target")
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=float)
        for name in ("initial_step", "min_step", "rtol", "atol", "t_max", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def resolved_max_step(self):
        if self.max_step is not None:
            return self.max_step
        return 0.5 if "calabi" in self.family else 5.0


@dataclass
class FlowState:
    t: float
    r: np.ndarray
    h: float


@dataclass
class FlowTrace:
    """Time series of a flow run with its diagnostic monitors."""

    family: str
    alpha: float
    times: np.ndarray
    radii: np.ndarray        # (samples, N)
    curvatures: np.ndarray   # (samples, N) alpha-curvature along the run
    conserved: np.ndarray    # (samples,) family's conserved quantity
    potential: np.ndarray    # (samples,) Ricci potential (3-d: total curvature)
    calabi: np.ndarray       # (samples,) Calabi energy (3-d: dissipation form)
    residuals: np.ndarray    # (samples,) scale-normalized curvature residual
    termination: str
    n_steps: int
    n_rejected: int = 0
    target: np.ndarray | None = None
    singularity: dict | None = None

    @property
    def converged(self):
        return self.termination == "converged"

    def fit_rate(self):
        """Least-squares fit of log residual against time.

        Returns (slope, intercept, r_squared) over the samples past the first
        tenth of the run and above the terminal-noise floor, or None when
        fewer than five samples qualify.
        """
        res = self.residuals
        t = self.times
        floor = max(res[-1] * 50.0, 1e-300)
        keep = (res > floor) & (t >= t[-1] / 10.0)
        if keep.sum() < 5:
            keep = res > floor
        if keep.sum() < 5:
            return None
        x = t[keep]
        y = np.log(res[keep])
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        pred = A @ coef
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
        return float(coef[0]), float(coef[1]), r2

    def summary(self):
        drift = 0.0
        if self.conserved[0] != 0 and np.all(np.isfinite(self.conserved)):
            drift = float(np.max(np.abs(self.conserved / self.conserved[0] - 1.0)))
        span = max(self.times[-1] - self.times[0], 1e-300)
        fin = np.isfinite(self.potential)
        mono_f = bool(np.all(np.diff(self.potential[fin]) <= 1e-9)) if fin.any() else None
        finc = np.isfinite(self.calabi)
        mono_c = bool(np.all(np.diff(self.calabi[finc]) <= 1e-9)) if finc.any() else None
        out = {
            "family": self.family,
            "alpha": self.alpha,
            "termination": self.termination,
            "t_final": float(self.times[-1]),
            "samples": int(len(self.times)),
            "steps": int(self.n_steps),
            "rejected_steps": int(self.n_rejected),
            "final_residual": float(self.residuals[-1]),
            "conserved_drift": drift,
            "conserved_drift_per_unit_time": drift / span,
            "potential_nonincreasing": mono_f,
            "calabi_nonincreasing": mono_c,
        }
        fit = self.fit_rate()
        if fit is not None:
            out["rate_fit"] = {"slope": fit[0], "r_squared": fit[2]}
        if self.singularity is not None:
            out["singularity"] = self.singularity
        return out

    def write_csv(self, path):
        n = self.radii.shape[1]
        cols = (["t"] + [f"r_{i+1}" for i in range(n)]
                + [f"R_{i+1}" for i in range(n)]
                + ["conserved", "F", "C", "residual"])
        with open(path, "w") as fp:
            fp.write(",".join(cols) + "\n")
            for k in range(len(self.times)):
                row = ([self.times[k]] + list(self.radii[k])
                       + list(self.curvatures[k])
                       + [self.conserved[k], self.potential[k],
                          self.calabi[k], self.residuals[k]])
                fp.write(",".join(f"{x:.17g}" for x in row) + "\n")


# -- vector fields ------------------------------------------------------------


def _field(spec, c, r):
    a = spec.alpha
    fam = spec.family
    if fam == "ricci":
        return -0.5 * curvature(c, r, 2.0)
    if fam == "ricci_normalized":
        return 0.5 * (average_curvature(c, r, 2.0) - curvature(c, r, 2.0))
    if fam == "ricci_prescribed":
        return 0.5 * (spec.target - curvature(c, r, 2.0))
    if fam == "calabi":
        return 0.5 * laplacian(c, r, curvature(c, r, 2.0))
    if fam == "calabi_modified":
        return -0.25 * calabi_energy_gradient(c, r, 2.0, coord="log_r2")
    if fam == "alpha_ricci":
        return -curvature(c, r, a)
    if fam == "alpha_ricci_normalized":
        return average_curvature(c, r, a) - curvature(c, r, a)
    if fam == "alpha_prescribed":
        return spec.target - curvature(c, r, a)
    if fam == "alpha_calabi":
        return alpha_laplacian(c, r, a, curvature(c, r, a))
    if fam == "alpha_calabi_modified":
        return -0.5 * calabi_energy_gradient(c, r, a, coord="log_r")
    raise ValueError(f"family {fam!r} is not a 2-d flow")


def vector_field(spec, c, r):
    """Right-hand side of the selected family as d(log r)/dt per vertex."""
    return _field(spec, c, check_metric(c, r))


# -- residuals and conserved quantities ---------------------------------------


def constant_curvature_residual(c, r, alpha=2.0):
    """Scale-free deviation from constant alpha-curvature:
    max |R_a - R_av| * ||r||_a^a / (2 pi |chi| + 1)."""
    dev = np.max(np.abs(curvature(c, r, alpha) - average_curvature(c, r, alpha)))
    chi = euler_characteristic(c)
    return float(dev * total_measure(r, alpha) / (2.0 * np.pi * abs(chi) + 1.0))


def prescribed_residual(c, r, alpha, target):
    """max |K - Rbar r^alpha| in radians (scale invariant)."""
    return float(np.max(np.abs(angle_defect(c, r)
                               - np.asarray(target) * r ** alpha)))


def _residual(spec, c, r):
    if spec.family in PRESCRIBED_FAMILIES:
        return prescribed_residual(c, r, spec.alpha, spec.target)
    return constant_curvature_residual(c, r, spec.alpha)


def _conserved_value(spec, r):
    kind = CONSERVED.get(spec.family)
    if kind == "measure" and spec.alpha != 0.0:
        return total_measure(r, spec.alpha)
    if kind in ("measure", "product"):
        return float(np.exp(np.sum(np.log(r))))
    return math.nan


def _project(spec, u, ref):
    """Shift u along the constant vector to restore the conserved quantity."""
    kind = CONSERVED.get(spec.family)
    if kind is None or not spec.renormalize:
        return u
    if kind == "measure" and spec.alpha != 0.0:
        cur = np.sum(np.exp(spec.alpha * u))
        return u + np.log(ref / cur) / spec.alpha
    cur = np.sum(u)
    return u + (ref - cur) / len(u)


def _conserved_ref(spec, u):
    kind = CONSERVED.get(spec.family)
    if kind == "measure" and spec.alpha != 0.0:
        return np.sum(np.exp(spec.alpha * u))
    return np.sum(u)


# -- stepping -----------------------------------------------------------------


def _wrap_field(spec, c):
    def fn(t, u):
        if np.max(np.abs(u)) > 700.0:  # exp overflow guard
            raise DomainError("log radius out of range")
        r = np.exp(u)
        try:
            return _field(spec, c, r)
        except DegenerateTriangleError as exc:
            raise DomainError(str(exc)) from exc
    return fn


def step(spec, c, state):
    """One integrator step from a FlowState; adaptive methods retry until the
    local error estimate passes. Raises StepFailureError below min_step."""
    fn = _wrap_field(spec, c)
    u = np.log(check_metric(c, state.r))
    t2, u2, _, h_next, _ = advance(fn, state.t, u, state.h, spec.method,
                                   spec.rtol, spec.atol, spec.min_step,
                                   spec.resolved_max_step())
    return FlowState(t2, np.exp(u2), h_next)


def run(spec, c, r0):
    """Integrate the flow until convergence or a stop condition.

    Convergence means the scale-normalized curvature residual falls below
    spec.eps. Normalized families are projected back onto their conserved
    constraint after every accepted step.
    """
    c.require_valid()
    r0 = check_metric(c, r0)
    fn = _wrap_field(spec, c)
    u = np.log(r0)
    ref = _conserved_ref(spec, u)
    t, h = 0.0, min(spec.initial_step, spec.resolved_max_step())

    times, radii, curv, cons, pot, cal, res = [], [], [], [], [], [], []
    f_acc = 0.0
    u_prev = None

    def record(t_, u_):
        nonlocal f_acc, u_prev
        r_ = np.exp(u_)
        times.append(t_)
        radii.append(r_)
        curv.append(curvature(c, r_, spec.alpha))
        cons.append(_conserved_value(spec, r_))
        res.append(_residual(spec, c, r_))
        if spec.record_energies:
            if u_prev is not None:
                f_acc += ricci_potential(c, u_prev, u_, spec.alpha,
                                         spec.target, tol=1e-12)
            pot.append(f_acc)
            cal.append(calabi_energy(c, r_, spec.alpha, spec.target))
        else:
            pot.append(math.nan)
            cal.append(math.nan)
        u_prev = u_

    record(t, u)
    termination = None
    n_steps = 0
    n_rejected = 0
    while True:
        if res[-1] < spec.eps:
            termination = "converged"
            break
        if t >= spec.t_max - spec.min_step:
            termination = "max_time"
            break
        if n_steps >= spec.max_steps:
            termination = "max_steps"
            break
        try:
            t, u, _, h, rej = advance(fn, t, u, min(h, spec.t_max - t),
                                      spec.method, spec.rtol, spec.atol,
                                      spec.min_step, spec.resolved_max_step())
        except StepFailureError:
            termination = "stepped_out_of_domain"
            break
        n_steps += 1
        n_rejected += rej
        u = _project(spec, u, ref)
        r_now = np.exp(u)
        record(t, u)
        if np.min(r_now) < spec.r_min_guard or np.max(r_now) > spec.r_max_guard:
            termination = "diverged"
            break

    return FlowTrace(spec.family, spec.alpha, np.array(times), np.array(radii),
                     np.array(curv), np.array(cons), np.array(pot),
                     np.array(cal), np.array(res), termination, n_steps,
                     n_rejected=n_rejected, target=spec.target)


# -- maximum-principle envelopes ----------------------------------------------


@dataclass
class EnvelopeCase:
    name: str
    kind: str                 # "lower", "upper" or "sign"
    max_violation: float
    n_violations: int
    envelope: np.ndarray | None = None

    @property
    def ok(self):
        return self.n_violations == 0


@dataclass
class MaxPrincipleReport:
    cases: list
    tol: float

    @property
    def ok(self):
        return all(case.ok for case in self.cases)


def _reaction_solution(s0, cav, kappa, t):
    """Solution of s' = kappa s (s - cav) with s(0) = s0 and its validity mask.

    The mask turns false past a blow-up time (the denominator crossing zero);
    the formula is only an envelope while the comparison solution exists.
    """
    t = np.asarray(t, dtype=float)
    if s0 == 0.0:
        return np.zeros_like(t), np.ones_like(t, dtype=bool)
    if kappa == 0.0:
        return np.full_like(t, s0), np.ones_like(t, dtype=bool)
    if cav == 0.0:
        denom = 1.0 - kappa * s0 * t
        num = s0
    else:
        denom = 1.0 - (1.0 - cav / s0) * np.exp(kappa * cav * t)
        num = cav
    valid = (np.sign(denom) == np.sign(denom.flat[0])) & (np.abs(denom) > 1e-300)
    s = num / np.where(valid, denom, 1.0)
    return np.where(valid, s, 0.0), valid


def max_principle_bounds(c, trace, alpha=None, tol=1e-6):
    """Check the closed-form curvature envelopes along a normalized run.

    The applicable cases depend on the Euler characteristic and the signs of
    the initial curvatures; raises NotApplicableError when none applies.
    """
    if trace.family not in ("ricci_normalized", "alpha_ricci_normalized"):
        raise NotApplicableError(
            f"envelopes are stated for normalized Ricci runs, not {trace.family!r}")
    a = trace.alpha if alpha is None else float(alpha)
    kappa = 1.0 if trace.family == "ricci_normalized" else a
    chi = euler_characteristic(c)
    t = trace.times
    R = trace.curvatures
    cav = average_curvature(c, trace.radii[0], a)
    smin = float(R[0].min())
    smax = float(R[0].max())
    rmin = R.min(axis=1)
    rmax = R.max(axis=1)
    cases = []

    def check_lower(name, env, valid=None):
        gap = env - rmin
        if valid is not None:
            gap = np.where(valid, gap, -np.inf)
        bad = gap > tol
        cases.append(EnvelopeCase(name, "lower", float(np.max(gap)),
                                  int(bad.sum()), env))

    def check_upper(name, env, valid=None):
        gap = rmax - env
        if valid is not None:
            gap = np.where(valid, gap, -np.inf)
        bad = gap > tol
        cases.append(EnvelopeCase(name, "upper", float(np.max(gap)),
                                  int(bad.sum()), env))

    if trace.family == "ricci_normalized":
        if chi < 0 or chi == 0 or (chi > 0 and smin < 0):
            env, valid = _reaction_solution(smin, cav, kappa, t)
            check_lower(f"lower_chi_{'neg' if chi < 0 else ('zero' if chi == 0 else 'pos')}",
                        env, valid)
        if smax < 0:
            dev = cav * (1.0 - cav / smax) * np.exp(kappa * cav * t)
            check_upper("upper_all_negative", cav + dev)
    else:
        if a > 0 and smax < 0:
            check_lower("alpha_pos_lower", cav + (smin - cav) * np.exp(kappa * cav * t))
            check_upper("alpha_pos_upper",
                        cav + cav * (1.0 - cav / smax) * np.exp(kappa * cav * t))
        elif a < 0 and smin > 0:
            check_lower("alpha_neg_lower",
                        cav + (cav / smin) * (smin - cav) * np.exp(kappa * cav * t))
            check_upper("alpha_neg_upper",
                        cav + (smax - cav) * np.exp(kappa * cav * t))
        elif a == 0.0:
            check_lower("heat_lower", np.full_like(t, smin))
            check_upper("heat_upper", np.full_like(t, smax))

    if smin >= 0:
        check_lower("nonnegative_preserved", np.zeros_like(t))
    if smax <= 0:
        check_upper("nonpositive_preserved", np.zeros_like(t))

    if not cases:
        raise NotApplicableError("no maximum-principle case applies to this run")
    return MaxPrincipleReport(cases, tol)


# -- constant-curvature search -------------------------------------------------


def _orthonormal_complement_of_ones(n):
    basis = np.eye(n)[:, 1:] - 1.0 / n
    q, _ = np.linalg.qr(basis)
    return q


def find_constant_curvature(c, alpha, r0, method="newton", eps=1e-9,
                            max_iter=100):
    """Search for a constant alpha-curvature metric.

    method="newton" runs a damped Newton iteration on the potential gradient
    restricted to the scale-invariant slice; method="flow" delegates to the
    normalized alpha-Ricci flow.
    """
    c.require_valid()
    r0 = check_metric(c, r0)
    if method == "flow":
        spec = FlowSpec(family="alpha_ricci_normalized", alpha=alpha, eps=eps,
                        t_max=500.0)
        trace = run(spec, c, r0)
        if not trace.converged:
            raise NoConvergenceError(
                f"flow terminated with {trace.termination!r}",
                diagnostics=trace.summary())
        return trace.radii[-1]
    if method != "newton":
        raise ValueError(f"unknown method {method!r}")

    n = c.vertex_count
    B = _orthonormal_complement_of_ones(n)
    u = np.log(r0)
    g = potential_gradient(c, np.exp(u), alpha)
    for _ in range(max_iter):
        r = np.exp(u)
        if constant_curvature_residual(c, r, alpha) < eps:
            return r
        H = potential_hessian(c, r, alpha, coord="log_r").matrix
        try:
            y = np.linalg.solve(B.T @ H @ B, -(B.T @ g))
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError(f"singular projected Hessian: {exc}") from exc
        # backtracking on the gradient norm, with a floor so Newton can still
        # crawl through mildly indefinite regions
        lam = 1.0
        g_norm = np.linalg.norm(g)
        for _ in range(30):
            u_try = u + lam * (B @ y)
            try:
                g_try = potential_gradient(c, np.exp(u_try), alpha)
            except (DegenerateTriangleError, FloatingPointError):
                lam *= 0.5
                continue
            if np.linalg.norm(g_try) <= (1.0 - 0.25 * lam) * g_norm or lam < 1e-4:
                u, g = u_try, g_try
                break
            lam *= 0.5
        else:
            raise NoConvergenceError("line search stalled",
                                     diagnostics={"residual": g_norm})
    raise NoConvergenceError(
        f"no convergence after {max_iter} Newton iterations",
        diagnostics={"residual": constant_curvature_residual(c, np.exp(u), alpha)})
