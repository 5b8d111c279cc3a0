"""Method-of-steps integration of the delayed plankton-fish system.

Fixed-step classical 4th-order Runge-Kutta with cubic Hermite dense
output.  The step is kept below the smallest positive delay so that all
delayed lookups fall into already-completed intervals, which makes the
method of steps structurally valid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrationError
from .model import ModelParams, plankton_only_point

POSITIVITY_TOL = 1e-9
_GRID = 257  # validation / window-max sampling per history component


class History:
    """Initial functions (phi, psi, eta) on the delay windows.

    Built through one of the preset constructors or ``tabulated``.  Each
    component is evaluated on [-tau_max, 0]; the per-component windows
    [-tau1, 0], [-tau_max, 0], [-tau2, 0] are kept for the verification
    maxima.  Components must be non-negative and phi(0) must be positive.
    """

    def __init__(self, p: ModelParams, funcs, kind: str, meta: dict):
        self.p = p
        self._funcs = funcs
        self.kind = kind
        self.meta = meta
        self.windows = ((-p.tau1, 0.0), (-p.tau_max, 0.0), (-p.tau2, 0.0))
        self._validate()

    # -- preset constructors -------------------------------------------------

    @classmethod
    def constant(cls, p: ModelParams, values) -> "History":
        vx, vy, vz = (float(v) for v in values)
        return cls(p, (lambda t: vx, lambda t: vy, lambda t: vz),
                   "constant", {"values": (vx, vy, vz)})

    @classmethod
    def equilibrium_plus_constant(cls, p: ModelParams, offsets) -> "History":
        x0, y0 = plankton_only_point(p)
        ox, oy, oz = (float(v) for v in offsets)
        return cls(p, (lambda t: x0 + ox, lambda t: y0 + oy, lambda t: oz),
                   "equilibrium_plus_constant",
                   {"equilibrium": (x0, y0, 0.0), "offsets": (ox, oy, oz)})

    @classmethod
    def equilibrium_plus_sine(cls, p: ModelParams, amplitudes,
                              frequency: float, phase: float = 0.0) -> "History":
        x0, y0 = plankton_only_point(p)
        ax, ay, az = (float(v) for v in amplitudes)
        w, ph = float(frequency), float(phase)
        eq = (x0, y0, 0.0)

        def make(i, amp):
            return lambda t: eq[i] + amp * math.sin(w * t + ph)

        return cls(p, (make(0, ax), make(1, ay), make(2, az)),
                   "equilibrium_plus_sine",
                   {"equilibrium": eq, "amplitudes": (ax, ay, az),
                    "frequency": w, "phase": ph})

    @classmethod
    def tabulated(cls, p: ModelParams, thetas, values) -> "History":
        from scipy.interpolate import CubicSpline
        thetas = np.asarray(thetas, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (thetas.size, 3):
            raise DomainError("tabulated history needs values of shape (n, 3)")
        if thetas[0] > -p.tau_max or thetas[-1] < 0.0:
            raise DomainError("tabulated history must cover [-tau_max, 0]")
        splines = [CubicSpline(thetas, values[:, i], bc_type="natural")
                   for i in range(3)]

        def make(s):
            return lambda t: float(s(t))

        return cls(p, tuple(make(s) for s in splines), "tabulated", {})

    # -- evaluation ----------------------------------------------------------

    def component(self, i: int, theta: float) -> float:
        lo = -self.p.tau_max
        if theta < lo - 1e-9 * (1.0 + self.p.tau_max) or theta > 1e-12:
            raise DomainError(f"history evaluated at theta = {theta!r} "
                              f"outside [{lo}, 0]")
        return self._funcs[i](min(theta, 0.0))

    def __call__(self, theta: float):
        return (self.component(0, theta), self.component(1, theta),
                self.component(2, theta))

    def max_abs_deviation(self, i: int, window, center: float) -> float:
        """Max of |component_i(theta) - center| on a dense grid + endpoints."""
        a, b = window
        grid = np.linspace(a, b, max(_GRID, 1024))
        return max(abs(self._funcs[i](t) - center) for t in grid)

    def analytic_max_abs_deviation(self, i: int, window,
                                   center: float) -> float | None:
        """Closed-form window maximum for the preset families, else None."""
        a, b = window
        if self.kind == "constant":
            return abs(self.meta["values"][i] - center)
        if self.kind == "equilibrium_plus_constant":
            eq = self.meta["equilibrium"][i]
            return abs(eq + self.meta["offsets"][i] - center)
        if self.kind == "equilibrium_plus_sine":
            eq = self.meta["equilibrium"][i]
            amp = self.meta["amplitudes"][i]
            w, ph = self.meta["frequency"], self.meta["phase"]
            cands = [a, b]
            if w != 0.0:
                # interior extrema of sin(w t + ph)
                k0 = math.floor((w * a + ph) / math.pi - 0.5)
                k1 = math.ceil((w * b + ph) / math.pi + 0.5)
                for k in range(k0, k1 + 1):
                    t = ((k + 0.5) * math.pi - ph) / w
                    if a <= t <= b:
                        cands.append(t)
            return max(abs(eq + amp * math.sin(w * t + ph) - center)
                       for t in cands)
        return None

    def _validate(self):
        for i, (lo, _) in enumerate(self.windows):
            for t in np.linspace(lo, 0.0, _GRID):
                v = self._funcs[i](float(t))
                if not math.isfinite(v) or v < 0.0:
                    raise DomainError(
                        f"history component {i} is {v!r} at theta = {t:g}; "
                        f"components must be finite and non-negative")
        if self._funcs[0](0.0) <= 0.0:
            raise DomainError("history requires phi(0) > 0")


@dataclass
class PositivityReport:
    passed: bool
    observed_sup: tuple[float, float, float]
    observed_min: float
    x_bound: float
    messages: list[str] = field(default_factory=list)


class Trajectory:
    """Dense-output numerical solution on [0, t_end]."""

    def __init__(self, p: ModelParams, history: History, step: float,
                 states: np.ndarray, derivs: np.ndarray):
        self.p = p
        self.history = history
        self.step = step
        self.states = states
        self.derivs = derivs
        self.t_end = step * (states.shape[0] - 1)
        self.times = step * np.arange(states.shape[0])
        self.observed_sup = tuple(float(v) for v in states.max(axis=0))

    def sample(self, t: float):
        """State at time t; history for t < 0, Hermite interpolation else."""
        if t < 0.0:
            return self.history(t)
        if t > self.t_end * (1.0 + 1e-12) + 1e-15:
            raise DomainError(f"sample time {t!r} beyond t_end = {self.t_end}")
        h = self.step
        k = min(int(t / h), self.states.shape[0] - 2)
        u = t / h - k
        if u == 0.0:
            return tuple(self.states[k])
        if u >= 1.0:
            u = 1.0
        u2, u3 = u * u, u * u * u
        h00 = 2.0 * u3 - 3.0 * u2 + 1.0
        h10 = u3 - 2.0 * u2 + u
        h01 = -2.0 * u3 + 3.0 * u2
        h11 = u3 - u2
        y = (h00 * self.states[k] + h10 * h * self.derivs[k]
             + h01 * self.states[k + 1] + h11 * h * self.derivs[k + 1])
        return tuple(float(v) for v in y)

    def sample_many(self, ts) -> np.ndarray:
        """Vectorized :meth:`sample` over an array of times."""
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, 3))
        neg = ts < 0.0
        for i in np.nonzero(neg)[0]:
            out[i] = self.history(float(ts[i]))
        pos = ~neg
        if pos.any():
            t = ts[pos]
            if t.max() > self.t_end * (1.0 + 1e-12) + 1e-15:
                raise DomainError(f"sample time beyond t_end = {self.t_end}")
            h = self.step
            k = np.minimum((t / h).astype(int), self.states.shape[0] - 2)
            u = np.clip(t / h - k, 0.0, 1.0)[:, None]
            u2, u3 = u * u, u * u * u
            out[pos] = ((2.0 * u3 - 3.0 * u2 + 1.0) * self.states[k]
                        + (u3 - 2.0 * u2 + u) * h * self.derivs[k]
                        + (-2.0 * u3 + 3.0 * u2) * self.states[k + 1]
                        + (u3 - u2) * h * self.derivs[k + 1])
        return out

    def to_csv(self, path, stride: int = 1):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "y", "z"])
            for i in range(0, self.states.shape[0], stride):
                writer.writerow([f"{self.times[i]:.17g}"]
                                + [f"{v:.17g}" for v in self.states[i]])


def default_step(p: ModelParams) -> float:
    base = min(v for v in (p.tau1, p.tau2, 0.01) if v > 0.0)
    h0 = base / 20.0
    if p.tau_min > 0.0:
        return p.tau_min / math.ceil(p.tau_min / h0)
    return h0


def integrate(p: ModelParams, hist: History, t_end: float,
              step: float | None = None) -> Trajectory:
    """Advance the system with fixed-step RK4 and Hermite dense output."""
    if t_end <= 0.0:
        raise DomainError("t_end must be positive")
    h_target = default_step(p) if step is None else float(step)
    if h_target <= 0.0:
        raise DomainError("step must be positive")
    pos_taus = [tau for tau in (p.tau1, p.tau2) if tau > 0.0]
    if pos_taus and h_target > min(pos_taus) / 20.0 * (1.0 + 1e-12):
        raise DomainError(f"step {h_target} exceeds smallest positive "
                          f"delay / 20 = {min(pos_taus) / 20.0}")
    n = math.ceil(t_end / h_target - 1e-12)
    h = t_end / n

    r, K, c1, c2 = p.r, p.K, p.c1, p.c2
    d1, d2, e1, e2 = p.d1, p.d2, p.e1, p.e2
    tau1, tau2 = p.tau1, p.tau2
    states = [tuple(float(v) for v in hist(0.0))]
    derivs: list[tuple[float, float, float]] = []

    def lookup(s, completed):
        # value at time s: history for s < 0, Hermite on completed nodes else
        if s < 0.0:
            return hist(s)
        k = int(s / h)
        if k >= completed:
            return states[completed]
        u = s / h - k
        u2, u3 = u * u, u * u * u
        h00 = 2.0 * u3 - 3.0 * u2 + 1.0
        h10 = u3 - 2.0 * u2 + u
        h01 = -2.0 * u3 + 3.0 * u2
        h11 = u3 - u2
        a, b = states[k], states[k + 1]
        fa, fb = derivs[k], derivs[k + 1]
        return (h00 * a[0] + h10 * h * fa[0] + h01 * b[0] + h11 * h * fb[0],
                h00 * a[1] + h10 * h * fa[1] + h01 * b[1] + h11 * h * fb[1],
                h00 * a[2] + h10 * h * fa[2] + h01 * b[2] + h11 * h * fb[2])

    def f(t, state, completed):
        x, y, z = state
        if tau1 > 0.0:
            x1, y1, _ = lookup(t - tau1, completed)
        else:
            x1, y1 = x, y
        if tau2 > 0.0:
            _, y2, z2 = lookup(t - tau2, completed)
        else:
            y2, z2 = y, z
        return (r * x * (1.0 - x / K) - c1 * x * y,
                -d1 * y + e1 * c1 * x1 * y1 - c2 * y * z,
                -d2 * z + e2 * c2 * y2 * z2)

    for i in range(n):
        t = i * h
        y0 = states[i]
        k1 = f(t, y0, i)
        if i == len(derivs):
            derivs.append(k1)
        k2 = f(t + 0.5 * h, tuple(y0[j] + 0.5 * h * k1[j] for j in range(3)), i)
        k3 = f(t + 0.5 * h, tuple(y0[j] + 0.5 * h * k2[j] for j in range(3)), i)
        k4 = f(t + h, tuple(y0[j] + h * k3[j] for j in range(3)), i)
        nxt = tuple(y0[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                    for j in range(3))
        if not all(math.isfinite(v) for v in nxt):
            raise IntegrationError(f"non-finite state at t = {t + h:g}")
        states.append(nxt)
    derivs.append(f(n * h, states[n], n))
    return Trajectory(p, hist, h, np.array(states), np.array(derivs))


def check_positivity_boundedness(traj: Trajectory,
                                 p: ModelParams) -> PositivityReport:
    """Empirical check of non-negativity and the logistic bound on x."""
    observed_min = float(traj.states.min())
    sup_phi = max(traj.history.component(0, float(t))
                  for t in np.linspace(-p.tau1, 0.0, _GRID))
    x_bound = max(sup_phi, p.K)
    messages = []
    ok = True
    if observed_min < -POSITIVITY_TOL:
        ok = False
        messages.append(f"component dips to {observed_min:g}")
    x_max = float(traj.states[:, 0].max())
    if x_max > x_bound + 1e-6:
        ok = False
        messages.append(f"x exceeds logistic bound: {x_max:g} > {x_bound:g}")
    return PositivityReport(passed=ok, observed_sup=traj.observed_sup,
                            observed_min=observed_min, x_bound=x_bound,
                            messages=messages)
