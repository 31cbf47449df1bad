"""Integration of the law of motion and conserved-quantity drift.

The motion equation is second order: the chart acceleration equals the
quadratic velocity polynomial of the second-order connection.  Time is
integrated as a state variable with unit rate so time-dependent
coefficient fields need no special casing.  The integrator is classical
fixed-step RK4; drift measurements are deterministic for a given step.
"""

from dataclasses import dataclass

import numpy as np

from .duals import value


class IntegrationError(RuntimeError):
    """State became non-finite during integration."""


@dataclass
class Trajectory:
    """Uniformly sampled solution (t_k, x_k, v_k)."""

    t: np.ndarray
    x: np.ndarray  # shape (steps+1, n)
    v: np.ndarray
    h: float
    integrator: str = "rk4"

    def phase_coords(self, k):
        return [self.t[k], *self.x[k], *self.v[k]]

    def __len__(self):
        return len(self.t)


def law_of_motion_rhs(dyn, xs):
    """Chart acceleration prescribed by the second-order connection."""
    return [value(a) for a in dyn.gamma00_values(list(xs))]


def integrate(dyn, p0, T, h):
    """Fixed-step RK4 for the first-order system (t, x, v).

    ``p0`` is a PhasePoint or a coordinate list (t, x..., v...).
    """
    if h <= 0 or T <= 0:
        raise ValueError("need positive horizon and step")
    n = dyn.chart.n
    xs0 = p0.coords() if hasattr(p0, "coords") else list(p0)
    steps = int(round(T / h))

    def rhs(state):
        t = state[0]
        x = state[1 : n + 1]
        v = state[n + 1 :]
        acc = law_of_motion_rhs(dyn, [t, *x, *v])
        return np.concatenate(([1.0], v, acc))

    state = np.array(xs0, dtype=float)
    ts = np.empty(steps + 1)
    xs = np.empty((steps + 1, n))
    vs = np.empty((steps + 1, n))
    ts[0], xs[0], vs[0] = state[0], state[1 : n + 1], state[n + 1 :]
    for k in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"non-finite state at step {k + 1}")
        ts[k + 1] = state[0]
        xs[k + 1] = state[1 : n + 1]
        vs[k + 1] = state[n + 1 :]
    return Trajectory(ts, xs, vs, h)


def conserved_drift(fn, traj, dyn=None):
    """Max drift of a phase function along a trajectory, and (when the
    connection is supplied) the max of its derivative along the motion
    direction, which is integration-independent."""
    vals = [value(fn(traj.phase_coords(k))) for k in range(len(traj))]
    drift = max(abs(v - vals[0]) for v in vals)
    residual = None
    if dyn is not None:
        from .symmetry import gamma_dot

        residual = max(
            abs(value(gamma_dot(fn, dyn, traj.phase_coords(k))))
            for k in range(0, len(traj), max(1, len(traj) // 64))
        )
    return drift, residual


def convergence_order(dyn, p0, T, exact_fn, hs):
    """Empirical order fit: log2 error ratios against an analytic solution.

    ``exact_fn(t)`` returns the exact (x, v) arrays at time t.
    """
    errs = []
    for h in hs:
        traj = integrate(dyn, p0, T, h)
        xe, ve = exact_fn(traj.t[-1])
        errs.append(
            max(
                np.max(np.abs(traj.x[-1] - np.asarray(xe))),
                np.max(np.abs(traj.v[-1] - np.asarray(ve))),
            )
        )
    orders = [
        np.log(errs[i] / errs[i + 1]) / np.log(hs[i] / hs[i + 1])
        for i in range(len(hs) - 1)
    ]
    return errs, orders
