"""Time integration of the marker system.

Two equivalent descriptions are available: the first-order system
X' = psi - kappa sum_j Phi(X_i - X_j) m_j driven by the conserved label
function, and the second-order alignment system
V' = kappa sum_j phi(X_i - X_j)(V_j - V_i) m_j.  The deformation q ~ dX/dalpha
rides along with either.  Runs stop at the first pair crossing or
deformation collapse.
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import RK45

from .errors import DeformationCollapse, SingularContact
from .io import dumps_json, write_trajectory_csv
from .threshold import discrete_psi

log = logging.getLogger(__name__)

PAIR_CROSSING = "PairCrossing"
COLLAPSE = "DeformationCollapse"
COMPLETED = "Completed"


@dataclass
class IntegrationConfig:
    order: str = "second"
    T: float = 1.0
    dt: float = 1e-3
    method: str = "rk4"
    stride: float = 1e-2
    cross_tol: float = 1e-10
    q_tol: float = 1e-8
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.order not in ("first", "second", "both"):
            raise ValueError(f"order must be first, second or both, not {self.order!r}")
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"method must be rk4 or rk45, not {self.method!r}")
        if not (self.T > 0 and self.dt > 0 and self.stride > 0):
            raise ValueError("T, dt and stride must be positive")
        if not (self.cross_tol > 0 and self.q_tol > 0 and self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")


# right-hand sides ---------------------------------------------------------

def _pair_weights(X, kernel):
    diff = X[:, None] - X[None, :]
    if kernel.singular:
        zero = diff == 0
        if np.count_nonzero(zero) > len(X):
            raise SingularContact("two markers coincide under a singular protocol")
    return kernel.phi_offdiag(diff)


def alignment_rate(X, masses, kernel, kappa):
    """kappa sum_j phi(X_i - X_j) m_j; the self term is kept only for bounded phi."""
    return kappa * (_pair_weights(X, kernel) @ masses)


def _first(X, psi, masses, kernel, kappa):
    return psi - kappa * (kernel.primitive(X[:, None] - X[None, :]) @ masses)


def _second(X, V, masses, kernel, kappa):
    W = _pair_weights(X, kernel)
    return kappa * (W @ (masses * V) - V * (W @ masses))


def rhs_first_order(markers, kernel, kappa):
    psi = markers.psi_discrete
    if psi is None:
        raise ValueError("markers need the discrete invariant; call threshold.prepare first")
    return _first(markers.X, psi, markers.masses, kernel, kappa)


def rhs_second_order(markers, kernel, kappa):
    return _second(markers.X, markers.V, markers.masses, kernel, kappa)


def rhs_deformation(markers, kernel, kappa, psi0_prime):
    return psi0_prime - alignment_rate(markers.X, markers.masses, kernel, kappa) * markers.q


def reconstruct_density(markers):
    if np.any(markers.q <= 0):
        raise DeformationCollapse("deformation reached zero; density is unbounded")
    return markers.rho0_vals / markers.q


# records ------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    times: np.ndarray
    X: np.ndarray
    V: np.ndarray
    q: np.ndarray
    rho: np.ndarray
    psi_drift: np.ndarray
    min_separation: np.ndarray
    events: list
    order_gap: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def terminal(self):
        return self.events[-1]

    @property
    def blew_up(self):
        return self.terminal["kind"] != COMPLETED

    def write(self, csv_path, json_path):
        with open(csv_path, "w", newline="") as fh:
            write_trajectory_csv(fh, self)
        with open(json_path, "w") as fh:
            fh.write(dumps_json({"events": self.events, "meta": self.meta}))


class _System:
    """Packs the chosen order into one state vector."""

    def __init__(self, markers, kernel, kappa, order):
        self.m = markers.masses
        self.kernel = kernel
        self.kappa = kappa
        self.order = order
        self.n = len(markers)
        self.psi = markers.psi_discrete
        self.psi_prime = markers.psi0_prime
        self.rho0 = markers.rho0_vals
        blocks = {"first": [markers.X, markers.q],
                  "second": [markers.X, markers.V, markers.q],
                  "both": [markers.X, markers.X, markers.V, markers.q]}[order]
        self.y0 = np.concatenate(blocks).astype(float)

    def split(self, y):
        n = self.n
        if self.order == "first":
            X, q = y[:n], y[n:]
            return X, None, q, X
        if self.order == "second":
            X, V, q = y[:n], y[n:2 * n], y[2 * n:]
            return X, V, q, None
        Xf, X, V, q = y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n:]
        return X, V, q, Xf

    def __call__(self, t, y):
        X, V, q, Xf = self.split(y)
        qdot = self.psi_prime - alignment_rate(X, self.m, self.kernel, self.kappa) * q
        if self.order == "first":
            return np.concatenate([_first(X, self.psi, self.m, self.kernel, self.kappa), qdot])
        acc = _second(X, V, self.m, self.kernel, self.kappa)
        if self.order == "second":
            return np.concatenate([V, acc, qdot])
        xf = _first(Xf, self.psi, self.m, self.kernel, self.kappa)
        return np.concatenate([xf, V, acc, qdot])

    def indicators(self, y, cfg):
        X, _, q, Xf = self.split(y)
        sep = np.min(np.diff(X)) if self.n > 1 else math.inf
        if Xf is not None and self.n > 1:
            sep = min(sep, np.min(np.diff(Xf)))
        return sep - cfg.cross_tol, np.min(q) - cfg.q_tol

    def sample(self, t, y):
        X, V, q, Xf = self.split(y)
        if V is None:
            V = _first(X, self.psi, self.m, self.kernel, self.kappa)
        drift = np.max(np.abs(V + self.kappa * (self.kernel.primitive(X[:, None] - X[None, :]) @ self.m)
                              - self.psi))
        with np.errstate(divide="ignore"):
            rho = self.rho0 / q
        gap = None if Xf is None or self.order == "first" else float(np.max(np.abs(Xf - X)))
        sep = float(np.min(np.diff(X))) if self.n > 1 else math.inf
        return t, X.copy(), V.copy(), q.copy(), rho, float(drift), sep, gap


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _refine(state_at, g, lo, hi, iters=200):
    """Bisect [lo, hi] for the first point where g(state) <= 0; g(lo) > 0 >= g(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(state_at(mid)) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def _event(system, t, y, cfg, underflow=False):
    X, _, q, Xf = system.split(y)
    g_sep, g_q = system.indicators(y, cfg)
    # whichever indicator is closer to firing names the event
    if g_sep <= g_q * (cfg.cross_tol / cfg.q_tol) or g_sep <= 0:
        Xs = X if Xf is None or np.min(np.diff(X)) <= np.min(np.diff(Xf)) else Xf
        i = int(np.argmin(np.diff(Xs)))
        payload = {"pair": [i, i + 1], "separation": float(Xs[i + 1] - Xs[i])}
        kind = PAIR_CROSSING
    else:
        i = int(np.argmin(q))
        payload = {"marker": i, "q": float(q[i])}
        kind = COLLAPSE
    if underflow:
        payload["step_underflow"] = True
    return {"kind": kind, "time": float(t), "payload": payload}


def integrate(markers, kernel, kappa, config=None, **overrides):
    """Advance the markers to config.T or the first blowup event."""
    cfg = config or IntegrationConfig(**overrides)
    if markers.psi_discrete is None:
        markers.psi_discrete = discrete_psi(markers, kernel, kappa)
    if markers.psi0_prime is None:
        raise ValueError("markers need psi0'; call threshold.prepare first")
    system = _System(markers, kernel, kappa, cfg.order)
    g = lambda y: min(system.indicators(y, cfg))
    samples = []
    event = None
    t0 = markers.t
    y = system.y0.copy()
    if g(y) <= 0:
        event = _event(system, t0, y, cfg)
    elif cfg.method == "rk4":
        nsteps = int(round(cfg.T / cfg.dt))
        stride = max(1, int(round(cfg.stride / cfg.dt)))
        samples.append(system.sample(t0, y))
        for k in range(1, nsteps + 1):
            t_prev = t0 + (k - 1) * cfg.dt
            y_new = _rk4_step(system, t_prev, y, cfg.dt)
            if g(y_new) <= 0:
                theta = _refine(lambda th: _rk4_step(system, t_prev, y, th * cfg.dt), g, 0.0, 1.0)
                y = _rk4_step(system, t_prev, y, theta * cfg.dt)
                t_ev = t_prev + theta * cfg.dt
                samples.append(system.sample(t_ev, y))
                event = _event(system, t_ev, y, cfg)
                break
            y = y_new
            if k % stride == 0 or k == nsteps:
                samples.append(system.sample(t0 + k * cfg.dt, y))
    else:
        t_end = t0 + cfg.T
        solver = RK45(system, t0, y, t_end, rtol=cfg.rtol, atol=cfg.atol, first_step=cfg.dt)
        grid = t0 + cfg.stride * np.arange(int(math.floor(cfg.T / cfg.stride + 1e-9)) + 1)
        if grid[-1] < t_end:
            grid = np.append(grid, t_end)
        samples.append(system.sample(t0, y))
        nxt = 1
        while solver.status == "running":
            msg = solver.step()
            if solver.status == "failed" or (solver.step_size is not None
                                             and solver.step_size < 1e-14 * cfg.T
                                             and solver.t < t_end):
                log.info("step size underflow at t=%g: %s", solver.t, msg)
                samples.append(system.sample(solver.t, solver.y))
                event = _event(system, solver.t, solver.y, cfg, underflow=True)
                break
            dense = solver.dense_output()
            if g(solver.y) <= 0:
                t_ev = _refine(dense, g, solver.t_old, solver.t)
                while nxt < len(grid) and grid[nxt] < t_ev:
                    samples.append(system.sample(grid[nxt], dense(grid[nxt])))
                    nxt += 1
                y_ev = dense(t_ev)
                samples.append(system.sample(t_ev, y_ev))
                event = _event(system, t_ev, y_ev, cfg)
                break
            while nxt < len(grid) and grid[nxt] <= solver.t:
                yk = solver.y if grid[nxt] == solver.t else dense(grid[nxt])
                samples.append(system.sample(grid[nxt], yk))
                nxt += 1
    if event is None:
        event = {"kind": COMPLETED, "time": float(samples[-1][0]), "payload": {}}
    if not samples:
        samples.append(system.sample(t0, y))
    record = _assemble(samples, [event], system, markers, kernel, kappa, cfg)
    _, Xl, Vl, ql, *_ = samples[-1]
    markers.X, markers.V, markers.q, markers.t = Xl, Vl, ql, float(samples[-1][0])
    return record


def _assemble(samples, events, system, markers, kernel, kappa, cfg):
    cols = list(zip(*samples))
    gaps = cols[7]
    return TrajectoryRecord(
        times=np.array(cols[0], dtype=float),
        X=np.array(cols[1]), V=np.array(cols[2]), q=np.array(cols[3]), rho=np.array(cols[4]),
        psi_drift=np.array(cols[5]), min_separation=np.array(cols[6]),
        order_gap=None if gaps[0] is None else np.array(gaps, dtype=float),
        events=events,
        meta={"config": asdict(cfg), "n_markers": len(markers), "kappa": kappa,
              "kernel": kernel.form,
              "psi_discretization_gap": None if markers.psi0_vals is None else
              float(np.max(np.abs(markers.psi0_vals - markers.psi_discrete)))},
    )


def load_record(csv_path, json_path):
    from .io import loads_json, read_trajectory_csv
    cols = read_trajectory_csv(csv_path)
    with open(json_path) as fh:
        side = loads_json(fh.read())
    return TrajectoryRecord(events=side["events"], meta=side.get("meta", {}), **cols)
