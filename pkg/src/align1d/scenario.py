"""Cauchy data (Omega, rho0, u0, kappa), Lagrangian markers, and the
two-interval counterexample configuration with its threshold gap delta0."""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy import optimize
from scipy.interpolate import CubicSpline

from .errors import (BracketFailure, InvalidGeometry, NonintegrableMass,
                     NonpositiveDensity)
from .kernel import UNBOUNDED, Kernel, quad


@dataclass(frozen=True)
class Profile:
    """A function on one interval: constant, polynomial in x, or sampled."""

    kind: str
    data: tuple

    @classmethod
    def constant(cls, value):
        return cls("constant", (float(value),))

    @classmethod
    def poly(cls, coeffs):
        return cls("poly", tuple(float(c) for c in coeffs))

    @classmethod
    def sampled(cls, xs, ys):
        return cls("sampled", (tuple(map(float, xs)), tuple(map(float, ys))))

    @classmethod
    def coerce(cls, value):
        if isinstance(value, Profile):
            return value
        if isinstance(value, dict):
            return cls.sampled(value["x"], value["y"])
        if isinstance(value, (list, tuple)):
            return cls.poly(value)
        return cls.constant(value)

    def __post_init__(self):
        if self.kind == "sampled":
            xs, ys = self.data
            if len(xs) != len(ys) or len(xs) < 4:
                raise ValueError("sampled profile needs matching x/y with at least 4 points")
            object.__setattr__(self, "_spline", CubicSpline(xs, ys))
        elif self.kind == "poly":
            object.__setattr__(self, "_poly", Polynomial(self.data))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.data[0])
        elif self.kind == "poly":
            out = self._poly(x)
        else:
            out = self._spline(x)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "poly":
            out = self._poly.deriv()(x)
        else:
            out = self._spline(x, 1)
        return float(out) if np.ndim(out) == 0 else out

    def to_config(self):
        if self.kind == "constant":
            return self.data[0]
        if self.kind == "poly":
            return list(self.data)
        return {"x": list(self.data[0]), "y": list(self.data[1])}


@dataclass(frozen=True)
class Interval:
    left: float
    right: float
    rho0: Profile
    u0: Profile

    @classmethod
    def make(cls, left, right, rho0=1.0, u0=0.0):
        return cls(float(left), float(right), Profile.coerce(rho0), Profile.coerce(u0))

    @property
    def length(self):
        return self.right - self.left


@dataclass(frozen=True)
class Scenario:
    intervals: tuple
    kernel: Kernel
    kappa: float = 1.0
    n_per_interval: int = 200
    rule: str = "midpoint"
    two_block: tuple | None = None  # (epsilon, delta) when generated by two_block_scenario
    modulus: dict | None = field(default=None, compare=False)  # {mu, R1[, c]}

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))

    def interval_of(self, x, closed=False):
        """Index of the interval containing x, or None."""
        for j, iv in enumerate(self.intervals):
            if iv.left < x < iv.right or (closed and iv.left <= x <= iv.right):
                return j
        return None

    def rho0(self, x):
        j = self.interval_of(x, closed=True)
        return 0.0 if j is None else self.intervals[j].rho0(x)

    def u0(self, x):
        j = self.interval_of(x, closed=True)
        if j is None:
            raise ValueError(f"u0 is undefined in the vacuum at x={x}")
        return self.intervals[j].u0(x)

    def total_mass(self):
        return sum(quad(iv.rho0, iv.left, iv.right) for iv in self.intervals)

    @property
    def sup_rho0(self):
        return max(float(np.max(iv.rho0(_probe(iv)))) for iv in self.intervals)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    M0: float
    M1: float


def _probe(iv, n=1025):
    # Chebyshev points cluster at the ends, where sign changes hide
    k = np.arange(n)
    c = np.cos(np.pi * (k + 0.5) / n)
    return 0.5 * (iv.left + iv.right) + 0.5 * iv.length * c


def validate(scenario):
    ivs = scenario.intervals
    if not ivs:
        raise InvalidGeometry("Omega must contain at least one interval")
    for iv in ivs:
        if not (math.isfinite(iv.left) and math.isfinite(iv.right)) or iv.right <= iv.left:
            raise InvalidGeometry(f"interval ({iv.left}, {iv.right}) is empty or unbounded")
    for a, b in zip(ivs[:-1], ivs[1:]):
        if not a.right < b.left:
            raise InvalidGeometry(
                f"intervals ({a.left}, {a.right}) and ({b.left}, {b.right}) overlap or are unordered")
    if not scenario.kappa >= 0:
        # kappa = 0 is kept as the uncoupled reference case
        raise InvalidGeometry("coupling kappa must be nonnegative")
    for iv in ivs:
        vals = iv.rho0(_probe(iv))
        if not np.all(np.isfinite(vals)):
            raise NonintegrableMass(f"rho0 is not finite on ({iv.left}, {iv.right})")
        if np.any(vals <= 0):
            raise NonpositiveDensity(f"rho0 vanishes or changes sign on ({iv.left}, {iv.right})")
    M0 = scenario.total_mass()
    M1 = sum(quad(lambda g, f=iv.rho0: g * f(g), iv.left, iv.right) for iv in ivs)
    if not (math.isfinite(M0) and M0 > 0):
        raise NonintegrableMass("total mass is not finite and positive")
    return ValidationReport(True, M0, M1)


@dataclass
class MarkerSet:
    """Lagrangian markers: fixed labels and masses plus the evolving state."""

    alphas: np.ndarray
    masses: np.ndarray
    group: np.ndarray
    rho0_vals: np.ndarray
    X: np.ndarray
    V: np.ndarray
    q: np.ndarray
    t: float = 0.0
    psi0_vals: np.ndarray | None = None
    psi0_prime: np.ndarray | None = None
    psi_discrete: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.alphas)

    def copy(self):
        def cp(a):
            return None if a is None else np.array(a, copy=True)
        return MarkerSet(cp(self.alphas), cp(self.masses), cp(self.group), cp(self.rho0_vals),
                         cp(self.X), cp(self.V), cp(self.q), self.t, cp(self.psi0_vals),
                         cp(self.psi0_prime), cp(self.psi_discrete), dict(self.extra))

    @property
    def total_mass(self):
        return float(self.masses.sum())


def _parse_rule(rule):
    rule = rule.lower()
    if rule == "midpoint":
        return 0
    if rule.startswith("gauss"):
        order = int(rule[5:] or 2)
        if order < 1:
            raise ValueError("Gauss order must be positive")
        return order
    raise ValueError(f"unknown quadrature rule {rule!r}")


def _nodes(iv, n, order):
    if order == 0:
        h = iv.length / n
        x = iv.left + h * (np.arange(n) + 0.5)
        return x, np.full(n, h)
    if n % order:
        raise ValueError(f"n_per_interval={n} is not a multiple of the Gauss order {order}")
    cells = n // order
    t, w = leggauss(order)
    h = iv.length / cells
    starts = iv.left + h * np.arange(cells)
    x = (starts[:, None] + 0.5 * h * (t[None, :] + 1.0)).ravel()
    return x, np.tile(0.5 * h * w, cells)


def discretize(scenario, n_per_interval=None, rule=None):
    validate(scenario)
    n = scenario.n_per_interval if n_per_interval is None else n_per_interval
    order = _parse_rule(scenario.rule if rule is None else rule)
    if n < 1:
        raise ValueError("n_per_interval must be positive")
    alphas, masses, group, rho, u = [], [], [], [], []
    for j, iv in enumerate(scenario.intervals):
        x, w = _nodes(iv, n, order)
        r = np.asarray(iv.rho0(x))
        alphas.append(x)
        rho.append(r)
        masses.append(w * r)
        group.append(np.full(len(x), j))
        u.append(np.asarray(iv.u0(x)))
    alphas = np.concatenate(alphas)
    V = np.concatenate(u)
    return MarkerSet(alphas=alphas, masses=np.concatenate(masses), group=np.concatenate(group),
                     rho0_vals=np.concatenate(rho), X=alphas.copy(), V=V,
                     q=np.ones_like(alphas), t=0.0)


def restrict(scenario, indices):
    """Scenario on the sub-union of the listed intervals."""
    return replace(scenario, intervals=tuple(scenario.intervals[j] for j in indices), two_block=None)


def two_block_scenario(epsilon, delta, kernel, kappa=1.0, **kw):
    """Two unit-density intervals of length 1/2 at distance 2*delta moving
    toward each other with speed epsilon."""
    if not (epsilon > 0 and delta > 0):
        raise ValueError("epsilon and delta must be positive")
    left = Interval.make(-0.5 - delta, -delta, 1.0, epsilon)
    right = Interval.make(delta, 0.5 + delta, 1.0, -epsilon)
    return Scenario((left, right), kernel, kappa, two_block=(float(epsilon), float(delta)), **kw)


def two_block_gap(epsilon, delta, kernel, kappa=1.0):
    """psi0(delta) - psi0(-delta) for the two-interval configuration."""
    from .threshold import psi0_closure
    sc = two_block_scenario(epsilon, delta, kernel, kappa)
    return psi0_closure(sc, delta) - psi0_closure(sc, -delta)


def two_block_delta0(epsilon, kernel, kappa=1.0, tol=1e-12, upper=1e3):
    """Smallest delta with a nonnegative psi0 jump across the gap.

    Returns ``UNBOUNDED`` when no delta in [tol, upper] closes the threshold.
    """
    if not (epsilon > 0 and tol > 0):
        raise ValueError("epsilon and tol must be positive")
    g = lambda d: two_block_gap(epsilon, d, kernel, kappa)
    lo_val = g(tol)
    if lo_val >= 0:
        raise BracketFailure(f"psi0 jump already nonnegative at delta={tol}; no sign change")
    if g(upper) < 0:
        return UNBOUNDED
    return optimize.bisect(g, tol, upper, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
