"""The conserved label function psi0 = u0 + kappa Phi*rho0, its derivative
e0, and the critical-threshold classification built on its monotonicity."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NotAViolation, NotMonotone, OutOfDomain
from .io import dumps_json
from .kernel import quad

STRICT = "StrictlyIncreasing"
FLAT = "MonotoneNonStrict"
NONMONO = "NonMonotone"


def _kink_points(scenario, x, a, b):
    pts = [x]
    if scenario.kernel.form == "powerlaw":
        rc = scenario.kernel.r_cut
        pts += [x - rc, x + rc]
    return sorted(p for p in pts if a < p < b)


def phi_conv(scenario, x):
    """(Phi * rho0)(x) = int_Omega Phi(x - g) rho0(g) dg, for any real x."""
    k = scenario.kernel
    total = 0.0
    for iv in scenario.intervals:
        f = lambda g, rho=iv.rho0: k.primitive(x - g) * rho(g)
        edges = [iv.left, *_kink_points(scenario, x, iv.left, iv.right), iv.right]
        for a, b in zip(edges[:-1], edges[1:]):
            total += quad(f, a, b, k.rtol)
    return total


def psi0_closure(scenario, alpha):
    """psi0 on the closure of Omega; boundary values are one-sided limits."""
    j = scenario.interval_of(alpha, closed=True)
    if j is None:
        raise OutOfDomain(f"alpha={alpha} lies in the vacuum")
    return scenario.intervals[j].u0(alpha) + scenario.kappa * phi_conv(scenario, alpha)


def psi0(scenario, alpha):
    if scenario.interval_of(alpha) is None:
        raise OutOfDomain(f"alpha={alpha} is not in Omega")
    return psi0_closure(scenario, alpha)


def phi_rho_conv(scenario, x):
    """(phi * rho0)(x); the singular point x is integrated by substitution."""
    k = scenario.kernel
    total = 0.0
    for iv in scenario.intervals:
        if iv.left <= x <= iv.right:
            total += k.integrate_against(lambda y, f=iv.rho0: f(x - y), x - iv.left)
            total += k.integrate_against(lambda y, f=iv.rho0: f(x + y), iv.right - x)
        else:
            f = lambda g, rho=iv.rho0: k.phi(x - g) * rho(g)
            edges = [iv.left, *_kink_points(scenario, x, iv.left, iv.right), iv.right]
            for a, b in zip(edges[:-1], edges[1:]):
                total += quad(f, a, b, k.rtol)
    return total


def e0_closure(scenario, alpha):
    j = scenario.interval_of(alpha, closed=True)
    if j is None:
        raise OutOfDomain(f"alpha={alpha} lies in the vacuum")
    return scenario.intervals[j].u0.derivative(alpha) + scenario.kappa * phi_rho_conv(scenario, alpha)


def e0(scenario, alpha):
    """u0'(alpha) + kappa (phi * rho0)(alpha), the slope of psi0."""
    if scenario.interval_of(alpha) is None:
        raise OutOfDomain(f"alpha={alpha} is not in Omega")
    return e0_closure(scenario, alpha)


def discrete_psi(markers, kernel, kappa):
    """V_i + kappa sum_j Phi(X_i - X_j) m_j, the invariant of the marker system."""
    diff = markers.X[:, None] - markers.X[None, :]
    return markers.V + kappa * (kernel.primitive(diff) @ markers.masses)


def prepare(scenario, markers):
    """Cache psi0, psi0' and the discrete invariant on the markers."""
    markers.psi0_vals = np.array([psi0(scenario, a) for a in markers.alphas])
    markers.psi0_prime = np.array([e0(scenario, a) for a in markers.alphas])
    markers.psi_discrete = discrete_psi(markers, scenario.kernel, scenario.kappa)
    return markers


def blowup_time_bound(alpha, beta, psi_a, psi_b):
    """Upper bound on the existence time from a pair with psi0(alpha) > psi0(beta).

    The separation obeys X_ba(t) <= (beta - alpha) - (psi_a - psi_b) t, so the
    pair collides no later than (beta - alpha) / (psi_a - psi_b).
    """
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    if not psi_a > psi_b:
        raise NotAViolation(f"psi0 does not decrease on ({alpha}, {beta})")
    return (beta - alpha) / (psi_a - psi_b)


@dataclass
class ThresholdReport:
    classification: str
    min_slope: float
    witnesses: list = field(default_factory=list)
    flat_witnesses: list = field(default_factory=list)
    min_blowup_bound: float = math.inf
    min_bound_pair: tuple | None = None
    modulus: dict | None = None

    @property
    def blowup_bounds(self):
        return [w["blowup_bound"] for w in self.witnesses]

    def to_dict(self):
        d = asdict(self)
        d["min_bound_pair"] = list(self.min_bound_pair) if self.min_bound_pair else None
        return d

    def to_json(self):
        return dumps_json(self.to_dict())


def label_grid(scenario, markers):
    """Marker labels interleaved with interval endpoints, and psi0 there."""
    labels, values = [], []
    for j, iv in enumerate(scenario.intervals):
        sel = markers.group == j
        labels += [iv.left, *markers.alphas[sel], iv.right]
        values += [psi0_closure(scenario, iv.left), *markers.psi0_vals[sel],
                   psi0_closure(scenario, iv.right)]
    return np.array(labels), np.array(values)


def classify(scenario, markers, flat_tol=1e-10):
    if markers.psi0_vals is None:
        prepare(scenario, markers)
    a, p = label_grid(scenario, markers)
    da, dp = np.diff(a), np.diff(p)
    slopes = dp / da
    down = np.flatnonzero(dp < -flat_tol * da)
    flat = np.flatnonzero(np.abs(dp) <= flat_tol * da)
    report = ThresholdReport(STRICT, float(slopes.min()))
    if down.size:
        report.classification = NONMONO
        report.witnesses = [
            {"alpha": float(a[i]), "beta": float(a[i + 1]), "psi_gap": float(-dp[i]),
             "blowup_bound": float(blowup_time_bound(a[i], a[i + 1], p[i], p[i + 1]))}
            for i in down
        ]
        # best bound over all decreasing pairs, not only neighbours
        D = a[None, :] - a[:, None]
        G = p[:, None] - p[None, :]
        ok = (D > 0) & (G > flat_tol * np.abs(D))
        ratio = np.where(ok, D / np.where(ok, G, 1.0), np.inf)
        i, k = np.unravel_index(np.argmin(ratio), ratio.shape)
        report.min_blowup_bound = float(ratio[i, k])
        report.min_bound_pair = (float(a[i]), float(a[k]))
    elif flat.size:
        report.classification = FLAT
        report.flat_witnesses = [{"alpha": float(a[i]), "beta": float(a[i + 1])} for i in flat]
    return report


@dataclass(frozen=True)
class ModulusRecord:
    mu: float
    c: float
    R1: float
    satisfied: bool
    admissible: bool


def admissible_exponent(mu, s):
    """True iff 1 < mu < (1 - s)/s (any mu > 1 when s = 0)."""
    return mu > 1 and mu * s < 1 - s


def _close_pairs(alphas, R1):
    D = alphas[None, :] - alphas[:, None]
    return D, (D > 0) & (D < R1)


def fit_modulus(markers, mu, R1, psi=None):
    """Largest c with psi_ba >= c (beta - alpha)^mu over marker pairs closer than R1."""
    psi = markers.psi0_vals if psi is None else psi
    D, close = _close_pairs(markers.alphas, R1)
    G = psi[None, :] - psi[:, None]
    if not close.any():
        return math.inf
    return float(np.min(G[close] / D[close] ** mu))


def modulus_check(markers, mu, c, R1, kernel, psi=None):
    psi = markers.psi0_vals if psi is None else psi
    D, close = _close_pairs(markers.alphas, R1)
    G = psi[None, :] - psi[:, None]
    # same ratio form as fit_modulus so a fitted c is always satisfied
    satisfied = bool(np.all(G[close] / D[close] ** mu >= c))
    return ModulusRecord(float(mu), float(c), float(R1), satisfied,
                         admissible_exponent(mu, kernel.constants().s))


@dataclass
class ExtendedData:
    """Monotone psi~ on the whole line and the vacuum velocity u~ it induces."""

    scenario: object
    bridges: list

    def psi_tilde(self, x):
        return _vectorize(self._psi_tilde_scalar, x)

    def u_tilde(self, x):
        sc = self.scenario
        return _vectorize(lambda y: self._psi_tilde_scalar(y) - sc.kappa * phi_conv(sc, y), x)

    def _psi_tilde_scalar(self, x):
        sc = self.scenario
        ivs = sc.intervals
        if sc.interval_of(x, closed=True) is not None:
            return psi0_closure(sc, x)
        if x < ivs[0].left:
            return self.bridges[0][2]
        if x > ivs[-1].right:
            return self.bridges[-1][3]
        for (lo, hi, plo, phi_, slo, shi) in self.bridges[1:-1]:
            if lo < x < hi:
                if phi_ <= plo:
                    return plo
                h = hi - lo
                t = (x - lo) / h
                h00 = (1 + 2 * t) * (1 - t) ** 2
                h10 = t * (1 - t) ** 2
                h01 = t * t * (3 - 2 * t)
                h11 = t * t * (t - 1)
                return h00 * plo + h10 * h * slo + h01 * phi_ + h11 * h * shi
        raise AssertionError("unreachable")


def _vectorize(f, x):
    arr = np.asarray(x, dtype=float)
    out = np.array([f(v) for v in arr.ravel()]).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def monotone_extension(scenario, markers, report=None):
    report = classify(scenario, markers) if report is None else report
    if report.classification == NONMONO:
        raise NotMonotone("psi0 is not monotone on Omega; no monotone extension exists")
    ivs = scenario.intervals
    lo_val = psi0_closure(scenario, ivs[0].left)
    hi_val = psi0_closure(scenario, ivs[-1].right)
    bridges = [(-math.inf, ivs[0].left, lo_val, lo_val, 0.0, 0.0)]
    for a, b in zip(ivs[:-1], ivs[1:]):
        plo, phi_ = psi0_closure(scenario, a.right), psi0_closure(scenario, b.left)
        slo = max(e0_closure(scenario, a.right), 0.0)
        shi = max(e0_closure(scenario, b.left), 0.0)
        if phi_ > plo:
            # Fritsch-Carlson limiter keeps the cubic monotone
            secant = (phi_ - plo) / (b.left - a.right)
            ra, rb = slo / secant, shi / secant
            if ra * ra + rb * rb > 9.0:
                tau = 3.0 / math.hypot(ra, rb)
                slo, shi = tau * slo, tau * shi
        bridges.append((a.right, b.left, plo, phi_, slo, shi))
    bridges.append((ivs[-1].right, math.inf, hi_val, hi_val, 0.0, 0.0))
    return ExtendedData(scenario, bridges)
