"""Closed-form bounds on deformation and trajectory separation, and the
certifier that checks a simulated record against them sample by sample.

Formulas that involve the protocol take the coupled protocol kappa*phi,
so callers pass kappa*Lam, kappa*lam, kappa*sup|phi| where relevant.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import COMPLETED, alignment_rate
from .errors import HypothesisViolated, NotAdmissible
from .io import dumps_json
from .threshold import NONMONO, admissible_exponent

DEFORMATION_LOWER = "DeformationLower"
SEPARATION_LOWER_SMOOTH = "SeparationLowerSmooth"
SEPARATION_LOWER_SINGULAR = "SeparationLowerSingular"
SEPARATION_LIMINF = "SeparationLiminf"
SEPARATION_UPPER = "SeparationUpper"
CONVOLUTION_UNIFORM = "ConvolutionUniform"
EXISTENCE_TIME = "ExistenceTimeUpper"


# formula evaluators -------------------------------------------------------

def deformation_lower(t, psi0_prime, C):
    """exp(-C t) + (psi0'/C)(1 - exp(-C t)), valid while the alignment rate stays <= C."""
    psi0_prime = np.asarray(psi0_prime, dtype=float)
    if not C > 0:
        raise HypothesisViolated("rate C must be positive", clause="C")
    if np.any(psi0_prime < 0):
        raise HypothesisViolated("psi0' must be nonnegative", clause="psi0_prime")
    decay = np.exp(-C * np.asarray(t, dtype=float))
    out = decay + (psi0_prime / C) * (1.0 - decay)
    return float(out) if np.ndim(out) == 0 else out


def separation_lower_smooth(t, d0, psi_gap, K):
    """d0 exp(-K t) + (psi_gap/K)(1 - exp(-K t)) with K = kappa sup|phi| M0."""
    psi_gap = np.asarray(psi_gap, dtype=float)
    if not K > 0:
        raise HypothesisViolated("rate K must be positive", clause="K")
    if np.any(psi_gap < 0):
        raise HypothesisViolated("psi gap must be nonnegative", clause="psi_gap")
    decay = np.exp(-K * np.asarray(t, dtype=float))
    out = d0 * decay + (psi_gap / K) * (1.0 - decay)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SingularLowerBound:
    inf_bound: float
    liminf_bound: float
    increases: bool  # separation grows monotonically until it reaches liminf_bound


def _balance_radius(psi_gap, s, Lam, M0):
    # ((1 - s) psi_gap / (2^s Lam M0))^(1/(1-s))
    if psi_gap <= 0:
        return 0.0
    return ((1.0 - s) * psi_gap / (2.0 ** s * Lam * M0)) ** (1.0 / (1.0 - s))


def separation_lower_singular(d0, psi_gap, s, Lam, M0, R0):
    if not 0.0 < s < 1.0:
        raise HypothesisViolated(f"singularity order s={s} outside (0, 1)", clause="s")
    middle = _balance_radius(psi_gap, s, Lam, M0)
    liminf = min(middle, 2.0 * R0)
    return SingularLowerBound(min(d0, liminf), liminf, d0 < liminf)


def upper_radius(d0, psi_gap, s, lam, mass_ab):
    """max{d0, ((1 - s) psi_gap / (lam m([a, b])))^(1/(1-s))}."""
    return max(d0, ((1.0 - s) * psi_gap / (lam * mass_ab)) ** (1.0 / (1.0 - s)))


def separation_upper(d0, psi_gap, s, lam, mass_ab, R0):
    if not 0.0 <= s < 1.0:
        raise HypothesisViolated(f"singularity order s={s} outside [0, 1)", clause="s")
    if not mass_ab > 0:
        raise HypothesisViolated("pair must enclose positive mass", clause="mass_ab")
    if psi_gap < 0:
        raise HypothesisViolated("psi gap must be nonnegative", clause="psi_gap")
    r = upper_radius(d0, psi_gap, s, lam, mass_ab)
    if r > R0:
        clause = "d0 > R0" if d0 > R0 else "balance radius > R0"
        raise HypothesisViolated(f"upper-bound hypothesis fails: {clause}", clause=clause)
    return r


@dataclass(frozen=True)
class ConvolutionBound:
    sup_alpha_value: float
    C_analytic: float
    params: dict = field(default_factory=dict)


def _window_integral(L, s, p, ctilde):
    """int_0^L max(d^-s, ctilde^-s d^-(p s)) dd, vectorized in L."""
    L = np.asarray(L, dtype=float)
    e = p * s
    dstar = ctilde ** (-1.0 / (p - 1.0)) if p > 1 else math.inf
    head = np.minimum(L, dstar)
    out = ctilde ** (-s) * head ** (1.0 - e) / (1.0 - e)
    tail = np.maximum(L, dstar) if math.isfinite(dstar) else L
    if math.isfinite(dstar):
        out = out + (tail ** (1.0 - s) - dstar ** (1.0 - s)) / (1.0 - s) * (L > dstar)
    return out


def analytic_convolution_constant(scenario, mu, c, R1, M0=None, probes=None):
    """kappa [phi(R2) M0 + Lam sup rho0 sup_alpha int_{|alpha-g|<R1} |X_ag|^-s dg] with
    |X_ag| >= min(d, ctilde d^(mu/(1-s))).  Returns (C, params)."""
    k = scenario.kernel
    consts = k.constants()
    s = consts.s
    if not admissible_exponent(mu, s):
        raise NotAdmissible(f"mu={mu} is not in (1, (1-s)/s) for s={s}")
    if not R1 < consts.R0:
        raise HypothesisViolated("R1 must be smaller than R0", clause="R1")
    kappa = scenario.kappa
    M0 = scenario.total_mass() if M0 is None else M0
    Lam = kappa * consts.Lam
    p = mu / (1.0 - s)
    ctilde = ((1.0 - s) * c / (2.0 ** s * Lam * M0)) ** (1.0 / (1.0 - s))
    R2 = ctilde * R1 ** p
    far = kappa * float(k.phi(min(R1, R2))) * M0
    if probes is None:
        probes = np.concatenate([[iv.left, iv.right] for iv in scenario.intervals])
    probes = np.asarray(probes, dtype=float)
    total = np.zeros_like(probes)
    for iv in scenario.intervals:
        lo = np.clip(probes - iv.right, 0.0, None)  # distance to the nearer edge when outside
        near = np.where(probes < iv.left, iv.left - probes, lo)
        far_edge = np.where(probes < iv.left, iv.right - probes, probes - iv.left)
        inside = (probes >= iv.left) & (probes <= iv.right)
        w_in = (_window_integral(np.minimum(R1, probes - iv.left), s, p, ctilde)
                + _window_integral(np.minimum(R1, iv.right - probes), s, p, ctilde))
        w_out = (_window_integral(np.minimum(R1, far_edge), s, p, ctilde)
                 - _window_integral(np.minimum(R1, near), s, p, ctilde))
        total += np.where(inside, w_in, w_out)
    near_term = Lam * scenario.sup_rho0 * float(total.max())
    params = {"mu": mu, "c": c, "R1": R1, "R2": R2, "ctilde": ctilde, "s": s,
              "Lam": consts.Lam, "kappa": kappa, "M0": M0, "far_term": far,
              "near_term": near_term}
    return far + near_term, params


def convolution_bound(markers, scenario, modulus=None):
    """Measured sup_i kappa sum_j phi(X_i - X_j) m_j and its analytic ceiling."""
    k = scenario.kernel
    measured = float(np.max(alignment_rate(markers.X, markers.masses, k, scenario.kappa)))
    M0 = markers.total_mass
    if not k.singular:
        C = scenario.kappa * k.constants().sup_norm * M0
        return ConvolutionBound(measured, C, {"M0": M0})
    if modulus is None:
        raise HypothesisViolated("singular protocols need a modulus record", clause="modulus")
    mu = modulus["mu"] if isinstance(modulus, dict) else modulus.mu
    c = modulus["c"] if isinstance(modulus, dict) else modulus.c
    R1 = modulus["R1"] if isinstance(modulus, dict) else modulus.R1
    probes = np.concatenate([markers.alphas, *[[iv.left, iv.right] for iv in scenario.intervals]])
    C, params = analytic_convolution_constant(scenario, mu, c, R1, M0=M0, probes=probes)
    return ConvolutionBound(measured, C, params)


# certification ------------------------------------------------------------

@dataclass
class BoundCheck:
    kind: str
    applicable: bool
    hypothesis_checked: bool = False
    passed: bool = True
    worst_margin: float = math.inf
    worst_time: float | None = None
    params: dict = field(default_factory=dict)
    reason: str = ""

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class CertificateReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.applicable)

    def __getitem__(self, kind):
        for c in self.checks:
            if c.kind == kind:
                return c
        raise KeyError(kind)

    def to_dict(self):
        return {"passed": self.passed, "bounds": [c.to_dict() for c in self.checks]}

    def to_json(self):
        return dumps_json(self.to_dict())


def _judge(check, margins, bounds, times, cert_tol):
    """Fill worst margin/time and pass flag from per-sample margins (2D: time x item)."""
    margins = np.asarray(margins, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    tol = np.maximum(cert_tol * np.abs(bounds), 1e-12)
    ok = margins + tol >= 0
    flat = margins.reshape(len(times), -1) if margins.ndim > 1 else margins.reshape(len(times), -1)
    k = np.unravel_index(np.argmin(flat), flat.shape)
    check.worst_margin = float(flat[k])
    check.worst_time = float(times[k[0]])
    check.passed = bool(np.all(ok))
    check.hypothesis_checked = True
    return check


def _adjacent(markers):
    d0 = np.diff(markers.alphas)
    gaps = np.diff(markers.psi_discrete)
    mass_ab = markers.masses[:-1] + markers.masses[1:]
    return d0, gaps, mass_ab


def certify(record, scenario, markers, report, modulus=None, cert_tol=1e-6):
    """Check every applicable bound at every output sample of the record.

    ``markers`` are the prepared initial markers the record was started from.
    Margins are observed - bound for lower bounds and bound - observed for
    upper bounds; a check passes when no margin falls below -cert_tol*|bound|.
    """
    k = scenario.kernel
    consts = k.constants()
    kappa = scenario.kappa
    M0 = markers.total_mass
    times = np.asarray(record.times)
    seps = np.diff(record.X, axis=1)
    d0, gaps, mass_ab = _adjacent(markers)
    checks = []

    try:
        cb, cb_error = convolution_bound(markers, scenario, modulus), None
    except (HypothesisViolated, NotAdmissible) as exc:
        cb, cb_error = None, exc

    # deformation lower bound, with C from the uniform convolution bound
    chk = BoundCheck(DEFORMATION_LOWER, False)
    if cb is None:
        chk.reason = f"no convolution bound: {cb_error}"
    elif np.any(markers.psi0_prime < 0):
        chk.reason = "psi0' is negative somewhere"
    else:
        C = cb.C_analytic
        chk.applicable = True
        chk.params = {"C": C}
        lb = deformation_lower(times[:, None], markers.psi0_prime[None, :], C)
        _judge(chk, record.q - lb, lb, times, cert_tol)
    checks.append(chk)

    # smooth separation lower bound
    chk = BoundCheck(SEPARATION_LOWER_SMOOTH, False)
    sel = gaps >= 0
    if k.singular:
        chk.reason = "needs a bounded protocol"
    elif not sel.any():
        chk.reason = "no adjacent pair with nonnegative psi gap"
    else:
        K = kappa * consts.sup_norm * M0
        chk.applicable = True
        chk.params = {"K": K, "pairs": int(sel.sum())}
        lb = separation_lower_smooth(times[:, None], d0[None, sel], gaps[None, sel], K)
        _judge(chk, seps[:, sel] - lb, lb, times, cert_tol)
    checks.append(chk)

    # singular separation lower bounds
    chk = BoundCheck(SEPARATION_LOWER_SINGULAR, False)
    chk_lim = BoundCheck(SEPARATION_LIMINF, False)
    sel = gaps > 0
    if not k.singular:
        chk.reason = chk_lim.reason = "needs a weakly singular protocol"
    elif not sel.any():
        chk.reason = chk_lim.reason = "no adjacent pair with positive psi gap"
    else:
        Lam = kappa * consts.Lam
        b = [separation_lower_singular(d, g, consts.s, Lam, M0, consts.R0)
             for d, g in zip(d0[sel], gaps[sel])]
        lb = np.array([x.inf_bound for x in b])
        chk.applicable = True
        chk.params = {"s": consts.s, "Lam_kappa": Lam, "M0": M0, "R0": consts.R0,
                      "pairs": int(sel.sum())}
        _judge(chk, seps[:, sel] - lb[None, :], np.broadcast_to(lb, seps[:, sel].shape), times,
               cert_tol)
        # monotone growth until the liminf level for pairs that start below it
        grow = np.array([x.increases for x in b])
        chk_lim.applicable = True
        chk_lim.params = {"pairs_below_liminf": int(grow.sum())}
        if grow.any() and len(times) > 1:
            target = np.array([x.liminf_bound for x in b])[grow]
            S = seps[:, sel][:, grow]
            below = S[:-1] < target[None, :]
            inc = np.where(below, np.diff(S, axis=0), np.inf)
            scale = np.broadcast_to(target, inc.shape)
            _judge(chk_lim, inc, scale, times[1:], cert_tol)
        else:
            chk_lim.hypothesis_checked = True
            chk_lim.worst_margin = 0.0
    checks += [chk, chk_lim]

    # separation upper bound on pairs meeting its hypothesis
    chk = BoundCheck(SEPARATION_UPPER, False)
    lam = kappa * consts.lam
    ub, cols = [], []
    for i, (d, g, m) in enumerate(zip(d0, gaps, mass_ab)):
        try:
            ub.append(separation_upper(d, g, consts.s, lam, m, consts.R0))
            cols.append(i)
        except HypothesisViolated:
            pass
    if not cols:
        chk.reason = "no adjacent pair satisfies the upper-bound hypothesis"
    else:
        ub = np.array(ub)
        chk.applicable = True
        chk.params = {"s": consts.s, "lam_kappa": lam, "R0": consts.R0, "pairs": len(cols)}
        _judge(chk, ub[None, :] - seps[:, cols], np.broadcast_to(ub, seps[:, cols].shape), times,
               cert_tol)
    checks.append(chk)

    # uniform convolution bound
    chk = BoundCheck(CONVOLUTION_UNIFORM, False)
    if cb is None:
        chk.reason = str(cb_error)
    else:
        measured = np.array([np.max(alignment_rate(X, markers.masses, k, kappa))
                             for X in record.X])
        chk.applicable = True
        chk.params = dict(cb.params, C=cb.C_analytic)
        _judge(chk, cb.C_analytic - measured, np.full_like(measured, cb.C_analytic), times,
               cert_tol)
    checks.append(chk)

    # existence-time upper bound for non-monotone data
    chk = BoundCheck(EXISTENCE_TIME, False)
    if report.classification != NONMONO:
        chk.reason = "psi0 is monotone; no finite existence-time bound"
    else:
        bound = report.min_blowup_bound
        term = record.events[-1]
        chk.applicable = True
        chk.hypothesis_checked = True
        chk.params = {"bound": bound, "pair": report.min_bound_pair, "event": term["kind"]}
        t_star = term["time"]
        chk.worst_time = t_star
        chk.worst_margin = bound - t_star
        if term["kind"] == COMPLETED:
            # no blowup seen: consistent only if the run stopped before the bound
            chk.passed = t_star < bound
        else:
            chk.passed = chk.worst_margin >= -max(cert_tol * bound, 1e-12)
    checks.append(chk)
    return CertificateReport(checks)
