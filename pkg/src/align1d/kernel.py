"""Interaction protocols phi and their primitives Phi(x) = int_0^x phi.

Four closed-form families are built in (constant, exponential, rational,
truncated power law) plus a tabulated protocol interpolated monotonically
from samples.  Every family is radial and non-increasing in |x|.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .errors import InvalidKernel, QuadratureFailure, SingularityEvaluation

FORMS = ("constant", "exponential", "rational", "powerlaw", "tabulated")

UNBOUNDED = math.inf


@dataclass(frozen=True)
class KernelConstants:
    s: float
    lam: float
    Lam: float
    R0: float
    sup_norm: float
    kernel: "Kernel" = field(repr=False, compare=False)

    def l1_on(self, r=None):
        """int_0^r phi, with r defaulting to R0."""
        r = self.R0 if r is None else r
        if math.isinf(r):
            return UNBOUNDED if self.kernel.primitive(1.0) > 0 else 0.0
        return float(self.kernel.primitive(r))


@dataclass(frozen=True)
class Kernel:
    """A radial, non-increasing interaction protocol.

    ``rate`` is the decay rate a for the exponential form and the exponent
    beta for the rational form c (1 + x^2)^(-beta/2).
    """

    form: str
    coef: float = 1.0
    rate: float = 1.0
    s: float = 0.0
    r_cut: float = 1.0
    samples: tuple = ()
    r0: float | None = None
    rtol: float = 1e-12

    def __post_init__(self):
        if self.form not in FORMS:
            raise InvalidKernel(f"unknown kernel form {self.form!r}")
        if not self.coef > 0 and self.form != "tabulated":
            raise InvalidKernel("kernel coefficient must be positive")
        if self.form in ("exponential", "rational") and not self.rate > 0:
            raise InvalidKernel("rate must be positive")
        if self.form == "powerlaw":
            if not 0.0 < self.s < 1.0:
                raise InvalidKernel("power-law order s must lie in (0, 1)")
            if not self.r_cut > 0:
                raise InvalidKernel("r_cut must be positive")
        elif self.s != 0.0:
            raise InvalidKernel("s is only meaningful for the power-law form")
        if self.form == "tabulated":
            xs, ys = self._table()
            if len(xs) < 2 or xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
                raise InvalidKernel("tabulated samples need increasing x starting at 0")
            if np.any(ys < 0) or np.any(np.diff(ys) > 0):
                raise InvalidKernel("tabulated phi must be nonnegative and non-increasing")
            interp = PchipInterpolator(xs, ys, extrapolate=False)
            object.__setattr__(self, "_interp", interp)
            object.__setattr__(self, "_antider", interp.antiderivative())
        if self.r0 is not None and not self.r0 > 0:
            raise InvalidKernel("r0 must be positive")

    # constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, c=1.0, **kw):
        return cls("constant", coef=c, **kw)

    @classmethod
    def exponential(cls, c=1.0, a=1.0, **kw):
        return cls("exponential", coef=c, rate=a, **kw)

    @classmethod
    def rational(cls, c=1.0, beta=1.0, **kw):
        return cls("rational", coef=c, rate=beta, **kw)

    @classmethod
    def powerlaw(cls, s, coef=1.0, r_cut=1.0, **kw):
        return cls("powerlaw", coef=coef, s=s, r_cut=r_cut, **kw)

    @classmethod
    def tabulated(cls, xs, phis, **kw):
        samples = tuple((float(x), float(y)) for x, y in zip(xs, phis))
        return cls("tabulated", samples=samples, **kw)

    # classification -------------------------------------------------------

    @property
    def family(self):
        return "WeaklySingular" if self.form == "powerlaw" else "SmoothBounded"

    @property
    def singular(self):
        return self.form == "powerlaw"

    def _table(self):
        cached = self.__dict__.get("_arrays")
        if cached is None:
            arr = np.asarray(self.samples, dtype=float).reshape(-1, 2)
            cached = (arr[:, 0], arr[:, 1])
            object.__setattr__(self, "_arrays", cached)
        return cached

    # evaluation -----------------------------------------------------------

    def _phi_abs(self, r):
        """phi at r = |x| > 0 (r = 0 allowed for bounded forms)."""
        if self.form == "constant":
            return np.full_like(r, self.coef)
        if self.form == "exponential":
            return self.coef * np.exp(-self.rate * r)
        if self.form == "rational":
            return self.coef * (1.0 + r * r) ** (-0.5 * self.rate)
        if self.form == "powerlaw":
            with np.errstate(divide="ignore"):
                return self.coef * np.minimum(r, self.r_cut) ** (-self.s)
        xs, ys = self._table()
        return np.where(r >= xs[-1], ys[-1], self._interp(np.minimum(r, xs[-1])))

    def phi(self, x):
        """Evaluate phi(x); raises at x = 0 for singular protocols."""
        r = np.abs(np.asarray(x, dtype=float))
        if self.singular and np.any(r == 0):
            raise SingularityEvaluation("phi is singular at the origin")
        out = self._phi_abs(r)
        return float(out) if out.ndim == 0 else out

    def phi_offdiag(self, x):
        """phi(x) with the singular origin mapped to 0 instead of raising."""
        r = np.abs(np.asarray(x, dtype=float))
        if not self.singular:
            return self._phi_abs(r)
        out = np.zeros_like(r)
        nz = r > 0
        out[nz] = self._phi_abs(r[nz])
        return out

    def _phi_scaled(self, r):
        # phi(r) * r**s, bounded near 0 for the singular form
        if self.form == "powerlaw":
            return self.coef * np.where(r < self.r_cut, 1.0, (r / self.r_cut) ** self.s)
        return self._phi_abs(r)

    def primitive(self, x):
        """Phi(x) = int_0^x phi(y) dy, by closed form where available."""
        x = np.asarray(x, dtype=float)
        r = np.abs(x)
        c = self.coef
        if self.form == "constant":
            out = c * r
        elif self.form == "exponential":
            out = (c / self.rate) * -np.expm1(-self.rate * r)
        elif self.form == "rational":
            if self.rate == 2.0:
                out = c * np.arctan(r)
            elif self.rate == 1.0:
                out = c * np.arcsinh(r)
            else:
                out = c * r * special.hyp2f1(0.5, 0.5 * self.rate, 1.5, -r * r)
        elif self.form == "powerlaw":
            one_s = 1.0 - self.s
            inside = c * r ** one_s / one_s
            at_cut = c * self.r_cut ** one_s / one_s
            outside = at_cut + c * self.r_cut ** (-self.s) * (r - self.r_cut)
            out = np.where(r <= self.r_cut, inside, outside)
        else:
            xs, ys = self._table()
            rr = np.minimum(r, xs[-1])
            out = self._antider(rr) + ys[-1] * (r - rr)
        out = np.sign(x) * out
        return float(out) if out.ndim == 0 else out

    # quadrature path ------------------------------------------------------

    def _breaks(self, upper):
        # kinks of phi; pchip tables are C1 so quad copes without splitting
        pts = [self.r_cut] if self.form == "powerlaw" else []
        return [p for p in pts if 0 < p < upper]

    def integrate_against(self, g, upper, rtol=None):
        """int_0^upper phi(y) g(y) dy for upper >= 0.

        The singular part of a power-law protocol is integrated in the
        variable r = y**(1-s), in which the integrand is bounded.
        """
        rtol = self.rtol if rtol is None else rtol
        if upper <= 0:
            return 0.0
        g = g if g is not None else (lambda y: 1.0)
        total = 0.0
        lo = 0.0
        if self.singular:
            one_s = 1.0 - self.s
            top = min(upper, self.r_cut)

            def transformed(r):
                y = r ** (1.0 / one_s)
                return float(self._phi_scaled(np.asarray(y))) * g(y) / one_s

            total += quad(transformed, 0.0, top ** one_s, rtol)
            lo = top
        if upper > lo:
            pts = [p for p in self._breaks(upper) if p > lo]

            def plain(y):
                return float(self._phi_abs(np.asarray(y))) * g(y)

            edges = [lo, *pts, upper]
            for a, b in zip(edges[:-1], edges[1:]):
                total += quad(plain, a, b, rtol)
        return total

    def primitive_quad(self, x, rtol=None):
        """Phi(x) by adaptive quadrature, independent of the closed forms."""
        x = float(x)
        return math.copysign(self.integrate_against(None, abs(x), rtol), x) if x else 0.0

    # constants ------------------------------------------------------------

    def radius(self):
        if self.r0 is not None:
            return self.r0
        return {
            "constant": UNBOUNDED,
            "exponential": 1.0 / self.rate,
            "rational": 1.0,
            "powerlaw": self.r_cut,
            "tabulated": self._table()[0][-1] if self.form == "tabulated" else 1.0,
        }[self.form]

    def constants(self):
        R0 = self.radius()
        if self.singular:
            # lam |x|^-s <= phi <= Lam |x|^-s on (0, R0) requires R0 <= r_cut
            R0 = min(R0, self.r_cut)
            return KernelConstants(self.s, self.coef, self.coef, R0, UNBOUNDED, self)
        sup = float(self._phi_abs(np.asarray(0.0)))
        lam = float(self._phi_abs(np.asarray(R0)))
        return KernelConstants(0.0, lam, sup, R0, sup, self)


def kernel_constants(kernel):
    return kernel.constants()


def quad(f, a, b, rtol=1e-12, points=None, limit=400):
    """Adaptive Gauss-Kronrod quadrature that raises instead of warning."""
    if b <= a:
        return 0.0
    out = integrate.quad(f, a, b, epsabs=1e-15, epsrel=rtol, limit=limit,
                         points=points, full_output=1)
    val, err = out[0], out[1]
    if len(out) > 3 and err > 100 * max(1e-15, rtol * abs(val)):
        raise QuadratureFailure(f"quadrature on [{a}, {b}] stalled at error {err:.3e}: {out[3]}")
    return val
