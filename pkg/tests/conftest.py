import numpy as np
import pytest

from align1d import Interval, Kernel, Profile, Scenario, discretize, two_block_scenario, prepare


def sin_profile(amp=0.1, npts=401):
    x = np.linspace(0.0, 1.0, npts)
    return Profile.sampled(x, amp * np.sin(2 * np.pi * x))


def unit_scenario(kernel=None, u0=0.0, rho0=1.0, kappa=1.0, n=200, **kw):
    kernel = Kernel.constant(1.0) if kernel is None else kernel
    return Scenario((Interval.make(0.0, 1.0, rho0, u0),), kernel, kappa, n_per_interval=n, **kw)


def prepared(scenario, n=None):
    markers = discretize(scenario, n_per_interval=n)
    return prepare(scenario, markers)


def singular_fixture(n=100):
    """Unit interval, power-law kernel s=1/4, psi0 = (a - 1/2)|a - 1/2| / 2."""
    s = 0.25
    x = np.linspace(0.0, 1.0, 2001)
    F = (x ** (2 - s) - (1 - x) ** (2 - s)) / ((1 - s) * (2 - s))
    target = 0.5 * (x - 0.5) * np.abs(x - 0.5)
    sc = unit_scenario(Kernel.powerlaw(s, 1.0, 1.0), u0=Profile.sampled(x, target - F), n=n)
    return sc


@pytest.fixture
def const_kernel():
    return Kernel.constant(1.0)


@pytest.fixture
def two_block_blowup(const_kernel):
    return two_block_scenario(0.1, 0.05, const_kernel, 1.0, n_per_interval=50)


@pytest.fixture
def two_block_smooth(const_kernel):
    return two_block_scenario(0.1, 0.15, const_kernel, 1.0, n_per_interval=50)


@pytest.fixture
def sin_scenario():
    return unit_scenario(u0=sin_profile(), n=100)


def dichotomy_suite():
    """Twenty bounded-kernel scenarios on both sides of the threshold."""
    C, E, R = Kernel.constant(), Kernel.exponential(1.0, 1.0), Kernel.rational(1.0, 2.0)
    xs = np.linspace(0.0, 10.0, 2001)
    tab = Kernel.tabulated(xs, np.exp(-xs))

    def one(k, u0, kappa=1.0, rho0=1.0):
        return unit_scenario(k, u0=u0, rho0=rho0, kappa=kappa, n=50)

    def hk(eps, delta, k, kappa=1.0):
        # markers sit h/2 inside each edge; keep h well below the gap
        return two_block_scenario(eps, delta, k, kappa, n_per_interval=200)

    def blocks(ivs, k):
        return Scenario(tuple(Interval.make(*iv) for iv in ivs), k, 1.0, n_per_interval=40)

    return {
        "gap-const": hk(0.1, 0.05, C),
        "gap-const-fast": hk(0.2, 0.1, C),
        "gap-exp": hk(0.1, 0.05, E),
        "gap-rational": hk(0.3, 0.1, R),
        "gap-const-strong": hk(0.1, 0.02, C, 2.0),
        "compress-const": one(C, [0.0, -2.0]),
        "compress-exp": one(E, [0.0, -3.0], 0.5),
        "compress-rational-cubic": one(R, [0.5, -2.0, 0.0, 0.5]),
        "three-blocks": blocks([(0, 1, 1.0, 0.3), (1.1, 1.5, 2.0, 0.0), (1.6, 2.0, 1.0, -0.4)], E),
        "gap-exp-strong": hk(0.5, 0.1, E, 2.0),
        "rest-const": one(C, 0.0),
        "sin-const": one(C, sin_profile()),
        "expand-exp": one(E, [0.0, 0.5]),
        "mild-compress-rational": one(Kernel.rational(1.0, 1.0), [0.0, -0.5]),
        "gap-const-wide": hk(0.1, 0.15, C),
        "gap-exp-wide": hk(0.1, 0.3, E),
        "gap-rational-strong": hk(0.1, 0.2, R, 2.0),
        "two-blocks-density": blocks([(0, 1, [1.0, 1.0], 0.1), (1.3, 2.0, 0.5, 0.1)], R),
        "strong-coupling": one(C, [0.0, -2.0], 3.0),
        "tabulated": one(tab, [0.0, 0.3]),
    }
