import math

import mpmath
import numpy as np
import pytest

from mediansurv import chi2_quantile, normal_quantile, t_quantile
from mediansurv.errors import InvalidLevelError

mpmath.mp.dps = 40


def exact_normal_quantile(p):
    # working precision must grow with the tail, else 2p - 1 rounds to -1
    tail = min(p, 1.0 - p)
    dps = 60 + int(-2.2 * math.log10(tail))
    with mpmath.workdps(dps):
        return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def test_z_975_reference_value():
    assert normal_quantile(0.975) == pytest.approx(1.9599640, abs=1e-6)


def test_t_1_975_closed_form():
    # Student t with 1 df is Cauchy: quantile = tan(pi (p - 1/2))
    assert t_quantile(0.975, 1) == pytest.approx(12.706205, abs=1e-6)
    assert t_quantile(0.975, 1) == pytest.approx(math.tan(math.pi * 0.475), abs=1e-8)


def test_chi2_1_95_closed_form():
    # chi-square with 1 df is a squared standard normal
    assert chi2_quantile(0.95, 1) == pytest.approx(3.841459, abs=1e-6)
    assert chi2_quantile(0.95, 1) == pytest.approx(exact_normal_quantile(0.975) ** 2, abs=1e-8)


def test_inverse_normal_absolute_error_bound():
    grid = np.concatenate(
        [
            np.linspace(1e-12, 1 - 1e-12, 4001),
            10.0 ** np.arange(-300, -1, 7.0),
            1 - 10.0 ** np.arange(-15, -1, 0.5),
        ]
    )
    for p in grid:
        p = float(p)
        assert abs(normal_quantile(p) - exact_normal_quantile(p)) < 1e-10


def test_inverse_normal_symmetry():
    for p in (0.6, 0.9, 0.975, 0.999, 1 - 1e-9):
        assert normal_quantile(1 - p) == pytest.approx(-normal_quantile(p), abs=1e-13)


@pytest.mark.parametrize("p,df", [(0.975, 5), (0.9, 12), (0.6, 3), (0.025, 19), (0.95, 29)])
def test_t_quantile_against_quadrature_bisection(p, df):
    # independent oracle: bisection on the t CDF evaluated by quadrature
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))

    def cdf(x):
        return 0.5 + c * float(
            mpmath.quad(lambda u: (1 + u * u / df) ** (-(df + 1) / 2), [0, x])
        )

    lo, hi = -1000.0, 1000.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    assert t_quantile(p, df) == pytest.approx(0.5 * (lo + hi), abs=1e-8)


@pytest.mark.parametrize("p,df", [(0.975, 5), (0.025, 19), (0.95, 29), (0.5, 4)])
def test_chi2_quantile_against_quadrature_bisection(p, df):
    c = 1.0 / (2 ** (df / 2) * math.gamma(df / 2))

    def cdf(x):
        return c * float(mpmath.quad(lambda u: u ** (df / 2 - 1) * mpmath.exp(-u / 2), [0, x]))

    lo, hi = 0.0, 1000.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    assert chi2_quantile(p, df) == pytest.approx(0.5 * (lo + hi), abs=1e-8)


def test_domain_errors():
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(InvalidLevelError):
            normal_quantile(bad)
    with pytest.raises(InvalidLevelError):
        t_quantile(1.0, 3)
    with pytest.raises(ValueError):
        t_quantile(0.5, 0)
    assert chi2_quantile(0.0, 3) == 0.0
