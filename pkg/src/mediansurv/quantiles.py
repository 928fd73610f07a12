"""Quantile kernels for the standard normal, Student t and chi-square distributions.

The inverse normal is evaluated by a rational approximation in double
precision (absolute error below 1e-10, in practice near machine precision),
since the accuracy of z quantiles dominates the accuracy of every recovered
standard error downstream.  Student t and chi-square quantiles delegate to
the scipy.special inverses of the incomplete beta/gamma functions.
"""

import math

from scipy import special

from .errors import InvalidLevelError

# Coefficients of the three rational approximations (central region, moderate
# tail, far tail) for the inverse standard normal CDF.
_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_D = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
    5.47593808499534494600e-4, 1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
    1.42151175831644588870e-7, 2.04426310338993978564e-15,
)


def _poly(coeffs, x):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def normal_quantile(p):
    """Quantile of the standard normal distribution.

    Parameters
    ----------
    p : float
        Probability in (0, 1).

    Returns
    -------
    float
        z such that Phi(z) = p.
    """
    if not 0.0 < p < 1.0:
        raise InvalidLevelError(f"normal quantile needs 0 < p < 1, got {p!r}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        x = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        x = _poly(_E, r) / _poly(_F, r)
    return -x if q < 0 else x


def t_quantile(p, df):
    """Quantile of the Student t distribution with df degrees of freedom."""
    if not 0.0 < p < 1.0:
        raise InvalidLevelError(f"t quantile needs 0 < p < 1, got {p!r}")
    if df <= 0:
        raise ValueError(f"t quantile needs df > 0, got {df!r}")
    return float(special.stdtrit(df, p))


def chi2_quantile(p, df):
    """Quantile of the chi-square distribution with df degrees of freedom."""
    if not 0.0 <= p < 1.0:
        raise InvalidLevelError(f"chi-square quantile needs 0 <= p < 1, got {p!r}")
    if df <= 0:
        raise ValueError(f"chi-square quantile needs df > 0, got {df!r}")
    if p == 0.0:
        return 0.0
    return float(special.chdtri(df, 1.0 - p))
