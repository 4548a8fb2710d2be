"""Scalar special functions shared by the library and the compiled chain engine.

Everything here is written in the numba-compatible subset of Python (floats and
the ``math`` module only) and compiled with ``nogil``, so the reference step
functions in :mod:`cmhgibbs.sampler` and the fast loops in
:mod:`cmhgibbs.engine` run the exact same machine code.
"""

from __future__ import annotations

import math

import numba

jit = numba.njit(cache=True, nogil=True)

SQRT2 = math.sqrt(2.0)
GAMMA_EPS = 1e-16
GAMMA_MAX_ITER = 100000
NCX2_TAIL_TOL = 1e-12
_TINY = 1e-300


@jit
def norm_cdf(z):
    return 0.5 * math.erfc(-z / SQRT2)


@jit
def norm_sf(z):
    return 0.5 * math.erfc(z / SQRT2)


@jit
def norm_ppf(p):
    """Standard normal quantile, Wichura's AS241 (relative error ~1e-16)."""
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e+3 * r +
                     3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r +
                     4.5921953931549871457e+4) * r +
                     1.3731693765509461125e+4) * r +
                     1.9715909503065514427e+3) * r +
                     1.3314166789178437745e+2) * r +
                     3.3871328727963666080e+0) * q
        den = (((((((5.2264952788528545610e+3 * r +
                     2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r +
                     2.1213794301586595867e+4) * r +
                     5.3941960214247511077e+3) * r +
                     6.8718700749205790830e+2) * r +
                     4.2313330701600911252e+1) * r +
                     1.0)
        return num / den
    r = p if q <= 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r +
                     2.27238449892691845833e-2) * r +
                     2.41780725177450611770e-1) * r +
                     1.27045825245236838258e+0) * r +
                     3.64784832476320460504e+0) * r +
                     5.76949722146069140550e+0) * r +
                     4.63033784615654529590e+0) * r +
                     1.42343711074968357734e+0)
        den = (((((((1.05075007164441684324e-9 * r +
                     5.47593808499534494600e-4) * r +
                     1.51986665636164571966e-2) * r +
                     1.48103976427480074590e-1) * r +
                     6.89767334985100004550e-1) * r +
                     1.67638483018380384940e+0) * r +
                     2.05319162663775882187e+0) * r +
                     1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r +
                     2.71155556874348757815e-5) * r +
                     1.24266094738807843860e-3) * r +
                     2.65321895265761230930e-2) * r +
                     2.96560571828504891230e-1) * r +
                     1.78482653991729133580e+0) * r +
                     5.46378491116411436990e+0) * r +
                     6.65790464350110377720e+0)
        den = (((((((2.04426310338993978564e-15 * r +
                     1.42151175831644588870e-7) * r +
                     1.84631831751005468180e-5) * r +
                     7.86869131145613259100e-4) * r +
                     1.48753612908506148525e-2) * r +
                     1.36929880922735805310e-1) * r +
                     5.99832206555887937690e-1) * r +
                     1.0)
    x = num / den
    if q < 0.0:
        x = -x
    return x


@jit
def _gamma_series(a, x):
    # P(a, x) for x < a + 1
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


@jit
def _gamma_contfrac(a, x):
    # Q(a, x) for x >= a + 1, modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, GAMMA_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


@jit
def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0.0:
        return 0.0
    if x == math.inf:
        return 1.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_contfrac(a, x)


@jit
def gammainc_upper(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if x <= 0.0:
        return 1.0
    if x == math.inf:
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_contfrac(a, x)


@jit
def chi2_cdf(k, x):
    return gammainc_lower(0.5 * k, 0.5 * x)


@jit
def ncx2_cdf(k, delta, x):
    """CDF of the noncentral chi-square with ``k`` dof and noncentrality ``delta``.

    Poisson(delta/2) mixture of central chi-square CDFs, summed outward from
    the Poisson mode. Each direction stops once a geometric bound on the
    remaining Poisson weight drops below ``NCX2_TAIL_TOL / 2``, and central
    CDFs never exceed one, so the absolute truncation error is below
    ``NCX2_TAIL_TOL``. The starting weight comes from logs and carries a
    relative rounding error that every later weight inherits; dividing by
    the summed weights cancels it.
    """
    if x <= 0.0:
        return 0.0
    lam = 0.5 * delta
    if lam == 0.0:
        return chi2_cdf(k, x)
    half_x = 0.5 * x
    j0 = int(math.floor(lam))
    log_w0 = -lam + j0 * math.log(lam) - math.lgamma(j0 + 1.0)
    w0 = math.exp(log_w0)
    total = w0 * gammainc_lower(0.5 * k + j0, half_x)
    wsum = w0

    # upward: w_{j+1} = w_j * lam / (j + 1)
    w = w0
    j = j0
    while True:
        j += 1
        w *= lam / j
        wsum += w
        total += w * gammainc_lower(0.5 * k + j, half_x)
        r = lam / (j + 1.0)
        if r < 1.0 and w * r / (1.0 - r) < 0.5 * NCX2_TAIL_TOL:
            break

    # downward: w_{j-1} = w_j * j / lam
    w = w0
    j = j0
    while j > 0:
        w *= j / lam
        j -= 1
        wsum += w
        total += w * gammainc_lower(0.5 * k + j, half_x)
        r = j / lam
        if r < 1.0 and w * r / (1.0 - r) < 0.5 * NCX2_TAIL_TOL:
            break
    total /= wsum
    if total > 1.0:
        total = 1.0
    return total


@jit
def gauss_interval_mass(mean, sd, lo, hi):
    if hi <= lo:
        return 0.0
    zl = (lo - mean) / sd
    zh = (hi - mean) / sd
    # difference taken on the tail nearer zero to limit cancellation
    if zl > 0.0:
        return norm_sf(zl) - norm_sf(zh)
    return norm_cdf(zh) - norm_cdf(zl)


@jit
def gamma_interval_mass(shape, rate, lo, hi):
    if lo < 0.0:
        lo = 0.0
    if hi <= lo:
        return 0.0
    if rate * lo > shape:
        return gammainc_upper(shape, rate * lo) - gammainc_upper(shape, rate * hi)
    return gammainc_lower(shape, rate * hi) - gammainc_lower(shape, rate * lo)


@jit
def unit_interval_mass(lo, hi):
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    if hi <= lo:
        return 0.0
    return hi - lo


@jit
def fixed_density_halfwidth(mean, sd, center, q):
    """Half-width ``d`` with Gaussian mass of ``[center - d, center + d]`` equal to ``q``.

    Bisection on ``d``; the mass is increasing in ``d`` so the bracket is
    grown geometrically until it straddles ``q``.
    """
    lo = 0.0
    hi = sd
    while gauss_interval_mass(mean, sd, center - hi, center + hi) < q:
        lo = hi
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = gauss_interval_mass(mean, sd, center - mid, center + mid) - q
        if f < 0.0:
            lo = mid
        else:
            hi = mid
        if abs(f) <= 1e-13 or hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


@jit
def acceptance_ratio(mass_current, mass_proposal):
    ratio = (1.0 - mass_current) / (1.0 - mass_proposal)
    if ratio > 1.0:
        return 1.0
    return ratio
