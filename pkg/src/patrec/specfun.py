"""Special functions needed by the basis formulas: sinc, I_nu, J_nu.

Only nonnegative orders and nonnegative real arguments arise in this
package (Kaiser-Bessel evaluation and its Fourier transform), so the
wrappers below validate the domain and otherwise defer to SciPy's
machine-precision Bessel routines.  All functions accept scalars or
numpy arrays and are pure.
"""

import numpy as np
from scipy import special

__all__ = ["sinc", "bessel_i", "bessel_j"]


def sinc(x):
    """sin(x)/x with sinc(0) = 1.  Even, bounded by 1, total on the reals."""
    # numpy's sinc is the normalized sin(pi t)/(pi t)
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def _check_domain(nu, x):
    if nu < 0:
        raise ValueError(f"Bessel order must be nonnegative, got nu={nu}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Bessel argument must be nonnegative")
    return x


def bessel_i(nu, x):
    """Modified Bessel function of the first kind I_nu(x), nu >= 0, x >= 0.

    Relative accuracy is well below 1e-12 on the range used here
    (x <= 50, nu <= 10); verified in the test suite against an
    independent power-series oracle.
    """
    x = _check_domain(nu, x)
    out = special.iv(nu, x)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x) for real order nu >= 0, x >= 0."""
    x = _check_domain(nu, x)
    out = special.jv(nu, x)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out
