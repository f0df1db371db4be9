"""Scalar search helpers shared by the crossing and conjugate-point scans."""

import math

from scipy.optimize import bisect

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect_sign(sign, a, b, width=1e-10):
    """Locate the sign change of ``sign`` on [a, b]; returns the midpoint of the final bracket."""
    # bisect only looks at the sign of f; xtol is a half-width bound
    return bisect(sign, a, b, xtol=width / 2.0, rtol=1e-15, maxiter=200)


def golden_min(f, a, b, width=1e-10):
    """Golden-section minimisation of a unimodal ``f`` on [a, b]."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
