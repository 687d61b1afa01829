"""Reference computations that share no code with the package.

For a rotation-invariant correlation matrix the region value reduces to band
means: the bilinear term to a product of mean cosines and the chord term to a
mean chord length, whose azimuthal integral is a complete elliptic integral
of the second kind. The remaining polar integral is done adaptively.
"""

import math

from scipy import integrate, special

# max over band pairs of  mean_cos(A) mean_cos(C) + (mean_chord(A) + mean_chord(C)) / 2,
# found with scipy Nelder-Mead on the functions below (argmax a = c ~ 0.0552, b = d ~ 1.0460)
SINGLET_REGION_MAX = 1.417578070821699


def mean_cos(a, b):
    return (math.sin(b) ** 2 - math.sin(a) ** 2) / (2 * (math.cos(a) - math.cos(b)))


def mean_chord(a, b):
    """Mean |x - y| for x, y independent and uniform on the band a <= phi <= b."""
    s = 2 * math.pi * (math.cos(a) - math.cos(b))

    def inner(p1, p2):
        A = 2 - 2 * math.cos(p1) * math.cos(p2)
        B = 2 * math.sin(p1) * math.sin(p2)
        if A + B <= 0:
            return 0.0
        # int_0^{2 pi} sqrt(A - B cos t) dt = 4 sqrt(A + B) E(2B / (A + B))
        return math.sin(p1) * math.sin(p2) * 4 * math.sqrt(A + B) * special.ellipe(2 * B / (A + B))

    # symmetric in (p1, p2): integrate below the diagonal kink and double
    half, _ = integrate.dblquad(lambda p2, p1: inner(p1, p2), a, b, a, lambda p1: p1,
                                epsabs=1e-13, epsrel=1e-12)
    return 2 * math.pi * 2 * half / s**2


def singlet_region_value(a, b, c, d):
    """Two-qubit region value for T = -I/4 (the singlet)."""
    return mean_cos(a, b) * mean_cos(c, d) + 0.5 * mean_chord(a, b) + 0.5 * mean_chord(c, d)
