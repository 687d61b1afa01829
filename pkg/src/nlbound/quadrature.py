"""Quadrature over polar bands of the unit sphere.

A band is the set of unit vectors whose polar angle lies in ``[phi_lo, phi_hi]``
with ``0 <= phi_lo < phi_hi <= pi/2``. Directions are parameterized as

    x = (sin(phi) sin(theta), sin(phi) cos(theta), cos(phi))

with surface measure ``sin(phi) dphi dtheta``. Grids are tensor products of a
Gauss-Legendre rule in ``phi`` and a uniform periodic rule in ``theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError

HALF_PI = math.pi / 2
_ANGLE_SLACK = 1e-12
# rows per block in the pairwise chord sum; bounds peak memory at ~8 * _CHUNK * N bytes
_CHUNK = 2048


@dataclass(frozen=True)
class Band:
    """Polar band ``{x in S^2 : phi_lo <= phi(x) <= phi_hi}``."""

    phi_lo: float
    phi_hi: float

    def __post_init__(self):
        lo, hi = float(self.phi_lo), float(self.phi_hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValidationError(f"band endpoints must be finite, got ({lo}, {hi})")
        if lo < -_ANGLE_SLACK or hi > HALF_PI + _ANGLE_SLACK:
            raise ValidationError(f"band endpoints must lie in [0, pi/2], got ({lo}, {hi})")
        if not lo < hi:
            raise ValidationError(f"degenerate band: phi_lo={lo} must be < phi_hi={hi}")
        object.__setattr__(self, "phi_lo", min(max(lo, 0.0), HALF_PI))
        object.__setattr__(self, "phi_hi", min(max(hi, 0.0), HALF_PI))

    def analytic_measure(self) -> float:
        return 2 * math.pi * (math.cos(self.phi_lo) - math.cos(self.phi_hi))


@dataclass(frozen=True)
class QuadratureConfig:
    n_phi: int = 24
    n_theta: int = 48

    def __post_init__(self):
        if int(self.n_phi) < 4:
            raise ValidationError(f"n_phi must be >= 4, got {self.n_phi}")
        if int(self.n_theta) < 8:
            raise ValidationError(f"n_theta must be >= 8, got {self.n_theta}")


@dataclass(frozen=True, eq=False)
class BandGrid:
    """Quadrature nodes on a band: unit vectors ``nodes`` (N x 3) and ``weights`` (N,)."""

    band: Band
    nodes: np.ndarray
    weights: np.ndarray
    n_phi: int
    n_theta: int

    def __len__(self):
        return len(self.weights)

    @cached_property
    def measure(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def moment(self) -> np.ndarray:
        """First moment ``sum_i w_i x_i`` of the grid."""
        return self.weights @ self.nodes

    def lifted_nodes(self) -> np.ndarray:
        """Nodes mapped to the 4-vectors ``(1, x)``."""
        return np.hstack([np.ones((len(self), 1)), self.nodes])


def build_grid(band: Band, cfg: QuadratureConfig = QuadratureConfig()) -> BandGrid:
    x, w = np.polynomial.legendre.leggauss(cfg.n_phi)
    half = 0.5 * (band.phi_hi - band.phi_lo)
    phi = half * x + 0.5 * (band.phi_hi + band.phi_lo)
    w_phi = half * w * np.sin(phi)

    theta = 2 * math.pi * np.arange(cfg.n_theta) / cfg.n_theta
    w_theta = 2 * math.pi / cfg.n_theta

    P, TH = np.meshgrid(phi, theta, indexing="ij")
    sp = np.sin(P)
    nodes = np.stack([sp * np.sin(TH), sp * np.cos(TH), np.cos(P)], axis=-1).reshape(-1, 3)
    weights = np.repeat(w_phi * w_theta, cfg.n_theta)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return BandGrid(band, nodes, weights, cfg.n_phi, cfg.n_theta)


def band_measure(band: Band, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """Quadrature value of the band area; equals ``2 pi (cos lo - cos hi)``."""
    return build_grid(band, cfg).measure


def _check_matrix(M, lift: bool) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    want = (4, 4) if lift else (3, 3)
    if M.shape != want:
        raise ValidationError(
            f"matrix shape {M.shape} does not match lift={lift} (expected {want})"
        )
    return M


def bilinear_integral(M, grid_x: BandGrid, grid_y: BandGrid, lift: bool = False) -> float:
    """Double integral of ``<x, M y>`` over ``grid_x`` times ``grid_y``.

    The integrand is bilinear, so the double sum factorizes through the moment
    vectors of the two grids. With ``lift`` each node ``v`` is replaced by
    ``(1, v)`` and ``M`` must be 4 x 4.
    """
    M = _check_matrix(M, lift)
    mx, my = grid_x.moment, grid_y.moment
    if lift:
        mx = np.concatenate([[grid_x.measure], mx])
        my = np.concatenate([[grid_y.measure], my])
    return float(mx @ M @ my)


def azimuthal_frame(G: np.ndarray) -> np.ndarray:
    """Rotation about z putting the Gram matrix ``G`` in a canonical azimuthal frame.

    In the returned frame ``R``, ``(R^t G R)[0, 1] == 0``, ``[0, 0] >= [1, 1]``
    and the xz/yz coupling has a fixed sign. Rotating the input by any ``R_z``
    rotates the frame along with it, so a quadrature evaluated in this frame
    does not depend on the azimuthal orientation of the input.
    """
    psi = 0.5 * math.atan2(2 * G[0, 1], G[0, 0] - G[1, 1])
    c, s = math.cos(psi), math.sin(psi)
    xz = c * G[0, 2] + s * G[1, 2]
    yz = -s * G[0, 2] + c * G[1, 2]
    if xz < 0 or (xz == 0 and yz < 0):
        c, s = -c, -s
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _pair_norm_sum(U: np.ndarray, w: np.ndarray) -> float:
    total = 0.0
    for start in range(0, len(w), _CHUNK):
        stop = min(start + _CHUNK, len(w))
        total += float(w[start:stop] @ (cdist(U[start:stop], U) @ w))
    return total


def chord_integral(M, grid: BandGrid, lift: bool = False, affine: bool = False,
                   canonical: bool = True) -> float:
    """Double integral of ``|M (x - y)|`` with ``x, y`` both ranging over ``grid``.

    With ``lift`` the differences are of lifted vectors, so their leading
    component is zero and ``M`` acts through its last three columns. ``affine``
    (lifted only) replaces the Euclidean norm of ``u = M (x - y)`` by
    ``u[0] + |u[1:]|``.

    The exact integral is unchanged by ``M -> M R_z``. With ``canonical`` the
    grid is laid out in :func:`azimuthal_frame` of ``M^t M`` so the discrete sum
    keeps that symmetry; otherwise nodes are used as built.
    """
    M = _check_matrix(M, lift)
    if affine and not lift:
        raise ValidationError("the affine chord kernel requires lift=True")
    A = M[:, 1:] if lift else M
    w = grid.weights
    if affine:
        # sum_ij w_i w_j (u0_i - u0_j) vanishes identically; only the norm part remains
        A = A[1:]
    if canonical:
        A = A @ azimuthal_frame(A.T @ A)
    return _pair_norm_sum(grid.nodes @ A.T, w)
