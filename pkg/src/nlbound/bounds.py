"""Lower bounds on the maximal Bell violation Q and the nonlocality verdict.

For a two-qubit state with correlation matrix T (1/4-normalized), and polar
bands A = Omega_a^b, C = Omega_c^d with areas s_A, s_C, the region value is

    4/(s_A s_C) |int_A int_C <x, T y>|
      + 2/s_C^2 int_C int_C |T (x - y)|
      + 2/s_A^2 int_A int_A |T^t (x - y)|

and the bound is its maximum over band pairs. The d x d version uses the 4 x 4
matrix gamma_ij = Tr(rho G_i G_j), coefficients 1, 1/2, 1/2 and sphere nodes
lifted to (1, x). Q > 1 rules out any local hidden variable model; a bound
<= 1 certifies nothing.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ValidationError
from .quadrature import (
    HALF_PI,
    Band,
    BandGrid,
    QuadratureConfig,
    bilinear_integral,
    build_grid,
    chord_integral,
)
from .states import (
    CorrelationMatrixT,
    DensityMatrix,
    GammaCorrelation,
    gamma_correlation,
    pauli_correlation,
)

log = logging.getLogger(__name__)

KernelVariant = Literal["as-written", "affine"]
VARIANTS: tuple[KernelVariant, ...] = ("as-written", "affine")


@dataclass(frozen=True)
class RegionPair:
    ab: Band
    cd: Band

    @classmethod
    def from_angles(cls, a, b, c, d) -> "RegionPair":
        return cls(Band(a, b), Band(c, d))

    def angles(self) -> tuple[float, float, float, float]:
        return (self.ab.phi_lo, self.ab.phi_hi, self.cd.phi_lo, self.cd.phi_hi)


HEMISPHERES = RegionPair(Band(0.0, HALF_PI), Band(0.0, HALF_PI))


@dataclass(frozen=True)
class SearchConfig:
    coarse_steps: int = 12
    refine_iters: int = 60
    refine_tol: float = 1e-4
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if self.coarse_steps < 4:
            raise ValidationError(f"coarse_steps must be >= 4, got {self.coarse_steps}")
        if not self.refine_tol > 0:
            raise ValidationError(f"refine_tol must be > 0, got {self.refine_tol}")
        if self.refine_iters < 0:
            raise ValidationError(f"refine_iters must be >= 0, got {self.refine_iters}")

    @classmethod
    def fast(cls) -> "SearchConfig":
        return cls(coarse_steps=8, quad=QuadratureConfig(16, 32))


@dataclass(frozen=True)
class BoundReport:
    bound: float
    best_region: RegionPair
    is_nonlocal: bool
    quad: QuadratureConfig
    search: SearchConfig
    theorem: int
    chsh: float | None = None
    kernel_variant: KernelVariant | None = None
    variant_bounds: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "bound": self.bound,
            "nonlocal": self.is_nonlocal,
            "theorem": self.theorem,
            "best_region": {
                "ab": [self.best_region.ab.phi_lo, self.best_region.ab.phi_hi],
                "cd": [self.best_region.cd.phi_lo, self.best_region.cd.phi_hi],
            },
        }
        if self.chsh is not None:
            out["chsh"] = self.chsh
        if self.kernel_variant is not None:
            out["kernel_variant"] = self.kernel_variant
        if self.variant_bounds is not None:
            out["variant_bounds"] = dict(self.variant_bounds)
        out["quad"] = {"n_phi": self.quad.n_phi, "n_theta": self.quad.n_theta}
        out["search"] = {
            "coarse_steps": self.search.coarse_steps,
            "refine_iters": self.search.refine_iters,
            "refine_tol": self.search.refine_tol,
        }
        return out


def worker_count() -> int:
    env = os.environ.get("NLB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer NLB_THREADS=%r", env)
    return max(1, min(os.cpu_count() or 1, 8))


def _t_matrix(T) -> np.ndarray:
    if isinstance(T, CorrelationMatrixT):
        return np.asarray(T.t)
    t = np.asarray(T, dtype=float)
    if t.shape != (3, 3):
        raise ValidationError(f"T must be 3x3, got shape {t.shape}")
    return t


def _gamma_matrix(gamma) -> np.ndarray:
    if isinstance(gamma, GammaCorrelation):
        return np.asarray(gamma.gamma)
    g = np.asarray(gamma, dtype=float)
    if g.shape != (4, 4):
        raise ValidationError(f"gamma must be 4x4, got shape {g.shape}")
    return g


class _Objective:
    """Region value for a fixed correlation matrix, caching per-band quantities.

    A band plays one of two roles: ``"ab"`` (first party, chord kernel with M^t)
    or ``"cd"`` (second party, chord kernel with M).
    """

    def __init__(self, M: np.ndarray, theorem: int, quad: QuadratureConfig,
                 variant: KernelVariant = "as-written"):
        if theorem not in (1, 2):
            raise ValueError(f"theorem must be 1 or 2, got {theorem}")
        if variant not in VARIANTS:
            raise ValidationError(f"unknown kernel variant {variant!r}")
        self.M = M
        self.theorem = theorem
        self.lift = theorem == 2
        self.affine = self.lift and variant == "affine"
        self.quad = quad
        self.c_bilinear, self.c_chord = (4.0, 2.0) if theorem == 1 else (1.0, 0.5)
        self._grids: dict[tuple[float, float], BandGrid] = {}
        self._chords: dict[tuple[str, float, float], float] = {}

    def grid(self, band: Band) -> BandGrid:
        key = (band.phi_lo, band.phi_hi)
        g = self._grids.get(key)
        if g is None:
            g = self._grids[key] = build_grid(band, self.quad)
        return g

    def chord(self, band: Band, role: str) -> float:
        key = (role, band.phi_lo, band.phi_hi)
        v = self._chords.get(key)
        if v is None:
            v = self._chords[key] = self._compute_chord(band, role)
        return v

    def prefetch(self, bands: list[Band], workers: int = 1) -> None:
        jobs = [(b, role) for b in bands for role in ("ab", "cd")]
        for b in bands:
            self.grid(b)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                vals = list(pool.map(lambda job: self._compute_chord(*job), jobs))
        else:
            vals = [self._compute_chord(*job) for job in jobs]
        for (b, role), v in zip(jobs, vals):
            self._chords[(role, b.phi_lo, b.phi_hi)] = v

    def _compute_chord(self, band: Band, role: str) -> float:
        M = self.M.T if role == "ab" else self.M
        return chord_integral(M, self.grid(band), self.lift, self.affine)

    def terms(self, regions: RegionPair) -> tuple[float, float, float]:
        ga, gc = self.grid(regions.ab), self.grid(regions.cd)
        sa, sc = ga.measure, gc.measure
        bil = self.c_bilinear / (sa * sc) * abs(bilinear_integral(self.M, ga, gc, self.lift))
        ch_cd = self.c_chord / sc**2 * self.chord(regions.cd, "cd")
        ch_ab = self.c_chord / sa**2 * self.chord(regions.ab, "ab")
        return bil, ch_cd, ch_ab

    def __call__(self, regions: RegionPair) -> float:
        bil, ch_cd, ch_ab = self.terms(regions)
        return bil + ch_cd + ch_ab


# --- fixed-region values ---------------------------------------------------------------


def theorem1_value(T, regions: RegionPair, quad: QuadratureConfig = QuadratureConfig()) -> float:
    return _Objective(_t_matrix(T), 1, quad)(regions)


def theorem2_value(gamma, regions: RegionPair, quad: QuadratureConfig = QuadratureConfig(),
                   variant: KernelVariant = "as-written") -> float:
    return _Objective(_gamma_matrix(gamma), 2, quad, variant)(regions)


# --- region search ---------------------------------------------------------------------


def _coarse_bands(steps: int) -> list[Band]:
    pts = [k * HALF_PI / steps for k in range(steps + 1)]
    return [Band(pts[i], pts[j]) for i in range(steps + 1) for j in range(i + 1, steps + 1)]


def _coarse_scan(obj: _Objective, cfg: SearchConfig, workers: int) -> RegionPair:
    bands = _coarse_bands(cfg.coarse_steps)
    obj.prefetch(bands, workers)
    grids = [obj.grid(b) for b in bands]
    s = np.array([g.measure for g in grids])
    mom = np.array([g.moment for g in grids])
    if obj.lift:
        mom = np.hstack([s[:, None], mom])
    ch_ab = np.array([obj.chord(b, "ab") for b in bands])
    ch_cd = np.array([obj.chord(b, "cd") for b in bands])
    values = (
        obj.c_bilinear * np.abs(mom @ obj.M @ mom.T) / np.outer(s, s)
        + (obj.c_chord * ch_cd / s**2)[None, :]
        + (obj.c_chord * ch_ab / s**2)[:, None]
    )
    # np.argmax returns the first maximum in row-major (ab-outer, cd-inner) scan order
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    return RegionPair(bands[i], bands[j])


def _refine(obj: _Objective, start: RegionPair, cfg: SearchConfig) -> tuple[RegionPair, float]:
    """Coordinate ascent over (a, b, c, d) with step halving."""
    p = list(start.angles())
    best_region, best = start, obj(start)
    step = HALF_PI / cfg.coarse_steps / 2
    for _ in range(cfg.refine_iters):
        if step < cfg.refine_tol:
            break
        improved = False
        for k in range(4):
            for sign in (1.0, -1.0):
                q = list(p)
                q[k] = min(max(q[k] + sign * step, 0.0), HALF_PI)
                if not (q[0] < q[1] and q[2] < q[3]) or q == p:
                    continue
                cand = RegionPair.from_angles(*q)
                val = obj(cand)
                if val > best:
                    p, best, best_region, improved = q, val, cand, True
                    break
        if not improved:
            step /= 2
    return best_region, best


def _maximize(obj: _Objective, cfg: SearchConfig, workers: int | None = None) -> tuple[RegionPair, float]:
    if not np.any(obj.M):
        return HEMISPHERES, 0.0
    start = _coarse_scan(obj, cfg, worker_count() if workers is None else workers)
    return _refine(obj, start, cfg)


def theorem1_max(T, cfg: SearchConfig = SearchConfig(), workers: int | None = None) -> BoundReport:
    t = _t_matrix(T)
    region, value = _maximize(_Objective(t, 1, cfg.quad), cfg, workers)
    return BoundReport(
        bound=value, best_region=region, is_nonlocal=value > 1, quad=cfg.quad, search=cfg,
        theorem=1, chsh=chsh_bound(t),
    )


def theorem2_max(gamma, cfg: SearchConfig = SearchConfig(), variant: KernelVariant = "as-written",
                 workers: int | None = None) -> BoundReport:
    g = _gamma_matrix(gamma)
    region, value = _maximize(_Objective(g, 2, cfg.quad, variant), cfg, workers)
    return BoundReport(
        bound=value, best_region=region, is_nonlocal=value > 1, quad=cfg.quad, search=cfg,
        theorem=2, kernel_variant=variant,
    )


def chsh_bound(T) -> float:
    """CHSH maximal violation normalized to classical bound 1: sqrt(tau1^2 + tau2^2) of 4 t."""
    tau = np.linalg.svd(4 * _t_matrix(T), compute_uv=False)
    return float(math.hypot(tau[0], tau[1]))


# --- finite-n oracle -------------------------------------------------------------------


def sample_band(band: Band, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. unit vectors distributed by the surface measure restricted to ``band``."""
    theta = rng.uniform(0, 2 * math.pi, n)
    cos_phi = rng.uniform(math.cos(band.phi_hi), math.cos(band.phi_lo), n)
    sin_phi = np.sqrt(1 - cos_phi**2)
    return np.stack([sin_phi * np.sin(theta), sin_phi * np.cos(theta), cos_phi], axis=1)


def _pair_sum(U: np.ndarray, affine: bool) -> float:
    """sum_{i<j} of the chord kernel applied to U_i - U_j."""
    if not affine:
        return float(pdist(U).sum())
    n = len(U)
    iu, ju = np.triu_indices(n, 1)
    lead = (U[iu, 0] - U[ju, 0]).sum()
    return float(lead + pdist(U[:, 1:]).sum())


def discrete_bell_value(M, a_dirs: np.ndarray, b_dirs: np.ndarray, theorem: int = 1,
                        variant: KernelVariant = "as-written") -> float:
    """Pre-limit Bell expression for explicit direction lists (both of length n).

    theorem 1: (4/n^2)[|sum_ij <a_i, T b_j>| + sum_{i<j}|T(b_i-b_j)| + sum_{i<j}|T^t(a_i-a_j)|]
    theorem 2: same with 1/n^2, gamma and lifted directions (1, a).
    """
    a_dirs, b_dirs = np.asarray(a_dirs, float), np.asarray(b_dirs, float)
    n = len(a_dirs)
    if len(b_dirs) != n:
        raise ValidationError("direction lists must have equal length")
    if theorem == 1:
        M = _t_matrix(M)
        coeff, affine = 4.0 / n**2, False
    else:
        M = _gamma_matrix(M)
        coeff, affine = 1.0 / n**2, variant == "affine"
        a_dirs = np.hstack([np.ones((n, 1)), a_dirs])
        b_dirs = np.hstack([np.ones((n, 1)), b_dirs])
    bil = abs(float(a_dirs.sum(0) @ M @ b_dirs.sum(0)))
    ch_b = _pair_sum(b_dirs @ M.T, affine)
    ch_a = _pair_sum(a_dirs @ M, affine)
    return coeff * (bil + ch_b + ch_a)


def finite_n_value(corr, n: int, regions: RegionPair, rng_seed: int = 0,
                   variant: KernelVariant = "as-written") -> float:
    """Discrete Bell value with ``n`` random settings per party drawn from the region bands.

    ``corr`` is a :class:`CorrelationMatrixT` (or 3x3 array) for the two-qubit
    expression, or a :class:`GammaCorrelation` (or 4x4 array) for the d x d one.
    """
    if int(n) < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    rng = np.random.default_rng(rng_seed)
    a = sample_band(regions.ab, n, rng)
    b = sample_band(regions.cd, n, rng)
    theorem = 2 if isinstance(corr, GammaCorrelation) or np.shape(corr) == (4, 4) else 1
    return discrete_bell_value(corr, a, b, theorem, variant)


# --- verdict -----------------------------------------------------------------------------


def detect_nonlocality(rho: DensityMatrix, cfg: SearchConfig = SearchConfig(),
                       kernel: str = "both", workers: int | None = None) -> BoundReport:
    """Bound on Q for ``rho``; two qubits use T, higher d uses gamma.

    With ``kernel="both"`` (d >= 3) both chord kernels are maximized and the
    larger bound is reported; ties go to the as-written kernel.
    """
    d = rho.d
    if d == 2:
        return theorem1_max(pauli_correlation(rho), cfg, workers)
    gamma = gamma_correlation(rho)
    variants = VARIANTS if kernel == "both" else (kernel,)
    reports = [theorem2_max(gamma, cfg, v, workers) for v in variants]
    best = reports[0]
    for r in reports[1:]:
        if r.bound > best.bound:
            best = r
    return BoundReport(
        bound=best.bound, best_region=best.best_region, is_nonlocal=best.is_nonlocal,
        quad=cfg.quad, search=cfg, theorem=2, kernel_variant=best.kernel_variant,
        variant_bounds={r.kernel_variant: r.bound for r in reports},
    )
