"""Bipartite density matrices, operator bases, correlation matrices and state families."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-9
IMAG_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
I2 = np.eye(2, dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density operator on C^dim_a (x) C^dim_b, basis |i>_A (x) |j>_B row-major."""

    dim_a: int
    dim_b: int
    entries: np.ndarray

    def __post_init__(self):
        if int(self.dim_a) < 2 or int(self.dim_b) < 2:
            raise ValidationError(f"dimensions must be >= 2, got ({self.dim_a}, {self.dim_b})")
        n = self.dim_a * self.dim_b
        rho = np.asarray(self.entries, dtype=complex)
        if rho.shape != (n, n):
            raise ValidationError(f"entries shape {rho.shape} does not match ({n}, {n})")
        if not np.all(np.isfinite(rho)):
            raise ValidationError("entries contain non-finite values")
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERMITIAN_TOL:
            raise ValidationError(f"not Hermitian: max |rho - rho^dagger| = {herm:.3e}")
        tr = np.trace(rho)
        if abs(tr - 1) > TRACE_TOL:
            raise ValidationError(f"trace is not 1: trace = {tr.real:.15g}{tr.imag:+.3e}j")
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < PSD_TOL:
            raise ValidationError(
                f"not positive semidefinite: minimum eigenvalue = {min_eig:.6g}"
            )
        object.__setattr__(self, "entries", _frozen(rho))

    @property
    def d(self) -> int:
        if self.dim_a != self.dim_b:
            raise ValidationError(f"expected equal local dimensions, got ({self.dim_a}, {self.dim_b})")
        return self.dim_a

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.entries @ op))

    def to_json_dict(self) -> dict:
        flat = self.entries.reshape(-1)
        return {
            "dim_a": int(self.dim_a),
            "dim_b": int(self.dim_b),
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DensityMatrix":
        try:
            dim_a, dim_b = int(obj["dim_a"]), int(obj["dim_b"])
            raw = np.asarray(obj["entries"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed state object: {exc}") from None
        n = dim_a * dim_b
        if raw.shape != (n * n, 2):
            raise ValidationError(
                f"entries must be {n * n} [re, im] pairs, got array of shape {raw.shape}"
            )
        return cls(dim_a, dim_b, (raw[:, 0] + 1j * raw[:, 1]).reshape(n, n))


def load_state(path) -> DensityMatrix:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from None
    try:
        return DensityMatrix.from_json_dict(obj)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(rho.to_json_dict()))


# --- correlation matrices -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CorrelationMatrixT:
    """Two-qubit Pauli coefficients with the 1/4 normalization: t_kl = Tr(rho s_k (x) s_l)/4."""

    t: np.ndarray
    r: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.shape != (3, 3):
            raise ValidationError(f"T must be 3x3, got shape {t.shape}")
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "r", _frozen(np.asarray(self.r, dtype=float)))
        object.__setattr__(self, "s", _frozen(np.asarray(self.s, dtype=float)))

    @classmethod
    def from_t(cls, t) -> "CorrelationMatrixT":
        return cls(np.asarray(t, dtype=float), np.zeros(3), np.zeros(3))


def _real_trace(rho: DensityMatrix, op: np.ndarray, what: str) -> float:
    z = rho.expectation(op)
    if abs(z.imag) > IMAG_TOL:
        raise ValidationError(f"{what} has imaginary part {z.imag:.3e}")
    return z.real


def pauli_correlation(rho: DensityMatrix) -> CorrelationMatrixT:
    if rho.dim_a != 2 or rho.dim_b != 2:
        raise ValidationError(f"pauli_correlation needs a two-qubit state, got ({rho.dim_a}, {rho.dim_b})")
    t = np.empty((3, 3))
    for k, sk in enumerate(PAULIS):
        for l, sl in enumerate(PAULIS):
            t[k, l] = _real_trace(rho, np.kron(sk, sl), f"Tr(rho s{k+1} s{l+1})") / 4
    r = np.array([_real_trace(rho, np.kron(sk, I2), "Tr(rho s I)") / 4 for sk in PAULIS])
    s = np.array([_real_trace(rho, np.kron(I2, sl), "Tr(rho I s)") / 4 for sl in PAULIS])
    return CorrelationMatrixT(t, r, s)


@dataclass(frozen=True, eq=False)
class GammaOperators:
    """Block-Pauli observables Gamma_0..Gamma_3 on C^d."""

    d: int
    gamma0: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray

    def __iter__(self):
        return iter((self.gamma0, self.gamma1, self.gamma2, self.gamma3))

    def observable(self, a) -> np.ndarray:
        """``Gamma_0 + a1 Gamma_1 + a2 Gamma_2 + a3 Gamma_3`` for a 3-vector ``a``."""
        a1, a2, a3 = a
        return self.gamma0 + a1 * self.gamma1 + a2 * self.gamma2 + a3 * self.gamma3


def gamma_operators(d: int) -> GammaOperators:
    """Block-diagonal Pauli operators; for odd d the last row/column is spare and Gamma_0 = |d><d|."""
    d = int(d)
    if d < 2:
        raise ValidationError(f"d must be >= 2, got {d}")
    blocks = d // 2
    gs = []
    for p in PAULIS:
        g = np.zeros((d, d), dtype=complex)
        g[: 2 * blocks, : 2 * blocks] = np.kron(np.eye(blocks), p)
        gs.append(_frozen(g))
    g0 = np.zeros((d, d), dtype=complex)
    if d % 2:
        g0[d - 1, d - 1] = 1
    return GammaOperators(d, _frozen(g0), *gs)


@dataclass(frozen=True, eq=False)
class GammaCorrelation:
    d: int
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (4, 4):
            raise ValidationError(f"gamma must be 4x4, got shape {g.shape}")
        object.__setattr__(self, "gamma", _frozen(g))


def gamma_correlation(rho: DensityMatrix, ops: GammaOperators | None = None) -> GammaCorrelation:
    d = rho.d
    if ops is None:
        ops = gamma_operators(d)
    if ops.d != d:
        raise ValidationError(f"operator dimension {ops.d} does not match state dimension {d}")
    g = np.empty((4, 4))
    for i, gi in enumerate(ops):
        for j, gj in enumerate(ops):
            g[i, j] = _real_trace(rho, np.kron(gi, gj), f"Tr(rho G{i} G{j})")
    return GammaCorrelation(d, g)


# --- state families --------------------------------------------------------------------


def _check_unit_interval(name: str, x: float) -> float:
    x = float(x)
    if not 0 <= x <= 1:
        raise ValidationError(f"{name} must lie in [0, 1], got {x}")
    return x


def _projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def singlet() -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[1], psi[2] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    return psi


def max_entangled(d: int) -> np.ndarray:
    psi = np.zeros(d * d, dtype=complex)
    psi[[i * d + i for i in range(d)]] = 1 / math.sqrt(d)
    return psi


def werner(x: float) -> DensityMatrix:
    """``x |psi-><psi-| + (1 - x) I/4``."""
    x = _check_unit_interval("x", x)
    rho = x * _projector(singlet()) + (1 - x) * np.eye(4) / 4
    return DensityMatrix(2, 2, _hermitize(rho))


def bell_diagonal(p1: float, p2: float, p3: float) -> DensityMatrix:
    """``(I - p1 s1 s1 - p2 s2 s2 - p3 s3 s3) / 4``; valid inside the tetrahedron
    with vertices (-1,-1,1), (1,-1,-1), (1,1,1), (-1,1,-1)."""
    rho = np.eye(4, dtype=complex)
    for p, sig in zip((p1, p2, p3), PAULIS):
        rho -= float(p) * np.kron(sig, sig)
    return DensityMatrix(2, 2, _hermitize(rho / 4))


def isotropic(d: int, x: float) -> DensityMatrix:
    """``(1 - x)/d^2 I + x |psi+><psi+|`` with ``|psi+> = sum_i |ii> / sqrt(d)``.

    The state is entangled for ``x > (9/d - 1)/8`` (stated for reference, not computed here).
    """
    d = int(d)
    if d < 2:
        raise ValidationError(f"d must be >= 2, got {d}")
    x = _check_unit_interval("x", x)
    rho = (1 - x) * np.eye(d * d) / d**2 + x * _projector(max_entangled(d))
    return DensityMatrix(d, d, _hermitize(rho))


def sigma_mixture(alpha: float, beta: float) -> DensityMatrix:
    """Qutrit mixture ``(1 - beta) sigma + beta |psi+><psi+|`` where
    ``sigma = (I - G0)(x)(I - G0)/4 - alpha/4 sum_{k=1..3} G_k (x) G_k``."""
    ops = gamma_operators(3)
    eye = np.eye(3) - ops.gamma0
    sigma = np.kron(eye, eye) / 4
    for g in (ops.gamma1, ops.gamma2, ops.gamma3):
        sigma = sigma - float(alpha) / 4 * np.kron(g, g)
    beta = float(beta)
    rho = (1 - beta) * sigma + beta * _projector(max_entangled(3))
    return DensityMatrix(3, 3, _hermitize(rho))
