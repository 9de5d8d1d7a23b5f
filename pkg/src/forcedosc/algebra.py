"""Exact 2x2 complex kernels for rectangular-coordinate admittances.

Every device in the network is represented by a 2x2 complex matrix that maps
rectangular voltage perturbation phasors ``(V_r, V_i)`` to current perturbation
phasors ``(I_r, I_i)``.  This module holds the four real orthogonal basis
matrices used to reason about these matrices, the Hermitian-part and
eigenvalue helpers, and the quadratic "passivity transform" family.

Hermitian parts are always the *un-halved* sum ``A + A^H``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "T1",
    "T2",
    "T3",
    "T4",
    "DEF_M",
    "Frf2",
    "Role",
    "BasisDecomposition",
    "PassivityTransform",
    "Definiteness",
    "EigPair",
    "LosslessRayReport",
    "basis",
    "decompose",
    "reconstruct",
    "hermitian_part",
    "herm_eigs",
    "classify",
    "def_transform",
    "transformed_hermitian",
    "lossless_residual",
    "lossless_ray_search",
    "conjugation_negation",
    "complex_to_block",
]

T1 = np.array([[1.0, 0.0], [0.0, 1.0]])
T2 = np.array([[1.0, 0.0], [0.0, -1.0]])
T3 = np.array([[0.0, 1.0], [1.0, 0.0]])
T4 = np.array([[0.0, -1.0], [1.0, 0.0]])
_BASIS = (T1, T2, T3, T4)
for _t in _BASIS:
    _t.setflags(write=False)

#: Operational DEF weighting matrix, ``-j*T4``.
DEF_M = np.array([[0.0, 1j], [-1j, 0.0]])
DEF_M.setflags(write=False)

HERMITIAN_TOL = 1e-12
ZERO_REL_TOL = 1e-8


class Role(str, enum.Enum):
    ADMITTANCE = "admittance"
    IMPEDANCE = "impedance"
    POLAR_POWER = "polar-power"


@dataclass(frozen=True)
class Frf2:
    """A 2x2 frequency response evaluated at one angular frequency."""

    entries: np.ndarray
    omega: float
    role: Role = Role.ADMITTANCE

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=complex)
        if a.shape != (2, 2):
            raise ValueError(f"FRF must be 2x2, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("FRF entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "role", Role(self.role))

    def inverse(self) -> "Frf2":
        """Swap admittance and impedance roles by matrix inversion."""
        if self.role is Role.POLAR_POWER:
            raise ValueError("polar-power FRFs have no impedance counterpart")
        det = np.linalg.det(self.entries)
        if abs(det) < 1e-14 * max(1.0, np.abs(self.entries).max() ** 2):
            raise np.linalg.LinAlgError(f"singular FRF (det={det:.3e})")
        role = Role.IMPEDANCE if self.role is Role.ADMITTANCE else Role.ADMITTANCE
        return Frf2(np.linalg.inv(self.entries), self.omega, role)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def basis(i: int) -> np.ndarray:
    """Return basis matrix ``T_i`` for ``i`` in 1..4."""
    if i not in (1, 2, 3, 4):
        raise IndexError(f"basis index must be 1..4, got {i!r}")
    return _BASIS[i - 1]


def complex_to_block(z: complex) -> np.ndarray:
    """Real 2x2 block acting on ``(re, im)`` like multiplication by ``z``."""
    z = complex(z)
    return z.real * T1 + z.imag * T4


@dataclass(frozen=True)
class BasisDecomposition:
    """Coefficients of ``sum_i (a_i + j b_i) T_i``."""

    a: tuple[float, float, float, float]
    b: tuple[float, float, float, float]

    @property
    def complex_coefficients(self) -> np.ndarray:
        return np.asarray(self.a) + 1j * np.asarray(self.b)

    def as_dict(self) -> dict[str, float]:
        out = {f"a{i + 1}": v for i, v in enumerate(self.a)}
        out.update({f"b{i + 1}": v for i, v in enumerate(self.b)})
        return out


def decompose(y) -> BasisDecomposition:
    # The basis is orthogonal under the Frobenius product with squared norm 2.
    m = np.asarray(y, dtype=complex)
    c = [np.sum(t * m) / 2.0 for t in _BASIS]
    return BasisDecomposition(
        a=tuple(float(v.real) for v in c), b=tuple(float(v.imag) for v in c)
    )


def reconstruct(d: BasisDecomposition) -> np.ndarray:
    c = d.complex_coefficients
    return sum(ci * t for ci, t in zip(c, _BASIS))


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return a + a.conj().T


class Definiteness(str, enum.Enum):
    POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
    NEGATIVE_SEMIDEFINITE = "NegativeSemidefinite"
    INDEFINITE = "Indefinite"
    ZERO = "Zero"


@dataclass(frozen=True)
class EigPair:
    lambda1: float
    lambda2: float
    definiteness: Definiteness
    zero_tol: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        if self.lambda1 > self.lambda2:
            raise ValueError("EigPair requires lambda1 <= lambda2")

    def as_tuple(self) -> tuple[float, float]:
        return (self.lambda1, self.lambda2)


def classify(lam1: float, lam2: float, tol: float) -> Definiteness:
    small1, small2 = abs(lam1) <= tol, abs(lam2) <= tol
    if small1 and small2:
        return Definiteness.ZERO
    if lam1 >= -tol and lam2 >= -tol:
        return Definiteness.POSITIVE_SEMIDEFINITE
    if lam1 <= tol and lam2 <= tol:
        return Definiteness.NEGATIVE_SEMIDEFINITE
    return Definiteness.INDEFINITE


def herm_eigs(h, zero_tol: float | None = None) -> EigPair:
    """Closed-form eigenvalues of a 2x2 Hermitian matrix.

    ``zero_tol`` defaults to ``1e-8 * max(1, ||H||_F)``.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {h.shape}")
    scale = max(1.0, float(np.linalg.norm(h)))
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    h11, h22 = h[0, 0].real, h[1, 1].real
    mean = 0.5 * (h11 + h22)
    rad = np.hypot(0.5 * (h11 - h22), abs(h[0, 1]))
    lam1, lam2 = mean - rad, mean + rad
    tol = ZERO_REL_TOL * scale if zero_tol is None else zero_tol
    return EigPair(float(lam1), float(lam2), classify(lam1, lam2, tol), tol)


@dataclass(frozen=True)
class PassivityTransform:
    """Quadratic energy transform ``(M, beta)`` with ``Gamma = j beta T4 M^H``."""

    M: np.ndarray
    beta: float

    def __post_init__(self) -> None:
        m = np.array(self.M, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("M must be 2x2")
        if abs(np.linalg.det(m)) < 1e-14:
            raise ValueError("M must be non-singular")
        m.setflags(write=False)
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def gamma(self) -> np.ndarray:
        return (1j * self.beta * T4) @ self.M.conj().T

    def block_M(self, n: int) -> np.ndarray:
        return np.kron(np.eye(n), self.M)

    def block_gamma(self, n: int) -> np.ndarray:
        return np.kron(np.eye(n), self.gamma)

    def as_dict(self) -> dict:
        return {
            "M": [[[v.real, v.imag] for v in row] for row in self.M],
            "beta": self.beta,
        }


def def_transform(omega: float) -> PassivityTransform:
    """The DEF transform at angular frequency ``omega`` (rad/s)."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    return PassivityTransform(DEF_M, -1.0 / omega)


def transformed_hermitian(
    t: PassivityTransform, y, mode: str = "M", zero_tol: float | None = None
) -> EigPair:
    """Eigenvalues of ``MY + (MY)^H`` (``mode="M"``) or ``MY Gamma + h.c.`` (``"MG"``)."""
    if isinstance(y, Frf2):
        if y.role is not Role.ADMITTANCE:
            raise ValueError(f"expected an admittance FRF, got role {y.role.value}")
        y = y.entries
    y = np.asarray(y, dtype=complex)
    if mode == "M":
        prod = t.M @ y
    elif mode == "MG":
        prod = t.M @ y @ t.gamma
    else:
        raise ValueError(f"unknown mode {mode!r}; use 'M' or 'MG'")
    return herm_eigs(hermitian_part(prod), zero_tol)


def lossless_residual(gamma) -> np.ndarray:
    """Sum over T2..T4 of ``||T_i G + (T_i G)^H||_F``; vectorised over leading axes."""
    g = np.asarray(gamma, dtype=complex)
    total = np.zeros(g.shape[:-2])
    for t in (T2, T3, T4):
        p = t @ g
        total = total + np.linalg.norm(p + np.swapaxes(p.conj(), -1, -2), axis=(-2, -1))
    return total


def _distance_to_ray(g: np.ndarray) -> np.ndarray:
    # Ray {j*beta*T4 : beta real}; jT4 has squared Frobenius norm 2.
    d = 1j * T4
    beta = np.real(np.sum(d.conj() * g, axis=(-2, -1))) / 2.0
    return np.linalg.norm(g - beta[..., None, None] * d, axis=(-2, -1))


@dataclass(frozen=True)
class LosslessRayReport:
    samples: int
    seed: int
    rejected: int
    min_residual: float
    near_lossless: int
    max_ray_distance_near_lossless: float
    ray_residual: float
    ray_t1_eigs: tuple[float, float]
    ray_beta: float

    @property
    def holds(self) -> bool:
        return (
            self.ray_residual == 0.0
            and self.max_ray_distance_near_lossless <= 1e-6
            and np.allclose(self.ray_t1_eigs, (-2 * abs(self.ray_beta), 2 * abs(self.ray_beta)), rtol=0, atol=1e-15)
        )


def lossless_ray_search(samples: int, seed: int, *, threshold: float = 1e-6, beta: float = 0.7) -> LosslessRayReport:
    """Random search for a non-singular ``Gamma`` that makes T2..T4 lossless.

    Draws complex-Gaussian matrices normalised to unit Frobenius norm,
    rejecting near-singular draws (condition number above 1e12).  Any draw
    whose losslessness residual falls below ``threshold`` is measured
    against the ``j*beta*T4`` ray.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, 2, 2)) + 1j * rng.standard_normal((samples, 2, 2))
    g /= np.linalg.norm(g, axis=(-2, -1))[:, None, None]
    cond = np.linalg.cond(g)
    keep = cond <= 1e12
    g = g[keep]
    res = lossless_residual(g)
    near = res < threshold
    dist = _distance_to_ray(g[near])

    star = 1j * beta * T4
    ray_res = float(lossless_residual(star))
    eig = herm_eigs(hermitian_part(T1 @ star))
    return LosslessRayReport(
        samples=samples,
        seed=seed,
        rejected=int((~keep).sum()),
        min_residual=float(res.min()) if res.size else float("nan"),
        near_lossless=int(near.sum()),
        max_ray_distance_near_lossless=float(dist.max()) if dist.size else 0.0,
        ray_residual=ray_res,
        ray_t1_eigs=eig.as_tuple(),
        ray_beta=beta,
    )


def conjugation_negation(g: float, u) -> tuple[float, float]:
    """Quadratic conductance power of ``u`` and of its complex conjugate."""
    if g < 0:
        raise ValueError("conductance must be non-negative")
    u = np.asarray(u, dtype=complex)
    k = 1j * g * T4
    q = float(np.real(u.conj() @ k @ u))
    uc = u.conj()
    q_conj = float(np.real(uc.conj() @ k @ uc))
    return q, q_conj
