"""Exact 3x3 rational matrices and their singular-value machinery.

Matrices are stored entrywise as :class:`fractions.Fraction`, so word
products can be formed without rounding no matter how fast the entries
grow.  Floats enter only when singular values are evaluated: those are
obtained from the largest eigenvalue of the Gram matrices of ``A`` and of
its exterior square (a deterministic cyclic Jacobi iteration), combined
with the exact determinant.  That route keeps all three values accurate
to near machine precision even for badly conditioned products, which an
eigen-decomposition of ``A^T A`` alone cannot do for the small values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, PrecisionLoss, SingularInput

Rational = Fraction | int | str

_JACOBI_TOL = 1e-12  # off-diagonal mass threshold, squared entries


def _as_fraction(x: Rational) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"matrix entries must be exact rationals, got {type(x).__name__}")


@dataclass(frozen=True)
class Matrix3:
    """An exact 3x3 rational matrix with a cached float view."""

    entries: tuple[tuple[Fraction, Fraction, Fraction], ...]

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[Rational]]) -> "Matrix3":
        r = tuple(tuple(_as_fraction(x) for x in row) for row in rows)
        if len(r) != 3 or any(len(row) != 3 for row in r):
            raise ValueError("Matrix3 requires a 3x3 array of entries")
        return cls(r)

    @classmethod
    def identity(cls) -> "Matrix3":
        return cls.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]])

    @classmethod
    def diagonal(cls, a: Rational, b: Rational, c: Rational) -> "Matrix3":
        return cls.from_rows([[a, 0, 0], [0, b, 0], [0, 0, c]])

    @cached_property
    def float_view(self) -> np.ndarray:
        """Nearest-float rendering of the exact entries (read-only)."""
        m = np.array([[float(x) for x in row] for row in self.entries], dtype=float)
        m.setflags(write=False)
        return m

    @cached_property
    def det(self) -> Fraction:
        e = self.entries
        return (
            e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
            - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
        )

    @property
    def trace(self) -> Fraction:
        e = self.entries
        return e[0][0] + e[1][1] + e[2][2]

    def transpose(self) -> "Matrix3":
        e = self.entries
        return Matrix3(tuple(tuple(e[j][i] for j in range(3)) for i in range(3)))

    def inverse(self) -> "Matrix3":
        d = self.det
        if d == 0:
            raise SingularInput("matrix is exactly singular")
        e = self.entries

        def cof(i: int, j: int) -> Fraction:
            rs = [r for r in range(3) if r != i]
            cs = [c for c in range(3) if c != j]
            m = e[rs[0]][cs[0]] * e[rs[1]][cs[1]] - e[rs[0]][cs[1]] * e[rs[1]][cs[0]]
            return m if (i + j) % 2 == 0 else -m

        # adjugate transposed, divided by the determinant
        return Matrix3(tuple(tuple(cof(j, i) / d for j in range(3)) for i in range(3)))

    def __matmul__(self, other: "Matrix3") -> "Matrix3":
        return mat_mul(self, other)

    def scale(self, c: Rational) -> "Matrix3":
        c = _as_fraction(c)
        return Matrix3(tuple(tuple(c * x for x in row) for row in self.entries))

    def is_integer(self) -> bool:
        return all(x.denominator == 1 for row in self.entries for x in row)

    def to_strings(self) -> list[list[str]]:
        """Row-major ``"p/q"`` rendering used by the JSON serializers."""
        return [[str(x) for x in row] for row in self.entries]

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(str(x) for x in row) for row in self.entries) + "]"


def mat_mul(a: Matrix3, b: Matrix3) -> Matrix3:
    """Exact rational product ``a @ b``."""
    ae, be = a.entries, b.entries
    return Matrix3(
        tuple(
            tuple(sum(ae[i][k] * be[k][j] for k in range(3)) for j in range(3))
            for i in range(3)
        )
    )


_EXT_INDEX = ((0, 1), (0, 2), (1, 2))  # basis e1^e2, e1^e3, e2^e3


def exterior_square(a: Matrix3) -> Matrix3:
    """The matrix of 2x2 minors representing the induced map on 2-vectors.

    Functorial: ``exterior_square(a @ b) == exterior_square(a) @ exterior_square(b)``
    holds exactly.
    """
    e = a.entries
    rows = []
    for (i1, i2) in _EXT_INDEX:
        row = []
        for (j1, j2) in _EXT_INDEX:
            row.append(e[i1][j1] * e[i2][j2] - e[i1][j2] * e[i2][j1])
        rows.append(tuple(row))
    return Matrix3(tuple(rows))


@dataclass(frozen=True)
class SvTriple:
    """Singular values sorted ``a1 >= a2 >= a3 >= 0``."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        if not (self.a1 >= self.a2 >= self.a3 >= 0.0):
            raise ValueError(f"singular values out of order: {self}")

    def ratios(self) -> tuple[float, float]:
        """The projective contraction ratios ``(a2/a1, a3/a1)``."""
        return self.a2 / self.a1, self.a3 / self.a1


# ---------------------------------------------------------------------------
# symmetric 3x3 eigenvalues, deterministic cyclic Jacobi

def sym3_eigenvalues(s: np.ndarray) -> tuple[float, float, float]:
    """All eigenvalues of a symmetric 3x3 float matrix, sorted descending.

    Cyclic Jacobi sweeps, run until the squared off-diagonal mass drops
    below 1e-12 relative to the squared Frobenius norm.  No randomization,
    so repeated calls are bitwise identical.
    """
    a = [[float(s[i, j]) for j in range(3)] for i in range(3)]
    scale = sum(a[i][j] * a[i][j] for i in range(3) for j in range(3)) or 1.0
    for _ in range(30):
        off = a[0][1] ** 2 + a[0][2] ** 2 + a[1][2] ** 2
        if off <= _JACOBI_TOL * _JACOBI_TOL * scale:
            break
        for (p, q) in ((0, 1), (0, 2), (1, 2)):
            apq = a[p][q]
            if apq == 0.0:
                continue
            theta = (a[q][q] - a[p][p]) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
            c = 1.0 / math.sqrt(1.0 + t * t)
            sn = t * c
            for k in range(3):
                akp, akq = a[k][p], a[k][q]
                a[k][p] = c * akp - sn * akq
                a[k][q] = sn * akp + c * akq
            for k in range(3):
                apk, aqk = a[p][k], a[q][k]
                a[p][k] = c * apk - sn * aqk
                a[q][k] = sn * apk + c * aqk
            a[p][q] = a[q][p] = 0.0
    lam = sorted((a[0][0], a[1][1], a[2][2]), reverse=True)
    return lam[0], lam[1], lam[2]


def operator_norm(a: Matrix3) -> float:
    """Spectral norm, i.e. the largest singular value."""
    m = a.float_view
    lam = sym3_eigenvalues(m.T @ m)[0]
    return math.sqrt(max(lam, 0.0))


def opnorm_fast(m) -> float:
    """Spectral norm of a float 3x3 via the closed-form largest Gram eigenvalue.

    Scalar companion of :func:`opnorm_batch` for tree walks where per-node
    numpy dispatch would dominate; same trigonometric formula, so equally
    deterministic.
    """
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    # gram = m^T m
    s00 = a * a + d * d + g * g
    s11 = b * b + e * e + h * h
    s22 = c * c + f * f + i * i
    s01 = a * b + d * e + g * h
    s02 = a * c + d * f + g * i
    s12 = b * c + e * f + h * i
    q = (s00 + s11 + s22) / 3.0
    p2 = (s00 - q) ** 2 + (s11 - q) ** 2 + (s22 - q) ** 2 + 2.0 * (
        s01 * s01 + s02 * s02 + s12 * s12
    )
    p = math.sqrt(max(p2 / 6.0, 0.0))
    if p == 0.0:
        return math.sqrt(max(q, 0.0))
    b00, b11, b22 = (s00 - q) / p, (s11 - q) / p, (s22 - q) / p
    b01, b02, b12 = s01 / p, s02 / p, s12 / p
    detb = (
        b00 * (b11 * b22 - b12 * b12)
        - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02)
    )
    phi = math.acos(min(1.0, max(-1.0, detb / 2.0))) / 3.0
    lam = q + 2.0 * p * math.cos(phi)
    return math.sqrt(max(lam, 0.0))


def frobenius_bracket(a: Matrix3) -> tuple[Fraction, Fraction]:
    """Exact rational bracket ``frob^2/3 <= |A|_2^2 <= frob^2``.

    Returned as the squared endpoints so the certificate stays rational.
    """
    f2 = sum(x * x for row in a.entries for x in row)
    return f2 / 3, f2


def singular_values(a: Matrix3) -> SvTriple:
    """Singular values of ``a`` from its float view.

    ``a1`` comes from the Gram matrix of ``a``, ``a1*a2`` from the Gram
    matrix of the exterior square, and ``a3`` from the exact determinant,
    so the relative error stays near machine precision until the condition
    number approaches 1/eps.  Emits :class:`PrecisionLoss` once
    ``a1/a3 > 1e12``.
    """
    d = a.det
    if d == 0:
        raise SingularInput("singular values of an exactly singular matrix")
    a1 = operator_norm(a)
    b = operator_norm(exterior_square(a))  # = a1*a2
    a2 = b / a1
    a3 = abs(float(d)) / b
    a2 = min(a2, a1)
    a3 = min(a3, a2)
    if a1 / a3 > 1e12:
        warnings.warn(
            f"condition number {a1 / a3:.3e} exceeds 1e12", PrecisionLoss, stacklevel=2
        )
    return SvTriple(a1, a2, a3)


def svf(a: Matrix3, s: float) -> float:
    """The singular value function ``phi^s`` of the projective action.

    Branches: ``(a2/a1)^s`` on ``[0,1]``, ``(a2/a1)(a3/a1)^(s-1)`` on
    ``[1,2]`` and ``((a2*a3)/a1^2)^(s/2)`` beyond.  The exponent of the
    last branch is ``s/2`` (not ``s``) so the function stays continuous at
    ``s = 2``; the dimension formulas only evaluate ``s <= 2`` so the
    choice is unobservable there.
    """
    if s < 0:
        raise DomainError("svf requires s >= 0")
    sv = singular_values(a)
    r21, r31 = sv.ratios()
    if s <= 1.0:
        return r21 ** s
    if s <= 2.0:
        return r21 * r31 ** (s - 1.0)
    return (r21 * r31) ** (s / 2.0)


def svf_via_norms(a: Matrix3, s: float) -> float:
    """Independent evaluation of ``phi^s`` from operator norms.

    Uses ``a2/a1 = |A^2|/|A|^2`` and ``a3/a1 = |det A|/(|A| |A^2|)``
    (where ``|A^2|`` is the norm of the exterior square); on ``[1,2]``
    this is the identity ``phi^s = |A^2|^(2-s) / |A|^(1+s)`` for
    unimodular input.  Only defined for ``0 <= s <= 2``.
    """
    if not (0.0 <= s <= 2.0):
        raise DomainError("svf_via_norms is defined for s in [0, 2]")
    d = a.det
    if d == 0:
        raise SingularInput("svf_via_norms of an exactly singular matrix")
    na = operator_norm(a)
    nw = operator_norm(exterior_square(a))
    if s <= 1.0:
        return (nw / na ** 2) ** s
    return (nw / na ** 2) * (abs(float(d)) / (na * nw)) ** (s - 1.0)


# ---------------------------------------------------------------------------
# batch float kernels used by the enumeration pipelines

def ext2_batch(a: np.ndarray) -> np.ndarray:
    """Exterior squares of a ``(..., 3, 3)`` float stack."""

    def minor(i1, i2, j1, j2):
        return a[..., i1, j1] * a[..., i2, j2] - a[..., i1, j2] * a[..., i2, j1]

    rows = [
        [minor(i1, i2, j1, j2) for (j1, j2) in _EXT_INDEX]
        for (i1, i2) in _EXT_INDEX
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def sym3_max_eig_batch(s: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of a symmetric ``(..., 3, 3)`` stack.

    Closed-form trigonometric solution of the characteristic cubic.  The
    largest root is well conditioned, which is all the norm pipeline needs.
    """
    q = np.trace(s, axis1=-2, axis2=-1) / 3.0
    p1 = s[..., 0, 1] ** 2 + s[..., 0, 2] ** 2 + s[..., 1, 2] ** 2
    p2 = (
        (s[..., 0, 0] - q) ** 2
        + (s[..., 1, 1] - q) ** 2
        + (s[..., 2, 2] - q) ** 2
        + 2.0 * p1
    )
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    eye = np.zeros_like(s)
    eye[..., 0, 0] = eye[..., 1, 1] = eye[..., 2, 2] = 1.0
    safe = np.where(p == 0.0, 1.0, p)
    b = (s - q[..., None, None] * eye) / safe[..., None, None]
    detb = np.linalg.det(b)
    phi = np.arccos(np.clip(detb / 2.0, -1.0, 1.0)) / 3.0
    lam = q + 2.0 * p * np.cos(phi)
    return np.where(p == 0.0, q, lam)


def opnorm_batch(a: np.ndarray) -> np.ndarray:
    """Spectral norms of a ``(..., 3, 3)`` float stack."""
    gram = np.einsum("...ji,...jk->...ik", a, a)
    return np.sqrt(np.maximum(sym3_max_eig_batch(gram), 0.0))


def log_ratio_batch(prod: np.ndarray, prod_ext: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(log(a2/a1), log(a3/a1))`` for unimodular product stacks.

    ``prod_ext`` must be the exterior-square products maintained alongside
    ``prod`` (functoriality makes that an independent recurrence).
    """
    n1 = np.log(opnorm_batch(prod))
    n2 = np.log(opnorm_batch(prod_ext))
    return n2 - 2.0 * n1, -n2 - n1


def stack_matrices(mats: Sequence[Matrix3]) -> np.ndarray:
    """Float stack ``(k, 3, 3)`` of the given exact matrices."""
    return np.stack([m.float_view for m in mats]) if mats else np.empty((0, 3, 3))
