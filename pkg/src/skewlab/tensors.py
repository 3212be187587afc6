"""Dense multilinear algebra on small model spaces.

Conventions used throughout the package:

* Tensors are dense numpy arrays; a tensor of valence (r, s) has r
  contravariant axes first, then s covariant axes.  Dimensions stay small
  (at most 14), so nothing here is sparse or lazy.
* Norms are tensorial: ``|T|^2`` sums ``|T(e_{i_1}, ..., e_{i_k})|^2`` over
  full orthonormal frame tuples.  For a p-form this is p! times the value
  obtained by summing the squares of the strictly increasing coefficients
  only; the factor matters when comparing against sources that use the
  geometer's normalization.
* The wedge product uses the determinant convention (full shuffle
  alternation, no 1/k! in front), so ``|e1 ^ e2|^2 == 2`` for orthonormal
  covectors e1, e2.
* The real model space R^{4n+2} is identified with C^{2n+1} by interleaving
  coordinates (x1, y1, x2, y2, ...) with J(x_k) = y_k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError

# Relative SVD cutoff used for every rank / kernel decision in the package.
SVD_RTOL = 1e-9


@dataclass(frozen=True)
class DenseTensor:
    """A dense tensor of valence (r, s) on a d-dimensional space.

    ``a`` holds the components with contravariant axes first.  Instances are
    immutable; operations return new tensors.
    """

    a: np.ndarray
    r: int = 0
    s: int = 0

    def __post_init__(self):
        arr = np.asarray(self.a)
        if arr.ndim != self.r + self.s:
            raise ShapeError(
                f"array has {arr.ndim} axes, valence ({self.r},{self.s}) needs {self.r + self.s}"
            )
        if arr.ndim > 0 and len(set(arr.shape)) > 1:
            raise ShapeError(f"all axes must share one dimension, got shape {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def dim(self) -> int:
        return self.a.shape[0] if self.a.ndim else 0

    @property
    def k(self) -> int:
        return self.r + self.s

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.a)

    def conj(self) -> "DenseTensor":
        return DenseTensor(np.conj(self.a), self.r, self.s)

    def real_part(self) -> "DenseTensor":
        return DenseTensor(self.a.real.copy(), self.r, self.s)

    def __add__(self, other: "DenseTensor") -> "DenseTensor":
        self._check_same(other)
        return DenseTensor(self.a + other.a, self.r, self.s)

    def __sub__(self, other: "DenseTensor") -> "DenseTensor":
        self._check_same(other)
        return DenseTensor(self.a - other.a, self.r, self.s)

    def __mul__(self, c) -> "DenseTensor":
        return DenseTensor(self.a * c, self.r, self.s)

    __rmul__ = __mul__

    def _check_same(self, other: "DenseTensor"):
        if (self.r, self.s) != (other.r, other.s) or self.a.shape != other.a.shape:
            raise ShapeError("tensor valences/shapes do not match")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.a))) if self.a.size else 0.0


def form(arr) -> DenseTensor:
    """Wrap a fully covariant array as a DenseTensor of valence (0, k)."""
    arr = np.asarray(arr)
    return DenseTensor(arr, 0, arr.ndim)


@dataclass(frozen=True)
class MetricData:
    """A symmetric positive-definite bilinear form with cached inverse."""

    g: np.ndarray
    inv: np.ndarray = field(init=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ShapeError("metric must be a square matrix")
        if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise ShapeError("metric must be symmetric")
        eig = np.linalg.eigvalsh(g)
        if eig[0] <= 0:
            raise ShapeError("metric must be positive definite")
        g = g.copy()
        g.setflags(write=False)
        inv = np.linalg.inv(g)
        inv.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "inv", inv)

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class ComplexStructureData:
    """An almost complex structure J (square -identity) on the model space."""

    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ShapeError("J must be a square matrix")
        d = J.shape[0]
        if np.max(np.abs(J @ J + np.eye(d))) > 1e-10:
            raise ShapeError("J^2 must be -identity")
        J = J.copy()
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    def compatible_with(self, g: MetricData, tol: float = 1e-10) -> bool:
        # orthogonality: g(JX, JY) = g(X, Y)
        return float(np.max(np.abs(self.J.T @ g.g @ self.J - g.g))) < tol


def _as_array(t) -> np.ndarray:
    return t.a if isinstance(t, DenseTensor) else np.asarray(t)


def apply_to_slot(arr: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    """Substitute ``mat`` into one covariant slot: T(..., M v, ...)."""
    moved = np.tensordot(arr, mat, axes=(axis, 0))
    return np.moveaxis(moved, -1, axis)


def skew_check(arr: np.ndarray) -> float:
    """Max deviation of a covariant tensor from total skewness."""
    k = arr.ndim
    worst = 0.0
    for i in range(k - 1):
        swapped = np.swapaxes(arr, i, i + 1)
        worst = max(worst, float(np.max(np.abs(arr + swapped))))
    return worst


def alternate(arr: np.ndarray) -> np.ndarray:
    """Project a covariant tensor onto its totally skew part (with 1/k!)."""
    k = arr.ndim
    out = np.zeros_like(arr)
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        out = out + sign * np.transpose(arr, perm)
    return out / math.factorial(k)


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign


def wedge(a, b) -> DenseTensor:
    """Wedge product of two alternating forms, determinant convention.

    (a ^ b)(v_1, ..., v_{p+q}) sums over (p, q)-shuffles with signs; for
    1-forms (a ^ b)(X, Y) = a(X) b(Y) - a(Y) b(X).
    """
    aa, bb = _as_array(a), _as_array(b)
    if isinstance(a, DenseTensor) and a.r:
        raise ShapeError("wedge needs covariant forms")
    if isinstance(b, DenseTensor) and b.r:
        raise ShapeError("wedge needs covariant forms")
    if aa.ndim and bb.ndim and aa.shape[0] != bb.shape[0]:
        raise ShapeError(f"dimension mismatch: {aa.shape[0]} vs {bb.shape[0]}")
    if skew_check(aa) > 1e-10 * max(1.0, np.max(np.abs(aa))) or skew_check(bb) > 1e-10 * max(
        1.0, np.max(np.abs(bb))
    ):
        raise ShapeError("wedge factors must be alternating")
    p, q = aa.ndim, bb.ndim
    prod = np.multiply.outer(aa, bb)
    k = p + q
    out = np.zeros_like(prod)
    for comb in itertools.combinations(range(k), p):
        rest = [i for i in range(k) if i not in comb]
        perm = list(comb) + rest
        # sign of the shuffle that sends slots (0..p-1, p..k-1) to perm
        sign = _perm_sign(perm)
        inv = np.argsort(perm)
        out = out + sign * np.transpose(prod, inv)
    return form(out)


def pq_project(t, J, p: int, q: int) -> DenseTensor:
    """The (p, q)-part of a k-form with respect to J (complex output).

    A (p, q)-form is supported on p arguments of holomorphic type and q of
    antiholomorphic type; the projection applies (1 -+ iJ)/2 slotwise and
    keeps the assignments with exactly p holomorphic slots.
    """
    arr = _as_array(t).astype(complex)
    Jm = J.J if isinstance(J, ComplexStructureData) else np.asarray(J)
    k = arr.ndim
    if p + q != k:
        raise ShapeError(f"p + q = {p + q} must equal the form degree {k}")
    d = arr.shape[0] if k else 0
    if k and Jm.shape[0] != d:
        raise ShapeError("J dimension does not match the form")
    eye = np.eye(Jm.shape[0])
    P10 = (eye - 1j * Jm) / 2.0
    P01 = (eye + 1j * Jm) / 2.0
    out = np.zeros_like(arr)
    for holo_slots in itertools.combinations(range(k), p):
        piece = arr
        for ax in range(k):
            piece = apply_to_slot(piece, P10 if ax in holo_slots else P01, ax)
        out = out + piece
    return DenseTensor(out, 0, k)


def tensor_norm_sq(t, g: MetricData) -> float:
    """Tensorial squared norm: contract T against conj(T) with the metric."""
    arr = _as_array(t)
    r = t.r if isinstance(t, DenseTensor) else 0
    k = arr.ndim
    if k and arr.shape[0] != g.dim:
        raise ShapeError("tensor and metric dimensions differ")
    raised = arr
    for ax in range(k):
        mat = g.g if ax < r else g.inv
        raised = apply_to_slot(raised, mat, ax)
    val = np.tensordot(raised, np.conj(arr), axes=k)
    val = complex(val)
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ShapeError("norm came out non-real; inconsistent tensor data")
    return float(val.real)


def tensor_norm(t, g: MetricData) -> float:
    return math.sqrt(max(tensor_norm_sq(t, g), 0.0))


def bianchi_b(t) -> DenseTensor:
    """First-Bianchi operator: cyclic sum over the first three slots."""
    arr = _as_array(t)
    if arr.ndim != 4:
        raise ShapeError("bianchi_b expects a 4-tensor")
    out = arr + np.transpose(arr, (1, 2, 0, 3)) + np.transpose(arr, (2, 0, 1, 3))
    return form(out)


def sigma_T(t, g: MetricData) -> DenseTensor:
    """The 4-form built from a 3-form torsion by the cyclic pairing

    sigma(X,Y,Z,W) = cyclic_{XYZ} g(T(X,Y), T(Z,W)),

    where T(X,Y) is the vector metric-dual to T(X,Y,.).
    """
    arr = _as_array(t)
    if arr.ndim != 3:
        raise ShapeError("sigma_T expects a 3-form")
    if arr.shape[0] != g.dim:
        raise ShapeError("tensor and metric dimensions differ")
    pair = np.einsum("xys,st,zwt->xyzw", arr, g.inv, arr)
    return bianchi_b(pair)


def raise_last(t, g: MetricData) -> np.ndarray:
    """Raise the final covariant slot of a (0,k) array with the metric."""
    arr = _as_array(t)
    return np.tensordot(arr, g.inv, axes=(arr.ndim - 1, 0))


def derivation_action(A: np.ndarray, t, r: int | None = None, s: int | None = None) -> DenseTensor:
    """Action of an endomorphism A on a tensor as a derivation.

    Contravariant slots transform by A, covariant slots pick up -A in the
    argument; this is the infinitesimal version of pushing the tensor
    forward by exp(A).
    """
    if isinstance(t, DenseTensor):
        arr, r, s = t.a, t.r, t.s
    else:
        arr = np.asarray(t)
        if r is None or s is None:
            r, s = 0, arr.ndim
    out = np.zeros(arr.shape, dtype=np.result_type(arr, A))
    for ax in range(r):
        # up slot: A^i_k T^{..k..}
        out = out + np.moveaxis(np.tensordot(A, arr, axes=(1, ax)), 0, ax)
    for ax in range(r, r + s):
        # down slot: -T(..., A v, ...)
        out = out - apply_to_slot(arr, A, ax)
    return DenseTensor(out, r, s)


def nullspace(M: np.ndarray, rtol: float = SVD_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of M, by SVD."""
    M = np.asarray(M)
    if M.size == 0:
        return np.eye(M.shape[1])
    u, sv, vh = np.linalg.svd(M, full_matrices=True)
    cut = rtol * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > cut))
    return vh[rank:].conj().T


def matrix_rank(M: np.ndarray, rtol: float = SVD_RTOL) -> int:
    sv = np.linalg.svd(np.asarray(M), compute_uv=False)
    if sv.size == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def subspace_residual(A: np.ndarray, B: np.ndarray) -> float:
    """How far span(columns of A) sits from span(columns of B).

    Returns the largest norm of (1 - P_B) a over unit vectors a in span(A);
    0 means span(A) is contained in span(B).
    """
    if A.size == 0:
        return 0.0
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B) if B.size else (np.zeros((A.shape[0], 0)), None)
    resid = qa - qb @ (qb.conj().T @ qa) if qb.size else qa
    sv = np.linalg.svd(resid, compute_uv=False)
    return float(sv[0]) if sv.size else 0.0


# ---------------------------------------------------------------------------
# the standard interleaved complex model on R^{4n+2}


def standard_J(dim: int) -> np.ndarray:
    """Interleaved complex structure: J x_k = y_k on pairs (2k, 2k+1)."""
    if dim % 2:
        raise ParameterError("standard_J needs an even dimension")
    J = np.zeros((dim, dim))
    for a in range(dim // 2):
        J[2 * a + 1, 2 * a] = 1.0
        J[2 * a, 2 * a + 1] = -1.0
    return J


def standard_complex_frame(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Unitary frame of the interleaved model R^{2m} ~ C^m.

    Returns (E, Ed): E has the holomorphic frame vectors
    e_k = (x_k - i y_k)/sqrt(2) as columns, Ed has the dual (1,0)-covectors
    e^k = (x^k + i y^k)/sqrt(2) as rows.
    """
    d = 2 * m
    E = np.zeros((d, m), dtype=complex)
    Ed = np.zeros((m, d), dtype=complex)
    for k in range(m):
        E[2 * k, k] = 1 / math.sqrt(2)
        E[2 * k + 1, k] = -1j / math.sqrt(2)
        Ed[k, 2 * k] = 1 / math.sqrt(2)
        Ed[k, 2 * k + 1] = 1j / math.sqrt(2)
    return E, Ed


def pair_symplectic_form(n: int) -> np.ndarray:
    """The (2,0)-form pairing consecutive holomorphic directions.

    On C^{2n+1} this is sum_k e^{2k-1} ^ e^{2k} over the first n pairs
    (1-based), leaving the last direction out.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    _, Ed = standard_complex_frame(2 * n + 1)
    d = 2 * (2 * n + 1)
    acc = np.zeros((d, d), dtype=complex)
    for k in range(n):
        acc = acc + wedge(Ed[2 * k], Ed[2 * k + 1]).a
    return acc


def invariant_torsion_form(n: int, lam: complex = 1.0) -> DenseTensor:
    """lam * (omega-pair form ^ conjugate last covector) + conjugate.

    This is the distinguished real 3-form of the model space R^{4n+2}; its
    (2,1)-part spans the fixed line of the structure algebra.  With
    tensorial norms its squared norm is 12 n |lam|^2.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    _, Ed = standard_complex_frame(2 * n + 1)
    omega = pair_symplectic_form(n)
    t0 = wedge(omega, np.conj(Ed[2 * n])).a
    return form(lam * t0 + np.conj(lam) * np.conj(t0))


def model_torsion_21(n: int) -> DenseTensor:
    """The bare (2,1) piece (omega-pair ^ conj e^{2n+1}) without its conjugate."""
    _, Ed = standard_complex_frame(2 * n + 1)
    return form(wedge(pair_symplectic_form(n), np.conj(Ed[2 * n])).a)
