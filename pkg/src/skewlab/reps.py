"""Matrix realizations of the structure algebras and their tensor actions.

The central object is the realified image of sp(n) + u(1) inside u(2n+1),
acting on R^{4n+2} through the interleaved identification.  Everything
downstream (fixed subspaces, stabilizers, the admissible curvature space)
is linear algebra over explicit generator matrices, decided by SVD with a
relative cutoff.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError, StructureError
from .tensors import (
    SVD_RTOL,
    DenseTensor,
    MetricData,
    bianchi_b,
    derivation_action,
    form,
    invariant_torsion_form,
    matrix_rank,
    nullspace,
    sigma_T,
    standard_complex_frame,
    wedge,
)

# quaternion units as complex 2x2 blocks (left regular representation)
_QUNITS = {
    "1": np.array([[1, 0], [0, 1]], dtype=complex),
    "i": np.array([[1j, 0], [0, -1j]], dtype=complex),
    "j": np.array([[0, 1], [-1, 0]], dtype=complex),
    "k": np.array([[0, 1j], [1j, 0]], dtype=complex),
}


def realify(M: np.ndarray) -> np.ndarray:
    """Complex m x m matrix -> real 2m x 2m matrix on interleaved coordinates."""
    M = np.asarray(M)
    m = M.shape[0]
    out = np.zeros((2 * m, 2 * m))
    out[0::2, 0::2] = M.real
    out[0::2, 1::2] = -M.imag
    out[1::2, 0::2] = M.imag
    out[1::2, 1::2] = M.real
    return out


@dataclass(frozen=True)
class MatrixLieAlgebra:
    """A real Lie algebra given by a basis of real matrices."""

    name: str
    basis: np.ndarray  # (N, d, d)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ShapeError("basis must be a stack of square matrices")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def closure_residual(self) -> float:
        """Largest residual of any bracket against the span of the basis."""
        F = self.flat()
        worst = 0.0
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                br = self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]
                v = br.reshape(-1)
                coef, res, *_ = np.linalg.lstsq(F.T, v, rcond=None)
                worst = max(worst, float(np.linalg.norm(F.T @ coef - v)))
        return worst

    def contains_residual(self, M: np.ndarray) -> float:
        v = np.asarray(M).reshape(-1)
        F = self.flat()
        coef, *_ = np.linalg.lstsq(F.T, v, rcond=None)
        return float(np.linalg.norm(F.T @ coef - v))


def sp_blocks(n: int) -> list[np.ndarray]:
    """Deterministic basis of the compact symplectic algebra on C^{2n}.

    Quaternionic coordinates sit in consecutive complex pairs
    (2p, 2p+1); the invariant pairing is the standard two-form on each
    pair.  Returns n(2n+1) anti-Hermitian complex matrices.
    """
    out = []
    for p in range(n):
        for mu in ("i", "j", "k"):
            M = np.zeros((2 * n, 2 * n), dtype=complex)
            M[2 * p : 2 * p + 2, 2 * p : 2 * p + 2] = _QUNITS[mu]
            out.append(M)
    for p, q in itertools.combinations(range(n), 2):
        for mu in ("1", "i", "j", "k"):
            B = _QUNITS[mu]
            M = np.zeros((2 * n, 2 * n), dtype=complex)
            M[2 * p : 2 * p + 2, 2 * q : 2 * q + 2] = B
            M[2 * q : 2 * q + 2, 2 * p : 2 * p + 2] = -B.conj().T
            out.append(M)
    return out


def build_rho(n: int, variant: str = "rho") -> MatrixLieAlgebra:
    """The structure algebra sp(n) + u(1) realified on R^{4n+2}.

    variant "rho" gives the embedding whose u(1) generator acts with
    weight 1 on the first 2n holomorphic directions and weight 2 on the
    last; "rho2" flips the last weight to -2.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if variant not in ("rho", "rho2"):
        raise ParameterError(f"unknown variant {variant!r}")
    mats = []
    for B in sp_blocks(n):
        M = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        M[: 2 * n, : 2 * n] = B
        mats.append(realify(M))
    u1 = 1j * np.eye(2 * n + 1, dtype=complex)
    u1[2 * n, 2 * n] = 2j if variant == "rho" else -2j
    mats.append(realify(u1))
    return MatrixLieAlgebra(f"{variant}(sp({n})+u(1))", np.stack(mats))


def build_unitary_algebra(m: int) -> MatrixLieAlgebra:
    """u(m) realified on R^{2m} (dimension m^2)."""
    if m < 1:
        raise ParameterError("m must be at least 1")
    mats = []
    for p in range(m):
        M = np.zeros((m, m), dtype=complex)
        M[p, p] = 1j
        mats.append(realify(M))
    for p, q in itertools.combinations(range(m), 2):
        M = np.zeros((m, m), dtype=complex)
        M[p, q] = 1.0
        M[q, p] = -1.0
        mats.append(realify(M))
        M = np.zeros((m, m), dtype=complex)
        M[p, q] = 1j
        M[q, p] = 1j
        mats.append(realify(M))
    return MatrixLieAlgebra(f"u({m})", np.stack(mats))


@dataclass(frozen=True)
class RepAction:
    """Generators of an algebra action expressed on an explicit carrier basis.

    ``carrier`` columns embed the carrier space into flattened (0, k)
    tensors; ``generators[i]`` is the matrix of the i-th algebra generator
    in that basis.
    """

    description: str
    valence: tuple[int, int]
    dim: int  # model-space dimension of the underlying tensors
    carrier: np.ndarray  # (D_full, D_carrier)
    generators: np.ndarray  # (N, D_carrier, D_carrier)

    @property
    def carrier_dim(self) -> int:
        return self.carrier.shape[1]

    def reconstruct(self, coeffs: np.ndarray) -> DenseTensor:
        k = sum(self.valence)
        vec = self.carrier @ coeffs
        arr = vec.reshape((self.dim,) * k)
        if np.iscomplexobj(arr) and np.max(np.abs(arr.imag)) < 1e-14 * max(
            1.0, np.max(np.abs(arr.real))
        ):
            arr = arr.real.copy()
        return DenseTensor(arr, *self.valence)


def _pq_basis(n_complex: int, p: int, q: int) -> list[np.ndarray]:
    """Wedge basis of (p, q)-forms on the interleaved model, unit-normalized."""
    _, Ed = standard_complex_frame(n_complex)
    k = p + q
    norm = 1.0 / math.sqrt(math.factorial(k))
    vecs = []
    for holo in itertools.combinations(range(n_complex), p):
        for anti in itertools.combinations(range(n_complex), q):
            w = None
            for a in holo:
                w = Ed[a] if w is None else wedge(w, Ed[a]).a
            for b in anti:
                cb = np.conj(Ed[b])
                w = cb if w is None else wedge(w, cb).a
            vecs.append(norm * w.reshape(-1))
    return vecs


def induced_action(
    alg: MatrixLieAlgebra,
    valence: tuple[int, int],
    pq_filter: tuple[int, int] | None = None,
    real_pair: bool = False,
) -> RepAction:
    """Derivation action of ``alg`` on a tensor space.

    With ``pq_filter=(p, q)`` the carrier is the complex space of
    (p, q)-forms for the standard J.  ``real_pair=True`` instead uses the
    real forms of combined type (p, q) + (q, p); this is only meaningful
    for p != q.
    """
    r, s = valence
    if r != 0 and pq_filter is not None:
        raise ShapeError("type filtering applies to covariant forms only")
    d = alg.ambient_dim
    k = r + s

    if pq_filter is None:
        D = d**k
        carrier = np.eye(D)
        gens = np.zeros((alg.dim, D, D))
        for idx in range(alg.dim):
            X = alg.basis[idx]
            op = np.zeros((D, D))
            for col in range(D):
                unit = np.zeros(D)
                unit[col] = 1.0
                t = unit.reshape((d,) * k)
                gens_col = derivation_action(X, t, r, s).a.reshape(-1)
                op[:, col] = gens_col
            gens[idx] = op
        return RepAction(f"({r},{s})-tensors", valence, d, carrier, gens)

    p, q = pq_filter
    if p + q != k:
        raise ShapeError(f"p + q = {p + q} must equal the form degree {k}")
    if d % 2:
        raise ShapeError("typed carriers need an even-dimensional model space")
    m = d // 2
    basis = _pq_basis(m, p, q)
    if real_pair:
        if p == q:
            raise ShapeError("real_pair carrier needs p != q")
        rb = []
        for v in basis:
            rb.append(((v + np.conj(v)) / math.sqrt(2)).real)
            rb.append(((1j * (v - np.conj(v))) / math.sqrt(2)).real)
        B = np.stack(rb, axis=1)
        desc = f"real ({p},{q})+({q},{p})-forms"
    else:
        B = np.stack(basis, axis=1)
        desc = f"({p},{q})-forms"
    # carrier columns are orthonormal for the tensorial inner product
    gram = B.conj().T @ B
    if np.max(np.abs(gram - np.eye(B.shape[1]))) > 1e-10:
        raise StructureError("carrier basis failed to be orthonormal")
    gens = np.zeros((alg.dim, B.shape[1], B.shape[1]), dtype=B.dtype)
    for idx in range(alg.dim):
        X = alg.basis[idx]
        cols = []
        for c in range(B.shape[1]):
            t = B[:, c].reshape((d,) * k)
            acted = derivation_action(X, t, 0, k).a.reshape(-1)
            cols.append(acted)
        A = np.stack(cols, axis=1)
        small = B.conj().T @ A
        # the carrier must be invariant: residual of the action outside it
        resid = A - B @ small
        if np.max(np.abs(resid)) > 1e-9 * max(1.0, np.max(np.abs(A))):
            raise StructureError("carrier is not invariant under the algebra")
        gens[idx] = small.real if real_pair else small
    return RepAction(desc, valence, d, B, gens)


def fixed_subspace(action: RepAction, rtol: float = SVD_RTOL) -> list[DenseTensor]:
    """Orthonormal basis of the joint kernel of all generators."""
    stacked = np.concatenate(list(action.generators), axis=0)
    null = nullspace(stacked, rtol)
    return [action.reconstruct(null[:, j]) for j in range(null.shape[1])]


def stabilizer_algebra(
    t: DenseTensor, ambient: MatrixLieAlgebra, rtol: float = SVD_RTOL
) -> MatrixLieAlgebra:
    """Subalgebra of ``ambient`` annihilating the tensor ``t``.

    Solves X . t = 0 over the ambient basis by SVD and verifies the result
    closes under brackets.
    """
    if t.dim != ambient.ambient_dim:
        raise ShapeError("tensor and algebra live on different spaces")
    cols = []
    for X in ambient.basis:
        cols.append(derivation_action(X, t).a.reshape(-1))
    M = np.stack(cols, axis=1)
    if np.iscomplexobj(M):
        M = np.concatenate([M.real, M.imag], axis=0)
    null = nullspace(M, rtol)
    mats = np.einsum("nc,nij->cij", null, ambient.basis)
    out = MatrixLieAlgebra(f"stab[{ambient.name}]", mats)
    res = out.closure_residual()
    if res > 1e-8:
        raise StructureError(f"stabilizer failed to close under brackets (residual {res:.2e})")
    return out


@dataclass(frozen=True)
class CurvatureSpace:
    """The admissible space of curvature-type tensors for the structure algebra.

    Solution space of: R lies in the symmetric square of the lowered algebra
    and its Bianchi image is proportional to the canonical 4-form sigma.
    """

    n: int
    basis: np.ndarray  # (D^4, K) orthonormal columns, real
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", self.basis.shape[1])

    def project_residual(self, R: DenseTensor) -> float:
        v = R.a.reshape(-1)
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        proj = self.basis @ (self.basis.T @ v)
        return float(np.linalg.norm(v - proj) / nv)

    def tensors(self) -> list[DenseTensor]:
        d = 4 * self.n + 2
        return [form(self.basis[:, j].reshape(d, d, d, d)) for j in range(self.dim)]


def curvature_space(n: int, rtol: float = SVD_RTOL) -> CurvatureSpace:
    """Curvature-type tensors valued in the structure algebra, with Bianchi
    image pinned to the line through the canonical torsion 4-form.

    Works over the symmetric products of the lowered generator 2-forms and
    one extra scalar unknown (the multiple of sigma).
    """
    alg = build_rho(n)
    d = alg.ambient_dim
    g = MetricData(np.eye(d))
    lowered = [X.T for X in alg.basis]  # omega_X(u, v) = g(X u, v) -> X^T with g = id
    pairs = []
    for i in range(alg.dim):
        for j in range(i, alg.dim):
            P = 0.5 * (
                np.multiply.outer(lowered[i], lowered[j])
                + np.multiply.outer(lowered[j], lowered[i])
            )
            pairs.append(P)
    sigma0 = sigma_T(invariant_torsion_form(n), g).a.real.reshape(-1)
    cols = [bianchi_b(P).a.reshape(-1) for P in pairs]
    M = np.stack(cols + [-sigma0], axis=1)
    null = nullspace(M, rtol)
    # drop the sigma coefficient, rebuild tensors, orthonormalize
    vecs = []
    for jcol in range(null.shape[1]):
        coef = null[: len(pairs), jcol]
        R = np.einsum("p,pabcd->abcd", coef, np.stack(pairs))
        vecs.append(R.reshape(-1))
    if not vecs:
        return CurvatureSpace(n, np.zeros((d**4, 0)))
    V = np.stack(vecs, axis=1)
    q, r_ = np.linalg.qr(V)
    keep = np.abs(np.diag(r_)) > rtol * max(1.0, float(np.max(np.abs(np.diag(r_)))))
    return CurvatureSpace(n, q[:, keep])


def bianchi_kernel_dim_on_pairs(n: int, rtol: float = SVD_RTOL) -> int:
    """Dimension of ker(b) restricted to symmetric products of the lowered
    structure-algebra generators (the homogeneous part of the curvature space)."""
    alg = build_rho(n)
    lowered = [X.T for X in alg.basis]
    cols = []
    for i in range(alg.dim):
        for j in range(i, alg.dim):
            P = 0.5 * (
                np.multiply.outer(lowered[i], lowered[j])
                + np.multiply.outer(lowered[j], lowered[i])
            )
            cols.append(bianchi_b(P).a.reshape(-1))
    M = np.stack(cols, axis=1)
    return M.shape[1] - matrix_rank(M, rtol)
