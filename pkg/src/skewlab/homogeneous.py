"""Reductive homogeneous spaces: brackets, Nomizu operators, curvature.

A space is described by matrix bases of the isotropy algebra h and a
reductive complement m inside a fixed faithful realization, plus an
invariant inner product on m.  All geometry (Levi-Civita operator,
curvature, Ricci, invariant exterior derivative, covariant derivatives of
invariant tensors) reduces to structure constants, computed once.

Sign conventions: R(X,Y)Z = [L_X, L_Y]Z - L_{[X,Y]_m}Z - [X,Y]_h . Z and
R(X,Y,Z,W) = g(R(X,Y)Z, W), which makes round spheres have positive
sectional curvature; Ric(Y,Z) contracts the outer slots,
Ric(Y,Z) = sum_i R(e_i, Y, Z, e_i) in any orthonormal frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParameterError, ShapeError, StructureError
from .tensors import DenseTensor, MetricData, derivation_action, form

_REDUCTIVE_TOL = 1e-10


def _flatten_real(mats: np.ndarray) -> np.ndarray:
    """Stack of (possibly complex) matrices -> rows of a real matrix."""
    flat = np.asarray(mats).reshape(len(mats), -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


@dataclass(frozen=True)
class ReductivePair:
    """Matrix model of G/H with a fixed reductive splitting g = h + m."""

    name: str
    h_basis: np.ndarray  # (dh, N, N)
    m_basis: np.ndarray  # (d, N, N)
    metric: MetricData  # on m-coordinates

    def __post_init__(self):
        h = np.asarray(self.h_basis, dtype=complex)
        m = np.asarray(self.m_basis, dtype=complex)
        if h.ndim != 3 or m.ndim != 3 or h.shape[1:] != m.shape[1:]:
            raise ShapeError("h and m must be stacks of matrices of one size")
        if self.metric.dim != m.shape[0]:
            raise ShapeError("metric dimension must match the m-basis")
        for arr in (h, m):
            arr.setflags(write=False)
        object.__setattr__(self, "h_basis", h)
        object.__setattr__(self, "m_basis", m)
        self._check_structure()

    @property
    def dim(self) -> int:
        return self.m_basis.shape[0]

    @property
    def dim_h(self) -> int:
        return self.h_basis.shape[0]

    # -- bracket bookkeeping ------------------------------------------------

    @cached_property
    def _solver(self) -> np.ndarray:
        basis = np.concatenate([self.h_basis, self.m_basis], axis=0)
        flat = _flatten_real(basis)
        rank = np.linalg.matrix_rank(flat, tol=1e-10)
        if rank != flat.shape[0]:
            raise StructureError("h + m basis is linearly dependent")
        return np.linalg.pinv(flat)

    def decompose(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients (h-part, m-part) of X in the chosen bases."""
        X = np.asarray(X, dtype=complex)
        v = np.concatenate([X.real.reshape(-1), X.imag.reshape(-1)])
        coef = v @ self._solver
        recon = np.einsum(
            "a,aij->ij", coef, np.concatenate([self.h_basis, self.m_basis], axis=0)
        )
        if np.max(np.abs(recon - X)) > _REDUCTIVE_TOL * max(1.0, np.max(np.abs(X))):
            raise StructureError("matrix does not lie in h + m")
        return coef[: self.dim_h], coef[self.dim_h :]

    @cached_property
    def _structure(self) -> dict[str, np.ndarray]:
        dh, d = self.dim_h, self.dim
        C_mm_m = np.zeros((d, d, d))
        C_mm_h = np.zeros((d, d, dh))
        lam = np.zeros((dh, d, d))
        for i in range(d):
            for j in range(i + 1, d):
                br = self.m_basis[i] @ self.m_basis[j] - self.m_basis[j] @ self.m_basis[i]
                hc, mc = self.decompose(br)
                worst = max(np.abs(hc.imag).max(initial=0.0), np.abs(mc.imag).max(initial=0.0))
                if worst > 1e-12:
                    raise StructureError("structure constants must be real")
                C_mm_m[i, j] = mc.real
                C_mm_m[j, i] = -mc.real
                C_mm_h[i, j] = hc.real
                C_mm_h[j, i] = -hc.real
        for a in range(dh):
            for i in range(d):
                br = self.h_basis[a] @ self.m_basis[i] - self.m_basis[i] @ self.h_basis[a]
                hc, mc = self.decompose(br)
                if np.max(np.abs(hc)) > _REDUCTIVE_TOL:
                    raise StructureError("[h, m] leaks into h: pair is not reductive")
                lam[a, :, i] = mc.real
        return {"C_mm_m": C_mm_m, "C_mm_h": C_mm_h, "lam": lam}

    @property
    def brackets_m(self) -> np.ndarray:
        """C[i,j,k] with [m_i, m_j]_m = sum_k C[i,j,k] m_k."""
        return self._structure["C_mm_m"]

    @property
    def brackets_h(self) -> np.ndarray:
        """C[i,j,a] with [m_i, m_j]_h = sum_a C[i,j,a] h_a."""
        return self._structure["C_mm_h"]

    @property
    def isotropy(self) -> np.ndarray:
        """lam[a] = matrix of ad(h_a) on m."""
        return self._structure["lam"]

    def _check_structure(self) -> None:
        # h must close
        for a in range(self.dim_h):
            for b in range(a + 1, self.dim_h):
                br = self.h_basis[a] @ self.h_basis[b] - self.h_basis[b] @ self.h_basis[a]
                hc, mc = self.decompose(br)
                if np.max(np.abs(mc)) > _REDUCTIVE_TOL:
                    raise StructureError("[h, h] leaks into m")
        # the metric must be isotropy-invariant
        g = self.metric.g
        for a in range(self.dim_h):
            L = self.isotropy[a]
            resid = np.max(np.abs(L.T @ g + g @ L))
            if resid > 1e-9 * max(1.0, float(np.max(np.abs(g)))):
                raise StructureError(f"metric is not isotropy-invariant (residual {resid:.2e})")

    # -- connection and curvature -------------------------------------------

    @cached_property
    def levi_civita(self) -> np.ndarray:
        """L[i] = matrix of the canonical torsion-free metric operator on m."""
        C = self.brackets_m
        g = self.metric.g
        A = np.einsum("kil,lj->kij", C, g)  # A[k,i,j] = g([e_k, e_i]_m, e_j)
        U = 0.5 * np.einsum("ak,kij->ija", self.metric.inv, A + A.transpose(0, 2, 1))
        lam = 0.5 * np.transpose(C, (0, 2, 1)) + np.transpose(U, (0, 2, 1))
        # torsion-free and metric checks are cheap; do them once here
        tors = lam - np.transpose(lam, (2, 1, 0)) - np.transpose(C, (0, 2, 1))
        if np.max(np.abs(tors)) > 1e-9:
            raise StructureError("connection failed the torsion-free identity")
        for i in range(self.dim):
            resid = np.max(np.abs(lam[i].T @ g + g @ lam[i]))
            if resid > 1e-9:
                raise StructureError("connection operator is not metric-skew")
        return lam

    def curvature_operators(self, operators: np.ndarray | None = None) -> np.ndarray:
        """R[i,j] = curvature operator R(e_i, e_j) of an invariant connection.

        ``operators`` defaults to the Levi-Civita family; passing the
        operators of a metric connection with torsion reuses the same
        formula.
        """
        lam = self.levi_civita if operators is None else np.asarray(operators)
        C, Ch, iso = self.brackets_m, self.brackets_h, self.isotropy
        comm = np.einsum("iab,jbc->ijac", lam, lam)
        R = comm - comm.transpose(1, 0, 2, 3)
        R -= np.einsum("ijk,kab->ijab", C, lam)
        if self.dim_h:
            R -= np.einsum("ija,axy->ijxy", Ch, iso)
        return R

    def curvature(self, operators: np.ndarray | None = None) -> DenseTensor:
        """Lowered curvature tensor R(X,Y,Z,W) of an invariant connection."""
        R = self.curvature_operators(operators)
        lowered = np.einsum("ijbk,bl->ijkl", R, self.metric.g)
        return form(lowered)

    def ricci(self, R: DenseTensor) -> np.ndarray:
        """Ricci tensor of a lowered curvature 4-tensor (outer-slot trace)."""
        return np.einsum("iyzj,ij->yz", R.a, self.metric.inv)

    def scalar_curvature(self, R: DenseTensor) -> float:
        ric = self.ricci(R)
        return float(np.einsum("yz,yz->", ric, self.metric.inv).real)

    def sectional(self, R: DenseTensor, X: np.ndarray, Y: np.ndarray) -> float:
        g = self.metric.g
        num = float(np.einsum("ijkl,i,j,k,l->", R.a, X, Y, Y, X).real)
        den = float(
            (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        )
        if abs(den) < 1e-14:
            raise ParameterError("sectional curvature needs independent directions")
        return num / den

    # -- invariant calculus ---------------------------------------------------

    def exterior_d(self, alpha) -> DenseTensor:
        """d of an invariant form, through the m-brackets.

        d a (X_0..X_p) = sum_{i<j} (-1)^{i+j} a([X_i,X_j]_m, X_0.. î .. ĵ ..X_p).
        """
        arr = alpha.a if isinstance(alpha, DenseTensor) else np.asarray(alpha)
        p = arr.ndim
        C = self.brackets_m
        paired = np.einsum("ijc,c...->ij...", C, arr)
        out = np.zeros((self.dim,) * (p + 1), dtype=arr.dtype)
        for i in range(p + 1):
            for j in range(i + 1, p + 1):
                out += (-1) ** (i + j) * np.moveaxis(paired, (0, 1), (i, j))
        return form(out)

    def invariant_nabla(self, operators: np.ndarray, t: DenseTensor) -> DenseTensor:
        """Covariant derivative of an invariant covariant tensor.

        Returns the (0, k+1) tensor with the direction slot first; entry
        [x, ...] is the action of operators[x] on t as a derivation.
        """
        if t.r:
            raise ShapeError("invariant_nabla expects a covariant tensor")
        lam = np.asarray(operators)
        pieces = [derivation_action(lam[i], t).a for i in range(self.dim)]
        return form(np.stack(pieces, axis=0))
