"""The characteristic Hermitian connection with skew torsion.

Everything here acts on a TwistorSpace: the torsion is assembled from the
Kaehler form and the Nijenhuis tensor, the connection operators extend the
canonical torsion-free family, and the curvature propagates through the
same reductive machinery.  The torsion must be totally skew or the
structure falls outside the tractable class and construction is refused.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GeometryError, TorsionClassError
from .tensors import (
    DenseTensor,
    bianchi_b,
    derivation_action,
    form,
    matrix_rank,
    sigma_T,
    skew_check,
    tensor_norm_sq,
)
from .twistor import TwistorSpace, _adapted_frame

_SKEW_TOL = 1e-9


def fundamental_form(tw: TwistorSpace) -> DenseTensor:
    """Kaehler form Omega(X,Y) = g(JX, Y)."""
    return form(tw.J.T @ tw.space.metric.g)


def nijenhuis_tensor(tw: TwistorSpace) -> np.ndarray:
    """N[i,j,:] = N(e_i, e_j) as a vector, from the torsion-free connection."""
    lam = tw.space.levi_civita
    J = tw.J
    dJ = np.einsum("iab,bc->iac", lam, J) - np.einsum("ab,ibc->iac", J, lam)
    dJJ = np.einsum("ki,kab->iab", J, dJ)
    return (
        np.einsum("iaj->ija", dJJ)
        - np.einsum("jai->ija", dJJ)
        + np.einsum("ab,jbi->ija", J, dJ)
        - np.einsum("ab,ibj->ija", J, dJ)
    )


def _apply_j_slots(arr: np.ndarray, J: np.ndarray) -> np.ndarray:
    out = arr
    for ax in range(arr.ndim):
        out = np.moveaxis(np.tensordot(J, out, axes=(0, ax)), 0, ax)
    return out


@dataclass(frozen=True)
class CanonicalTorsionPackage:
    """The unique Hermitian connection with totally skew torsion."""

    tw: TwistorSpace
    torsion: DenseTensor  # (0,3)
    nijenhuis_form: DenseTensor  # lowered N
    dc_omega: DenseTensor
    operators: np.ndarray  # Lambda^a family

    @cached_property
    def curvature_ops(self) -> np.ndarray:
        return self.tw.space.curvature_operators(self.operators)

    @cached_property
    def curvature(self) -> DenseTensor:
        return self.tw.space.curvature(self.operators)

    @cached_property
    def lc_curvature(self) -> DenseTensor:
        return self.tw.space.curvature()

    def ricci(self) -> np.ndarray:
        return self.tw.space.ricci(self.curvature)

    def scalar(self) -> float:
        return self.tw.space.scalar_curvature(self.curvature)

    @cached_property
    def torsion_norm_sq(self) -> float:
        return tensor_norm_sq(self.torsion, self.tw.space.metric)

    def nabla(self, t: DenseTensor) -> DenseTensor:
        """Covariant derivative of an invariant covariant tensor."""
        return self.tw.space.invariant_nabla(self.operators, t)

    def nabla_endo(self, M: np.ndarray) -> np.ndarray:
        """Directional derivatives [Lambda^a(e_i), M] of an invariant field."""
        return np.einsum("iab,bc->iac", self.operators, M) - np.einsum(
            "ab,ibc->iac", M, self.operators
        )

    def parallel_residuals(self) -> dict[str, float]:
        tw = self.tw
        g = form(tw.space.metric.g.astype(complex))
        out = {
            "metric": float(np.abs(self.nabla(g).a).max()),
            "J": float(np.abs(self.nabla_endo(tw.J)).max()),
            "hproj": float(np.abs(self.nabla_endo(tw.hproj)).max()),
            "vproj": float(np.abs(self.nabla_endo(tw.vproj)).max()),
            "torsion": float(np.abs(self.nabla(self.torsion).a).max()),
        }
        return out

    def u1_curvature_trace(self) -> np.ndarray:
        """sum_k R^a(e_k, J e_k) over any orthonormal frame, as an operator."""
        P = self.tw.space.metric.inv @ self.tw.J.T
        return np.einsum("ijab,ij->ab", self.curvature_ops, P)


def canonical_connection(tw: TwistorSpace) -> CanonicalTorsionPackage:
    """Assemble the characteristic connection; torsion must be totally skew."""
    pair = tw.space
    g = pair.metric.g
    Omega = fundamental_form(tw)
    dOm = pair.exterior_d(Omega)
    dc = form(-_apply_j_slots(dOm.a, tw.J))
    N_vec = nijenhuis_tensor(tw)
    N_low = form(np.einsum("ija,ab->ijb", N_vec, g))
    if skew_check(N_low.a) > _SKEW_TOL:
        raise TorsionClassError(
            "Nijenhuis tensor is not totally skew: structure outside the "
            "admissible class"
        )
    T = form(-dc.a + N_low.a)
    if np.abs(np.asarray(T.a).imag).max() > _SKEW_TOL:
        raise GeometryError("torsion came out complex")
    T = form(np.asarray(T.a).real)
    if skew_check(T.a) > _SKEW_TOL:
        raise TorsionClassError("characteristic torsion failed total skewness")

    half_raise = 0.5 * np.einsum("ac,ijc->iaj", pair.metric.inv, T.a)
    ops = pair.levi_civita + half_raise

    # the recovered torsion of the new operators must be T itself
    C = pair.brackets_m
    tors_vec = np.einsum("iaj->ija", ops) - np.einsum("jai->ija", ops) - C
    tors_low = np.einsum("ija,ab->ijb", tors_vec, g)
    if np.abs(tors_low - T.a).max() > _SKEW_TOL:
        raise GeometryError("connection operators do not reproduce the torsion")

    return CanonicalTorsionPackage(
        tw=tw, torsion=T, nijenhuis_form=N_low, dc_omega=dc, operators=ops
    )


def torsion_ricci(T: DenseTensor, inv: np.ndarray) -> np.ndarray:
    """r^a(X,Y) = <T(X, .), T(Y, .)>, both free slots traced with the metric."""
    return np.real(
        np.einsum("xab,ycd,ac,bd->xy", T.a, np.conj(T.a), inv, inv)
    )


def curvature_relation_check(
    R: DenseTensor, Ra: DenseTensor, T: DenseTensor, inv: np.ndarray
) -> float:
    """Residual of the four-term relation between R^a and the metric curvature."""
    TT = np.real(np.einsum("xys,st,zwt->xyzw", T.a, inv, np.conj(T.a)))
    pred = (
        np.asarray(R.a)
        + 0.5 * TT
        + 0.25 * np.einsum("yzxw->xyzw", TT)
        - 0.25 * np.einsum("xzyw->xyzw", TT)
    )
    return float(np.abs(np.asarray(Ra.a) - pred).max())


def general_curvature_relation_check(pkg: CanonicalTorsionPackage) -> float:
    """Residual of the relation valid at every t, with explicit derivative terms."""
    tw = pkg.tw
    inv = tw.space.metric.inv
    T = pkg.torsion
    nablaT = tw.space.invariant_nabla(tw.space.levi_civita, T).a  # [x, y, z, w]
    TT = np.real(np.einsum("xys,st,zwt->xyzw", T.a, inv, np.conj(T.a)))
    pred = (
        np.asarray(pkg.lc_curvature.a)
        + 0.5 * np.asarray(nablaT)
        - 0.5 * np.einsum("yxzw->xyzw", np.asarray(nablaT))
        - 0.25 * np.einsum("yzxw->xyzw", TT)
        + 0.25 * np.einsum("xzyw->xyzw", TT)
    )
    return float(np.abs(np.asarray(pkg.curvature.a) - pred).max())


def first_bianchi_residual(pkg: CanonicalTorsionPackage) -> float:
    """Residual of b(R^a) = sigma_T, the Bianchi identity with parallel torsion."""
    lhs = bianchi_b(pkg.curvature.a)
    rhs = sigma_T(pkg.torsion, pkg.tw.space.metric)
    return float(np.abs(np.asarray(lhs.a) - np.asarray(rhs.a)).max())


def curvature_annihilates_torsion_residual(pkg: CanonicalTorsionPackage) -> float:
    """Residual of the cyclic identity R^a(U,V,X,T(Y,Z)) summed over X,Y,Z."""
    inv = pkg.tw.space.metric.inv
    T_up = np.einsum("yzs,st->yzt", pkg.torsion.a, inv)  # T(Y,Z) raised
    M = np.real(np.einsum("uvxt,yzt->uvxyz", pkg.curvature.a, T_up))
    cyc = M + np.einsum("uvyzx->uvxyz", M) + np.einsum("uvzxy->uvxyz", M)
    return float(np.abs(cyc).max())


def splitting_preserved_residual(pkg: CanonicalTorsionPackage) -> float:
    """How far the curvature operators go off the horizontal/vertical blocks."""
    ops = pkg.curvature_ops
    h, v = pkg.tw.hproj, pkg.tw.vproj
    mixed = np.einsum("ab,ijbc,cd->ijad", v, ops, h)
    mixed2 = np.einsum("ab,ijbc,cd->ijad", h, ops, v)
    return float(max(np.abs(mixed).max(), np.abs(mixed2).max()))


def nondegeneracy(T: DenseTensor, dim: int) -> float:
    """Smallest singular value of X -> T(X, ., .); zero for degenerate torsion."""
    M = np.asarray(T.a).reshape(dim, dim * dim)
    sv = np.linalg.svd(M, compute_uv=False)
    return float(sv[-1])


# -- closed-form Ricci and the curvature decomposition ----------------------


def ricci_formulas_check(pkg: CanonicalTorsionPackage) -> dict[str, float]:
    """Residuals of the closed forms for both Ricci tensors at t = t1."""
    tw = pkg.tw
    n = tw.n
    g = tw.space.metric.g
    gH = tw.hproj.T @ g @ tw.hproj
    gV = tw.vproj.T @ g @ tw.vproj
    T2 = pkg.torsion_norm_sq
    Ra, R = pkg.curvature, pkg.lc_curvature
    ric_a = tw.space.ricci(Ra)
    ric = tw.space.ricci(R)
    s_a = tw.space.scalar_curvature(Ra)
    s = tw.space.scalar_curvature(R)
    out = {
        "ric_a": float(np.abs(ric_a - T2 / (12 * n) * ((n + 1) * gH + 2 * gV)).max()),
        "s_a": abs(s_a - (n * n + n + 1) * T2 / (3 * n)),
        "ric": float(
            np.abs(ric - T2 / (24 * n) * ((2 * n + 3) * gH + (n + 4) * gV)).max()
        ),
        "s": abs(s - (4 * n * n + 7 * n + 4) * T2 / (12 * n)),
        "ricci_relation": float(
            np.abs(ric_a - ric + 0.25 * torsion_ricci(pkg.torsion, tw.space.metric.inv)).max()
        ),
        "scalar_relation": abs(s_a - s + T2 / 4.0),
    }
    ev_a = np.linalg.eigvalsh(np.linalg.solve(g, ric_a))
    ev = np.linalg.eigvalsh(np.linalg.solve(g, ric))
    out["ric_a_min_eigenvalue"] = float(ev_a.min())
    out["ric_min_eigenvalue"] = float(ev.min())
    return out


def _pair_form(A: np.ndarray, B: np.ndarray, pattern: str) -> np.ndarray:
    return np.einsum(pattern, A, B)


def model_curvature_r0(tw: TwistorSpace) -> DenseTensor:
    """The model tensor R0^a reproduced from the split structure."""
    g = tw.space.metric.g
    gH = tw.hproj.T @ g @ tw.hproj
    gV = tw.vproj.T @ g @ tw.vproj
    J = tw.J
    AJ_H = J.T @ gH
    AJ_V = J.T @ gV
    d = tw.dim
    R = np.zeros((d, d, d, d))
    for L in (np.eye(d), tw.I, J, tw.K):
        A = L.T @ gH
        R += np.einsum("yz,xw->xyzw", A, A) - np.einsum("xz,yw->xyzw", A, A)
    R -= 2.0 * (
        np.einsum("xy,zw->xyzw", AJ_H, AJ_H)
        + 2.0 * np.einsum("xy,zw->xyzw", AJ_H, AJ_V)
        + 2.0 * np.einsum("xy,zw->xyzw", AJ_V, AJ_H)
        + 4.0 * np.einsum("xy,zw->xyzw", AJ_V, AJ_V)
    )
    return form(R)


def model_curvature_r0_lc(tw: TwistorSpace) -> DenseTensor:
    """The companion model for the torsion-free curvature on the same space."""
    g = tw.space.metric.g
    gH = tw.hproj.T @ g @ tw.hproj
    gV = tw.vproj.T @ g @ tw.vproj
    J = tw.J
    d = tw.dim
    R = np.einsum("yz,xw->xyzw", gH, gH) - np.einsum("xz,yw->xyzw", gH, gH)
    for L in (tw.I, J, tw.K):
        A = L.T @ gH
        R += (
            np.einsum("yz,xw->xyzw", A, A)
            - np.einsum("xz,yw->xyzw", A, A)
            - 2.0 * np.einsum("xy,zw->xyzw", A, A)
        )
    for L in (tw.I, tw.K):
        A = L.T @ gH
        R -= 0.5 * (
            np.einsum("yz,xw->xyzw", A, A)
            - np.einsum("xz,yw->xyzw", A, A)
            - 2.0 * np.einsum("xy,zw->xyzw", A, A)
        )
    R += 0.5 * (
        np.einsum("yz,xw->xyzw", gH, gV)
        + np.einsum("yz,xw->xyzw", gV, gH)
        - np.einsum("xz,yw->xyzw", gH, gV)
        - np.einsum("xz,yw->xyzw", gV, gH)
    )
    AJ_H = J.T @ gH
    AJ_V = J.T @ gV
    R += 1.5 * (
        np.einsum("yz,xw->xyzw", AJ_H, AJ_V)
        + np.einsum("yz,xw->xyzw", AJ_V, AJ_H)
        - np.einsum("xz,yw->xyzw", AJ_H, AJ_V)
        - np.einsum("xz,yw->xyzw", AJ_V, AJ_H)
        - 2.0 * np.einsum("xy,zw->xyzw", AJ_H, AJ_V)
        - 2.0 * np.einsum("xy,zw->xyzw", AJ_V, AJ_H)
    )
    R -= 8.0 * np.einsum("xy,zw->xyzw", AJ_V, AJ_V)
    return form(R)


@dataclass(frozen=True)
class CurvatureDecomposition:
    coefficient: float
    r0: DenseTensor
    hyper: DenseTensor

    def hyper_norm(self) -> float:
        return float(np.abs(np.asarray(self.hyper.a)).max())


def decompose_curvature(pkg: CanonicalTorsionPackage) -> CurvatureDecomposition:
    """Split R^a into its model part and the hyper remainder."""
    tw = pkg.tw
    coeff = pkg.torsion_norm_sq / (48.0 * tw.n)
    r0 = model_curvature_r0(tw)
    hyper = form(np.asarray(pkg.curvature.a) - coeff * np.asarray(r0.a))
    return CurvatureDecomposition(coefficient=coeff, r0=r0, hyper=hyper)


def hyper_block_residuals(dec: CurvatureDecomposition, tw: TwistorSpace) -> dict[str, float]:
    """The remainder must live on the horizontal block, Ricci-flat there."""
    H = np.asarray(dec.hyper.a)
    v = np.diag(tw.vproj).astype(bool)
    vertical_part = max(
        np.abs(H[v]).max(initial=0.0),
        np.abs(H[:, v]).max(initial=0.0),
        np.abs(H[:, :, v]).max(initial=0.0),
        np.abs(H[:, :, :, v]).max(initial=0.0),
    )
    ric = np.einsum("iyzj,ij->yz", H, tw.space.metric.inv)
    return {
        "vertical": float(vertical_part),
        "ricci": float(np.abs(ric).max()),
        "bianchi": float(np.abs(bianchi_b(H).a).max()),
    }


# -- holonomy ----------------------------------------------------------------


def _orth_extend(basis: list[np.ndarray], cand: np.ndarray, tol: float) -> bool:
    v = cand.reshape(-1).copy()
    for b in basis:
        v -= (b.reshape(-1) @ v) * b.reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm > tol:
        basis.append((v / nrm).reshape(cand.shape))
        return True
    return False


def holonomy_algebra(pkg: CanonicalTorsionPackage, tol: float = 1e-8) -> np.ndarray:
    """Basis of the holonomy algebra of the characteristic connection.

    Seeds with the curvature operators and closes under brackets with the
    connection operators and with itself, mirroring the generation of
    hol by covariant derivatives of the curvature.
    """
    d = pkg.tw.dim
    ops = pkg.curvature_ops
    scale = max(np.abs(ops).max(), 1e-30)
    basis: list[np.ndarray] = []
    for i in range(d):
        for j in range(i + 1, d):
            _orth_extend(basis, ops[i, j] / scale, tol)
    lam = pkg.operators
    cap = 2 * d * d
    for _ in range(cap):
        grew = False
        for S in list(basis):
            for i in range(d):
                grew |= _orth_extend(basis, lam[i] @ S - S @ lam[i], tol)
        for a in range(len(basis)):
            for b in range(a + 1, len(basis)):
                grew |= _orth_extend(basis, basis[a] @ basis[b] - basis[b] @ basis[a], tol)
        if not grew:
            return np.stack(basis)
    raise GeometryError(f"holonomy closure still growing at cap {cap}")


def holonomy_in_frame(pkg: CanonicalTorsionPackage, hol: np.ndarray) -> np.ndarray:
    """Conjugate holonomy generators into the adapted frame."""
    F = pkg.tw.frame
    Finv = np.linalg.inv(F)
    return np.einsum("ab,nbc,cd->nad", Finv, hol, F)


def stabilizer_containment_residual(
    pkg: CanonicalTorsionPackage, hol: np.ndarray
) -> float:
    """Each holonomy generator must annihilate the parallel torsion."""
    worst = 0.0
    for S in hol:
        act = derivation_action(S, pkg.torsion)
        worst = max(worst, float(np.abs(act.a).max()))
    return worst


def prop_u1_residual(pkg: CanonicalTorsionPackage) -> float:
    """Residual of the trace identity isolating the u(1) holonomy part."""
    tw = pkg.tw
    lhs = tw.hproj @ tw.J @ tw.hproj + 2.0 * (tw.vproj @ tw.J @ tw.vproj)
    coeff = 12.0 * tw.n / ((2 * tw.n + 1) * pkg.torsion_norm_sq)
    rhs = -coeff * pkg.u1_curvature_trace()
    return float(np.abs(lhs - rhs).max())


# -- the structure swap -------------------------------------------------------


def structure_swap(tw: TwistorSpace) -> TwistorSpace:
    """Flip J on the vertical block: the Hermitian/nearly-Kaehler exchange."""
    from dataclasses import replace

    other = "J2" if tw.structure == "J1" else "J1"
    Jhat = tw.hproj @ tw.J @ tw.hproj - tw.vproj @ tw.J @ tw.vproj
    fiber_rot = Jhat[tw.base.dim :, tw.base.dim :]
    frame = _adapted_frame(tw.base, tw.triple, tw.n, tw.t, fiber_rot)
    return replace(tw, structure=other, J=Jhat, frame=frame)
