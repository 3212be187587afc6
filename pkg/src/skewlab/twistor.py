"""Twistor spaces of the model bases, as reductive pairs.

Over a model base G/H with frame (I', J', K'), the twistor space is G/H_z
where H_z centralizes J' inside the isotropy.  The complement n of h_z
inside h (orthogonal for the trace form) becomes the vertical tangent
space; nu(xi) = [lambda(xi), J'] identifies it with span{I', K'}.  The
metric is g' on the horizontal block and n*t times the induced round
fiber metric on the vertical block, so the fibers have curvature 1/(n*t).

Tangent coordinates on Z are ordered horizontal-first: the base m-basis,
then (xi_1, xi_2) with nu(xi_1) = K' and nu(xi_2) = -I'.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GeometryError, ParameterError, StructureError
from .homogeneous import ReductivePair
from .tensors import (
    DenseTensor,
    MetricData,
    derivation_action,
    form,
    invariant_torsion_form,
    nullspace,
    tensor_norm_sq,
    wedge,
)

STRUCTURES = ("J1", "J2")

_BUILD_TOL = 1e-9


def _triple_coords(A: np.ndarray, triple, n: int) -> np.ndarray:
    """Coordinates of A in the frame (I', J', K'), orthonormal for tr(X^T Y)/4n."""
    return np.array([np.trace(L.T @ A) / (4 * n) for L in triple])


def canonical_times(base: ReductivePair) -> tuple[float, float]:
    """(t0, t1): the Kaehler instant and the parallel-torsion instant."""
    s = base.scalar_curvature(base.curvature())
    n = base.dim // 4
    return 4.0 * (n + 2) / s, 2.0 * (n + 2) / s


@dataclass(frozen=True)
class TwistorSpace:
    """A twistor space Z with its fiber parameter and almost complex structure."""

    space: ReductivePair
    base: ReductivePair
    triple: tuple
    n: int
    t: float
    structure: str
    J: np.ndarray
    hproj: np.ndarray
    vproj: np.ndarray
    K: np.ndarray
    I: np.ndarray
    s_prime: float
    frame: np.ndarray
    n_coefs: np.ndarray  # vertical generators as h-coefficient columns

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def t0(self) -> float:
        return 4.0 * (self.n + 2) / self.s_prime

    @property
    def t1(self) -> float:
        return 2.0 * (self.n + 2) / self.s_prime

    @property
    def torsion_coefficient(self) -> float:
        """Signed coefficient of the model torsion form; vanishes at t0."""
        lam = 2.0 - self.s_prime * self.t / (2.0 * (self.n + 2))
        return lam / np.sqrt(2.0 * self.n * self.t)

    @cached_property
    def omega(self) -> DenseTensor:
        """The horizontal form pairing K and I, of type (2, 0) for J1.

        The e^{i pi/4} factor fixes the fiber phase of the defining unit
        vertical direction (shared with alpha) so that the characteristic
        torsion is lam * (omega ^ conj(alpha) + conj) with real lam.
        """
        g = self.space.metric.g
        phase = np.exp(0.25j * np.pi)
        return form(0.5 * phase * (self.K.T @ g + 1j * (self.I.T @ g)))

    @cached_property
    def alpha(self) -> DenseTensor:
        """Unit vertical covector, of type (1, 0) for the integrable structure.

        Fixed once per twistor space: the reversed structure sees its
        conjugate as (1, 0).
        """
        g = self.space.metric.g
        d = self.base.dim
        xv = np.zeros(self.dim)
        xv[d] = 1.0 / np.sqrt(self.n * self.t)
        yv = np.zeros(self.dim)
        yv[d + 1] = -1.0 / np.sqrt(self.n * self.t)
        phase = np.exp(-0.25j * np.pi)  # matches the gauge fixed in omega
        return form(phase * (g @ xv + 1j * (g @ yv)) / np.sqrt(2.0))

    def torsion_model(self) -> DenseTensor:
        """The predicted characteristic torsion: lam * (omega ^ conj(alpha) + conj)."""
        half = wedge(self.omega, DenseTensor(self.alpha.a.conj(), 0, 1))
        T = self.torsion_coefficient * (half.a + half.a.conj())
        if np.abs(T.imag).max() > _BUILD_TOL:
            raise GeometryError("model torsion failed to be real")
        return form(T.real)

    def torsion_model_frame(self) -> DenseTensor:
        """The same model, built in an adapted frame and pushed to coordinates.

        Always uses the frame of the integrable structure, matching alpha.
        """
        lam = self.torsion_coefficient
        T_frame = invariant_torsion_form(self.n, lam).a
        if np.abs(T_frame.imag).max() > _BUILD_TOL:
            raise GeometryError("model torsion failed to be real")
        F = _adapted_frame(
            self.base, self.triple, self.n, self.t, np.array([[0.0, 1.0], [-1.0, 0.0]])
        )
        Finv = np.linalg.inv(F)
        return form(np.einsum("abc,ai,bj,ck->ijk", T_frame.real, Finv, Finv, Finv))

    def vertical_isotropy(self) -> np.ndarray:
        """Base isotropy matrices of the vertical generators (xi_1, xi_2)."""
        iso = self.base.isotropy
        return np.einsum("an,aij->nij", self.n_coefs, iso)

    def projectability_residual(self, T: DenseTensor | np.ndarray) -> float:
        """Sup-norm of the horizontal fiber variation of an invariant tensor.

        Zero exactly when the horizontal components of T descend to the base.
        """
        if isinstance(T, DenseTensor):
            t = T
        elif np.asarray(T).ndim == 2:
            t = DenseTensor(np.asarray(T, dtype=complex), 1, 1)
        else:
            raise ParameterError("pass a DenseTensor or an endomorphism matrix")
        arr = _project_all_slots(t, self.hproj)
        worst = 0.0
        for lam_xi in self.vertical_isotropy():
            lam_Z = np.zeros((self.dim, self.dim))
            lam_Z[: 4 * self.n, : 4 * self.n] = lam_xi
            lie = derivation_action(lam_Z, DenseTensor(arr, t.r, t.s))
            worst = max(worst, np.abs(_project_all_slots(lie, self.hproj)).max())
        return worst

    def is_projectable(self, T, tol: float = 1e-9) -> bool:
        return self.projectability_residual(T) < tol


def _project_all_slots(t: DenseTensor, P: np.ndarray) -> np.ndarray:
    arr = np.asarray(t.a)
    for ax in range(t.r):
        arr = np.tensordot(P, arr, axes=(1, ax))
        arr = np.moveaxis(arr, 0, ax)
    for ax in range(t.r, t.r + t.s):
        arr = np.tensordot(arr, P, axes=(ax, 0))
        arr = np.moveaxis(arr, -1, ax)
    return arr


def _adapted_frame(
    base: ReductivePair, triple, n: int, t: float, fiber_rot: np.ndarray
) -> np.ndarray:
    """Orthonormal frame (x, J'x, K'x, J'K'x per line; fiber pair last).

    Greedy over the base m-basis: each new line starts from the first basis
    vector with significant component off the span built so far.  The fiber
    pair is (x_v, J x_v) so the whole frame interleaves with J.
    """
    I, Jp, K = triple
    d = 4 * n
    g = base.metric.g
    cols: list[np.ndarray] = []
    for _ in range(n):
        X = None
        for i in range(d):
            v = np.eye(d)[i]
            for c in cols:
                v = v - (c @ g @ v) * c
            if np.sqrt(abs(v @ g @ v)) > 1e-6:
                X = v / np.sqrt(v @ g @ v)
                break
        if X is None:
            raise StructureError("could not complete a quaternionic frame")
        cols.extend([X, Jp @ X, K @ X, Jp @ K @ X])
    F = np.zeros((d + 2, d + 2))
    F[:d, :d] = np.stack(cols, axis=1)
    # quarter-turned fiber pair: aligns the in-frame torsion with the
    # standard real pairing of the flat model
    F[d:, d] = fiber_rot[:, 0] / np.sqrt(n * t)
    F[d:, d + 1] = -np.array([1.0, 0.0]) / np.sqrt(n * t)
    return F


def build_twistor(
    base: ReductivePair, triple, t: float, structure: str = "J1"
) -> TwistorSpace:
    """Assemble the twistor space of a model base at fiber parameter t."""
    if structure not in STRUCTURES:
        raise ParameterError(f"structure must be one of {STRUCTURES}")
    if not (t > 0):
        raise ParameterError("t must be positive")
    if base.dim % 4:
        raise StructureError("base dimension must be a multiple of 4")
    n = base.dim // 4
    Ip, Jp, Kp = (np.asarray(L, dtype=float) for L in triple)
    iso = base.isotropy
    dh, d = iso.shape[0], base.dim

    # centralizer of J' in the isotropy
    cols = np.stack([(iso[a] @ Jp - Jp @ iso[a]).reshape(-1) for a in range(dh)], axis=1)
    hz = nullspace(cols)
    if hz.shape[1] != dh - 2:
        raise StructureError(f"centralizer of J' has dimension {hz.shape[1]}, wanted {dh - 2}")

    # trace-form complement: the vertical generators
    H = base.h_basis
    G = np.real(np.einsum("aij,bij->ab", H.conj(), H))
    n_coefs = nullspace(hz.T @ G)
    if n_coefs.shape[1] != 2:
        raise StructureError("vertical complement is not two dimensional")

    # rotate so that nu(xi_1) = K', nu(xi_2) = -I'; nu is the actual fiber
    # velocity [lambda(xi), J'], not lambda(xi) itself
    lams = [np.einsum("a,aij->ij", n_coefs[:, i], iso) for i in range(2)]
    nus = [lam @ Jp - Jp @ lam for lam in lams]
    A = np.stack([_triple_coords(nu, (Ip, Jp, Kp), n) for nu in nus])
    if np.abs(A[:, 1]).max() > _BUILD_TOL:
        raise StructureError("vertical rotation leaks into the J' direction")
    B = A[:, [0, 2]]  # rows: (I'-, K'-coords) of nu(n_i)
    sol = np.linalg.solve(B.T, np.array([[0.0, -1.0], [1.0, 0.0]]))
    xi = n_coefs @ sol  # columns: xi_1, xi_2 as h-coefficients
    lam1 = np.einsum("a,aij->ij", xi[:, 0], iso)
    lam2 = np.einsum("a,aij->ij", xi[:, 1], iso)
    nu1 = lam1 @ Jp - Jp @ lam1
    nu2 = lam2 @ Jp - Jp @ lam2
    if max(np.abs(nu1 - Kp).max(), np.abs(nu2 + Ip).max()) > _BUILD_TOL:
        raise StructureError("vertical normalization failed")

    hz_mats = np.einsum("ab,aij->bij", hz, H)
    xi_mats = np.einsum("ab,aij->bij", xi, H)
    mZ = np.concatenate([base.m_basis, xi_mats], axis=0)
    gZ = np.zeros((d + 2, d + 2))
    gZ[:d, :d] = base.metric.g
    gZ[d:, d:] = n * t * np.eye(2)
    space = ReductivePair(f"{base.name}-twistor", hz_mats, mZ, MetricData(gZ))

    # fiber rotation nu(xi) -> J' nu(xi) makes the structure integrable;
    # its reversal is the never-integrable partner
    fiber_rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    J = np.zeros((d + 2, d + 2))
    J[:d, :d] = Jp
    J[d:, d:] = fiber_rot if structure == "J1" else -fiber_rot
    hproj = np.zeros((d + 2, d + 2))
    hproj[:d, :d] = np.eye(d)
    vproj = np.eye(d + 2) - hproj
    K_tot = np.zeros((d + 2, d + 2))
    K_tot[:d, :d] = Kp
    I_tot = np.zeros((d + 2, d + 2))
    I_tot[:d, :d] = Ip

    # J and the splitting are invariant under the reduced isotropy; the
    # local frame (I, K) is only rotated inside its own span
    lamZ = space.isotropy
    for M in (J, hproj):
        resid = max(
            (np.abs(lamZ[a] @ M - M @ lamZ[a]).max() for a in range(lamZ.shape[0])),
            default=0.0,
        )
        if resid > _BUILD_TOL:
            raise StructureError("twistor structure is not isotropy invariant")
    span = np.stack([I_tot.reshape(-1), K_tot.reshape(-1)], axis=1)
    Q, _ = np.linalg.qr(span)
    for a in range(lamZ.shape[0]):
        for M in (I_tot, K_tot):
            v = (lamZ[a] @ M - M @ lamZ[a]).reshape(-1)
            if np.linalg.norm(v - Q @ (Q.T @ v)) > _BUILD_TOL:
                raise StructureError("isotropy does not preserve the (I, K) span")

    s_prime = base.scalar_curvature(base.curvature())
    frame = _adapted_frame(base, (Ip, Jp, Kp), n, t, J[d:, d:])
    FtgF = frame.T @ gZ @ frame
    if np.abs(FtgF - np.eye(d + 2)).max() > _BUILD_TOL:
        raise StructureError("adapted frame is not orthonormal")

    return TwistorSpace(
        space=space,
        base=base,
        triple=(Ip, Jp, Kp),
        n=n,
        t=float(t),
        structure=structure,
        J=J,
        hproj=hproj,
        vproj=vproj,
        K=K_tot,
        I=I_tot,
        s_prime=float(s_prime),
        frame=frame,
        n_coefs=xi,
    )


def oneill_a(tw: TwistorSpace) -> np.ndarray:
    """O'Neill A-tensor: A[i,j] = vertical part of nabla_{e_i} e_j, both horizontal."""
    lam = tw.space.levi_civita
    A = np.einsum("ba,iaj->ijb", tw.vproj, lam)
    # zero out rows/columns with vertical inputs
    h = np.diag(tw.hproj).astype(bool)
    A[~h, :, :] = 0.0
    A[:, ~h, :] = 0.0
    return A


def project_curvature(tw: TwistorSpace, R: DenseTensor, torsion: DenseTensor | None) -> DenseTensor:
    """Push a curvature tensor on Z down to the base through the submersion.

    With the characteristic torsion supplied, removes the vertical
    correction g(T(X,Y), T(Z,W)); with None, restricts plainly.
    """
    d = tw.base.dim
    Rh = np.asarray(R.a)[:d, :d, :d, :d].copy()
    if torsion is not None:
        Tl = np.asarray(torsion.a)
        corr = np.einsum(
            "ijs,st,klt->ijkl",
            Tl,
            tw.space.metric.inv,
            Tl,
        )[:d, :d, :d, :d]
        Rh = Rh - corr
    return form(Rh)


def fiber_norm_check(tw: TwistorSpace) -> float:
    """|model torsion|^2 minus the closed-form value; small at every t."""
    T = tw.torsion_model()
    predicted = (6.0 / tw.t) * (2.0 - tw.s_prime * tw.t / (2.0 * (tw.n + 2))) ** 2
    return abs(tensor_norm_sq(T, tw.space.metric) - predicted)
