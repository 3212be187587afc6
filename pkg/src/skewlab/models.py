"""The model quaternionic bases: the 4-sphere, quaternionic projective
spaces, and the complex projective plane.

Each model is a compact symmetric pair in an explicit matrix realization
(quaternion entries become complex 2x2 blocks), carrying a local
quaternionic frame (I', J', K') on the tangent space.  The canonical
normalizations are measured, not hard-coded: the metric starts as the
identity on the chosen m-basis and is rescaled so a distinguished
sectional curvature hits its target (1 for the round sphere, 4 for the
quaternionic/holomorphic planes).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .homogeneous import ReductivePair
from .reps import _QUNITS, sp_blocks
from .tensors import MetricData, standard_J

MODELS = ("s4", "hpn", "cp2")


def _embed(block: np.ndarray, p: int, q: int, nblocks: int) -> np.ndarray:
    out = np.zeros((2 * nblocks, 2 * nblocks), dtype=complex)
    out[2 * p : 2 * p + 2, 2 * q : 2 * q + 2] = block
    return out


def _sp_symmetric_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    """h- and m-bases of the pair behind quaternionic projective n-space.

    The group algebra is the compact symplectic algebra on n+1 quaternionic
    coordinates; the isotropy keeps the first n and the last one separate.
    m-basis ordering: (p, mu) for p < n, mu in (1, i, j, k).
    """
    nb = n + 1
    h = []
    for B in sp_blocks(n):
        M = np.zeros((2 * nb, 2 * nb), dtype=complex)
        M[: 2 * n, : 2 * n] = B
        h.append(M)
    for mu in ("i", "j", "k"):
        h.append(_embed(_QUNITS[mu], n, n, nb))
    m = []
    for p in range(n):
        for mu in ("1", "i", "j", "k"):
            B = _QUNITS[mu]
            m.append(_embed(B, p, n, nb) - _embed(B.conj().T, n, p, nb))
    return np.stack(h), np.stack(m)


def _su3_pair() -> tuple[np.ndarray, np.ndarray]:
    """h- and m-bases of the pair behind the complex projective plane.

    The group algebra is su(3); the isotropy is the traceless embedding of
    u(2).  m-basis ordering: (p, xi) for p in (0, 1), xi in (1, i), which
    realifies the complex 2-vector of the off-diagonal block.
    """
    h = []
    u2 = [
        np.array([[1j, 0], [0, 0]]),
        np.array([[0, 0], [0, 1j]]),
        np.array([[0, 1], [-1, 0]], dtype=complex),
        np.array([[0, 1j], [1j, 0]]),
    ]
    for A in u2:
        M = np.zeros((3, 3), dtype=complex)
        M[:2, :2] = A
        M[2, 2] = -np.trace(A)
        h.append(M)
    m = []
    for p in range(2):
        for xi in (1.0, 1j):
            M = np.zeros((3, 3), dtype=complex)
            M[p, 2] = xi
            M[2, p] = -np.conj(xi)
            m.append(M)
    return np.stack(h), np.stack(m)


def _right_mult_table(unit: str) -> np.ndarray:
    """Right multiplication by a quaternion unit on coordinates (1, i, j, k)."""
    table = {
        "i": [("i", 1, 0), ("1", -1, 1), ("k", -1, 2), ("j", 1, 3)],
        "j": [("j", 1, 0), ("k", 1, 1), ("1", -1, 2), ("i", -1, 3)],
        "k": [("k", 1, 0), ("j", -1, 1), ("i", 1, 2), ("1", -1, 3)],
    }
    order = {"1": 0, "i": 1, "j": 2, "k": 3}
    R = np.zeros((4, 4))
    for target, sign, col in table[unit]:
        R[order[target], col] = sign
    return R


def quaternionic_triple(model: str, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The local frame (I', J', K') on the model's m, with I'J' = K'."""
    if model in ("s4", "hpn"):
        Ri = np.kron(np.eye(n), _right_mult_table("i"))
        Rj = np.kron(np.eye(n), _right_mult_table("j"))
        Rk = np.kron(np.eye(n), _right_mult_table("k"))
        return Ri, Rj, -Rk
    if model == "cp2":
        # left multiplications by the standard su(2) frame on the realified
        # complex 2-vector coordinates (re v0, im v0, re v1, im v1)
        Ip = np.array(
            [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float
        )
        Jp = np.array(
            [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=float
        )
        return Ip, Jp, Ip @ Jp
    raise ParameterError(f"unknown model {model!r}")


def _distinguished_plane(model: str, n: int, triple) -> tuple[np.ndarray, np.ndarray]:
    """The plane whose sectional curvature pins the canonical scale."""
    d = 4 * n if model != "cp2" else 4
    X = np.zeros(d)
    X[0] = 1.0
    if model == "s4":
        Y = np.zeros(d)
        Y[1] = 1.0  # any plane: constant curvature
    elif model == "hpn":
        Y = triple[0] @ X  # quaternionic plane, the maximum 4
    else:
        Y = standard_J(4) @ X  # holomorphic plane of the invariant structure
    return X, Y


_SEC_TARGET = {"s4": 1.0, "hpn": 4.0, "cp2": 4.0}


def build_base(model: str, n: int = 1, scale: float = 1.0) -> tuple[ReductivePair, tuple]:
    """A model base space with its quaternionic frame.

    ``scale`` multiplies the canonically normalized metric (round unit
    sphere for s4; quaternionic sectional curvatures in [1, 4] for hpn;
    holomorphic sectional curvature 4 for cp2).
    """
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")
    if model in ("s4", "cp2") and n != 1:
        raise ParameterError(f"{model} requires n = 1")
    if n < 1:
        raise ParameterError("n must be at least 1")
    if not (scale > 0):
        raise ParameterError("scale must be positive")

    if model == "cp2":
        h, m = _su3_pair()
        d = 4
    else:
        h, m = _sp_symmetric_pair(n)
        d = 4 * n

    triple = quaternionic_triple(model, n)
    probe = ReductivePair(model, h, m, MetricData(np.eye(d)))
    R = probe.curvature()
    X, Y = _distinguished_plane(model, n, triple)
    sec = probe.sectional(R, X, Y)
    if sec <= 0:
        raise ParameterError(f"model {model} produced nonpositive curvature {sec}")
    c = scale * sec / _SEC_TARGET[model]
    pair = ReductivePair(model, h, m, MetricData(c * np.eye(d)))
    return pair, triple
