"""Least squares via Householder QR, minimum-norm SVD fallback on rank loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


@dataclass(frozen=True)
class LstsqResult:
    coef: np.ndarray  # (p,) or (p, k)
    rank: int
    residual_norms: np.ndarray  # one per right-hand side
    rank_deficient: bool
    method: str  # "qr" or "svd-min-norm"


def solve_least_squares(A, B, rcond: float | None = None) -> LstsqResult:
    """Minimise ||A x - b|| for each column b of B.

    Full column rank is detected from the diagonal of R; when any
    ``|R_jj| <= rcond * max|R_ii|`` the minimum-norm solution is returned
    instead and ``rank_deficient`` is set.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    vector = B.ndim == 1
    B2 = B[:, None] if vector else B
    m, p = A.shape
    if B2.shape[0] != m:
        raise ValueError(f"A has {m} rows but B has {B2.shape[0]}")
    if rcond is None:
        rcond = max(m, p) * np.finfo(float).eps

    coef = None
    if m >= p and p > 0:
        Q, R = np.linalg.qr(A, mode="reduced")
        diag = np.abs(np.diag(R))
        if diag.min() > rcond * diag.max():
            coef = solve_triangular(R, Q.T @ B2, lower=False)
            rank, method = p, "qr"
    if coef is None:
        coef, _, rank, _ = np.linalg.lstsq(A, B2, rcond=rcond)
        rank, method = int(rank), "svd-min-norm"

    resid = np.linalg.norm(B2 - A @ coef, axis=0)
    if vector:
        coef = coef[:, 0]
    return LstsqResult(coef, rank, resid, rank < p, method)
