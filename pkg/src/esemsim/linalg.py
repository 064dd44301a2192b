"""Dense complex linear-algebra kernels used throughout the simulator.

All routines are deterministic for a fixed input and follow a common
phase convention so that results are reproducible across LAPACK builds.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, RankDeficit, SingularGroup

# Singular values below RANK_REL_TOL * s_max count as zero.
RANK_REL_TOL = 1e-9
# Condition-number cap for inverting H H^H in the zero-forcing right inverse.
ZF_COND_CAP = 1e10


@dataclass(frozen=True)
class OrderedSvd:
    """Full SVD A = U diag(S) V^H with singular values sorted descending."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def _fix_column_phases(u: np.ndarray, v: np.ndarray) -> None:
    """Rotate singular-vector phases in place so the largest-magnitude entry
    of each column of U is real positive. Paired V columns are co-rotated to
    preserve the reconstruction."""
    n_pair = min(u.shape[1], v.shape[1])
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        a = u[i, j]
        if np.abs(a) > 0.0:
            phase = a / np.abs(a)
            u[:, j] *= np.conj(phase)
            if j < n_pair:
                v[:, j] *= np.conj(phase)
    # Extra V columns (wide matrices) have no U partner; fix them separately.
    for j in range(n_pair, v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        a = v[i, j]
        if np.abs(a) > 0.0:
            v[:, j] *= np.conj(a / np.abs(a))


def ordered_svd(a: np.ndarray) -> OrderedSvd:
    """Full SVD with descending singular values and fixed column phases.

    U is always square (rows x rows) so the rightmost columns spanning the
    left nullspace exist even for tall matrices.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInput(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix contains non-finite entries")
    a = a.astype(np.complex128, copy=False)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    v = vh.conj().T.copy()
    u = u.copy()
    _fix_column_phases(u, v)
    return OrderedSvd(u=u, s=s, v=v)


def numeric_rank(s: np.ndarray) -> int:
    """Rank under the shared relative singular-value threshold."""
    if len(s) == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_REL_TOL * s[0]))


def left_nullspace_basis(a: np.ndarray, dims: int) -> np.ndarray:
    """Orthonormal basis R (rightmost left singular vectors) with R^H A ~ 0.

    Raises RankDeficit if the left nullspace has fewer than `dims`
    dimensions under the rank threshold.
    """
    if dims < 0:
        raise InvalidInput("dims must be nonnegative")
    svd = ordered_svd(a)
    achievable = a.shape[0] - numeric_rank(svd.s)
    if dims > achievable:
        raise RankDeficit(requested=dims, achievable=achievable)
    if dims == 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    return svd.u[:, a.shape[0] - dims:]


def zf_right_inverse(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-normalized zero-forcing right inverse of a fat full-row-rank H.

    Returns (T, gains) with T = H^H (H H^H)^{-1} W^{1/2}, unit-norm columns,
    H T = diag(W^{1/2}), and gains = diag(W) (squared normalization entries).
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] < 1:
        raise InvalidInput(f"expected a 2-D matrix, got shape {h.shape}")
    if h.shape[0] > h.shape[1]:
        raise InvalidInput("H must have rows <= cols for a right inverse")
    if not np.all(np.isfinite(h)):
        raise InvalidInput("matrix contains non-finite entries")

    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] <= 0.0 or s[-1] < RANK_REL_TOL * s[0]:
        raise SingularGroup("stacked rows are rank deficient")
    # cond(H H^H) = (s_max / s_min)^2
    if (s[0] / s[-1]) ** 2 > ZF_COND_CAP:
        raise SingularGroup(
            f"H H^H condition number {(s[0] / s[-1]) ** 2:.3e} exceeds cap"
        )

    gram = h @ h.conj().T
    # H^H (H H^H)^{-1} == (solve(G, H))^H since G is Hermitian.
    t_raw = np.linalg.solve(gram, h).conj().T
    col_norms = np.linalg.norm(t_raw, axis=0)
    t = t_raw / col_norms
    gains = 1.0 / col_norms**2
    return t, gains
