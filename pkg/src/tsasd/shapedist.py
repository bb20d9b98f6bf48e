"""Shape-based distance and k-means clustering under it.

``sbd(x, y) = 1 - max_s CC_s(x, y) / (||x|| ||y||)`` where ``CC_s`` is the
zero-padded cross-correlation at integer shift ``s``.  Sequences are used as
given (no z-normalisation).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ValidationError

DIRECT_MAX_LEN = 256
ZERO_TOL = 1e-12


def _snap(d):
    # rounding leaves identical shapes ~1e-16 apart; report them as coincident
    return np.where(d < ZERO_TOL, 0.0, d)


def _as_seq(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValidationError("sequences must be non-empty and finite")
    return arr


def _ncc_direct(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.correlate(x, y, mode="full")


def _ncc_fft(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    m = x.shape[0]
    size = 1 << int(np.ceil(np.log2(2 * m - 1)))
    cc = np.fft.irfft(np.fft.rfft(x, size) * np.conj(np.fft.rfft(y, size)), size)
    # reorder to shifts -(m-1) .. (m-1) to match np.correlate(x, y, "full")
    return np.concatenate((cc[-(m - 1) :], cc[:m])) if m > 1 else cc[:1]


def cross_correlation(x, y, method: str = "auto") -> np.ndarray:
    """Cross-correlation at every shift; index ``m - 1`` is shift 0."""
    x, y = _as_seq(x), _as_seq(y)
    if x.shape != y.shape:
        raise ValidationError("sequences must have equal length")
    if method == "auto":
        method = "direct" if x.shape[0] < DIRECT_MAX_LEN else "fft"
    if method == "direct":
        return _ncc_direct(x, y)
    if method == "fft":
        return _ncc_fft(x, y)
    raise ValueError(f"unknown method {method!r}")


def sbd(x, y, method: str = "auto") -> float:
    """Shape-based distance in [0, 2].

    Two all-zero sequences are at distance 0; an all-zero sequence against a
    non-zero one is at distance 1 (no correlation either way).
    """
    x, y = _as_seq(x), _as_seq(y)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 and ny == 0:
        return 0.0
    if nx == 0 or ny == 0:
        return 1.0
    cc = cross_correlation(x, y, method)
    return float(_snap(np.clip(1.0 - cc.max() / (nx * ny), 0.0, 2.0)))


def best_shift(x, y) -> int:
    """Shift ``s`` maximising the correlation of ``x`` with ``y`` shifted by ``s``."""
    cc = cross_correlation(x, y)
    return int(np.argmax(cc)) - (len(cc) + 1) // 2 + 1


def shift(x, s: int) -> np.ndarray:
    """Shift right by ``s`` (left when negative), zero padding the vacated slots."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x.shape[0]
    if s >= 0:
        out[s:] = x[: m - s] if s < m else out[s:]
    else:
        out[: m + s] = x[-s:]
    return out


def sbd_matrix(A, B=None) -> np.ndarray:
    """All-pairs SBD between the rows of ``A`` and ``B`` via batched FFTs."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValidationError("sequences must have equal length")
    m = A.shape[1]
    size = 1 << int(np.ceil(np.log2(max(2 * m - 1, 1))))
    FA = np.fft.rfft(A, size, axis=1)
    FB = np.conj(np.fft.rfft(B, size, axis=1))
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, 2_000_000 // max(1, B.shape[0] * size))
    for i in range(0, A.shape[0], step):
        cc = np.fft.irfft(FA[i : i + step, None, :] * FB[None, :, :], size, axis=2)
        if m > 1:
            cc = np.concatenate((cc[..., -(m - 1) :], cc[..., :m]), axis=2)
        else:
            cc = cc[..., :1]
        denom = na[i : i + step, None] * nb[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            d = 1.0 - cc.max(axis=2) / denom
        both_zero = (na[i : i + step, None] == 0) & (nb[None, :] == 0)
        d = np.where(denom > 0, d, np.where(both_zero, 0.0, 1.0))
        out[i : i + step] = _snap(np.clip(d, 0.0, 2.0))
    return out


@dataclass
class SbdClustering:
    assignments: np.ndarray
    centroids: np.ndarray
    intra: np.ndarray
    objective_history: list = field(default_factory=list)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=len(self.centroids))

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)


def _aligned_mean(members: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    """Mean of the members after aligning each to the member nearest ``centroid``.

    Aligning to an actual member (rather than the running centroid) stops the
    zero padding introduced by shifting from accumulating across iterations.
    """
    ref = members[int(np.argmin(sbd_matrix(members, centroid[None, :])[:, 0]))]
    if not np.any(ref):
        return members.mean(axis=0)
    return np.mean([shift(x, best_shift(ref, x)) for x in members], axis=0)


def _plusplus_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = sbd_matrix(X, X[chosen])[:, 0]
    while len(chosen) < K:
        weights = closest**2
        weights[chosen] = 0.0
        if weights.sum() <= 0:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        else:
            nxt = int(rng.choice(n, p=weights / weights.sum()))
        chosen.append(nxt)
        closest = np.minimum(closest, sbd_matrix(X, X[nxt : nxt + 1])[:, 0])
    return X[chosen].copy()


def sbd_kmeans(seqs, K: int, seed: int = 0, max_iter: int = 100) -> SbdClustering:
    """Lloyd-style k-means with SBD assignment and shift-aligned mean centroids.

    A recomputed centroid is only accepted if it does not raise its cluster's
    summed SBD, so the objective never increases.  Empty clusters are
    re-seeded from the sequence farthest from its centroid.
    """
    X = np.atleast_2d(np.asarray(seqs, dtype=float))
    n = X.shape[0]
    if not 1 <= K <= n:
        raise ValidationError(f"K={K} must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(X, K, rng)
    assign = np.full(n, -1)
    history = []
    for _ in range(max_iter):
        D = sbd_matrix(X, centroids)
        new = D.argmin(axis=1)
        for c in range(K):
            if not np.any(new == c):
                far = int(np.argmax(D[np.arange(n), new]))
                centroids[c] = X[far]
                D[:, c] = sbd_matrix(X, X[far : far + 1])[:, 0]
                new = D.argmin(axis=1)
        history.append(float(D[np.arange(n), new].sum()))
        if np.array_equal(new, assign):
            break
        assign = new
        for c in range(K):
            mem = X[assign == c]
            cand = _aligned_mean(mem, centroids[c])
            old_cost = sbd_matrix(mem, centroids[c : c + 1]).sum()
            if sbd_matrix(mem, cand[None, :]).sum() <= old_cost:
                centroids[c] = cand
        history.append(float(sbd_matrix(X, centroids)[np.arange(n), assign].sum()))
    D = sbd_matrix(X, centroids)
    intra = np.array([D[assign == c, c].mean() if np.any(assign == c) else 0.0 for c in range(K)])
    return SbdClustering(assign, centroids, intra, history)


def most_concentrated_cluster(c: SbdClustering, min_size: int = 1) -> int:
    """Cluster with the smallest mean member-to-centroid SBD.

    Ties go to the larger cluster, then the lower index.  Clusters with fewer
    than ``min_size`` members are skipped when any cluster qualifies.
    """
    sizes = c.sizes
    eligible = sizes >= min_size
    if not eligible.any():
        eligible = sizes > 0
    keys = [(c.intra[i], -sizes[i], i) for i in range(len(sizes)) if eligible[i]]
    return int(min(keys)[2])
