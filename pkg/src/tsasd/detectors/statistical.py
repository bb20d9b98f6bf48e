"""Detectors built on empirical or parametric distribution models."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import logsumexp
from scipy.stats import skew
from sklearn.mixture import GaussianMixture

from .base import STATISTICAL, Detector, DetectorError, chunks, pairwise

_FLOOR = 1e-12
_RIDGE = 1e-9


class KDE(Detector):
    """Negative log density under an isotropic Gaussian KDE (Scott bandwidth)."""

    name = "KDE"
    family = STATISTICAL
    defaults = {"bandwidth_floor": 1e-6}

    def _fit(self, X):
        n, d = X.shape
        spread = np.sqrt(X.var(axis=0).mean())
        self.h_ = max(spread * n ** (-1.0 / (d + 4)), self.params["bandwidth_floor"])
        self.X_ = X.copy()
        self.const_ = np.log(n) + 0.5 * d * np.log(2 * np.pi * self.h_**2)

    def _score(self, X):
        out = np.empty(X.shape[0])
        for sl in chunks(X.shape[0], 512):
            D2 = pairwise(X[sl], self.X_) ** 2
            out[sl] = self.const_ - logsumexp(-D2 / (2 * self.h_**2), axis=1)
        return out


class GMM(Detector):
    name = "GMM"
    family = STATISTICAL
    defaults = {"n_components": 4, "covariance_floor": 1e-6}
    bounds = {"n_components": (1, None), "covariance_floor": (0.0, None)}

    def _fit(self, X):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.model_ = GaussianMixture(
                n_components=min(self.params["n_components"], X.shape[0]),
                covariance_type="full",
                reg_covar=self.params["covariance_floor"],
                random_state=self.seed,
            ).fit(X)

    def _score(self, X):
        return -self.model_.score_samples(X)


def _histograms(Z: np.ndarray, n_bins: int):
    """Per-column equal-width histograms; degenerate columns get one centred bin."""
    lo = Z.min(axis=0)
    hi = Z.max(axis=0)
    flat = hi <= lo
    lo = np.where(flat, lo - 0.5, lo)
    hi = np.where(flat, hi + 0.5, hi)
    width = (hi - lo) / n_bins
    counts = np.zeros((Z.shape[1], n_bins))
    bins = _bin_index(Z, lo, width, n_bins)
    for j in range(Z.shape[1]):
        counts[j] = np.bincount(bins[:, j], minlength=n_bins)
    return lo, width, counts


def _bin_index(Z, lo, width, n_bins):
    b = np.floor((Z - lo) / width).astype(np.int64)
    # the right edge belongs to the last bin
    return np.where(b == n_bins, n_bins - 1, b)


def _lookup(Z, lo, width, table, n_bins):
    b = _bin_index(Z, lo, width, n_bins)
    inside = (b >= 0) & (b < n_bins)
    cols = np.broadcast_to(np.arange(Z.shape[1]), Z.shape)
    vals = table[cols, np.clip(b, 0, n_bins - 1)]
    return np.where(inside, vals, 0.0)


class HBOS(Detector):
    """Sum over features of -log(normalised histogram height)."""

    name = "HBOS"
    family = STATISTICAL
    defaults = {"n_bins": 10}
    bounds = {"n_bins": (2, None)}

    def _fit(self, X):
        self.lo_, self.width_, counts = _histograms(X, self.params["n_bins"])
        self.height_ = counts / counts.max(axis=1, keepdims=True)

    def _score(self, X):
        h = _lookup(X, self.lo_, self.width_, self.height_, self.params["n_bins"])
        return -np.log(np.maximum(h, _FLOOR)).sum(axis=1)


class LODA(Detector):
    """Negative mean log-probability over sparse random projections."""

    name = "LODA"
    family = STATISTICAL
    defaults = {"n_projections": 100, "n_bins": 10}
    bounds = {"n_projections": (1, None), "n_bins": (2, None)}

    def _fit(self, X):
        rng = np.random.default_rng(self.seed)
        d = X.shape[1]
        nnz = max(1, int(round(np.sqrt(d))))
        W = np.zeros((d, self.params["n_projections"]))
        for j in range(W.shape[1]):
            W[rng.choice(d, nnz, replace=False), j] = rng.standard_normal(nnz)
        self.W_ = W
        self.lo_, self.width_, counts = _histograms(X @ W, self.params["n_bins"])
        self.prob_ = counts / X.shape[0]

    def _score(self, X):
        p = _lookup(X @ self.W_, self.lo_, self.width_, self.prob_, self.params["n_bins"])
        return -np.log(np.maximum(p, _FLOOR)).mean(axis=1)


class _ECDFModel(Detector):
    """Per-feature empirical tail probabilities.

    Tail probabilities are taken over the training windows plus the query
    itself, so they never reach zero.
    """

    family = STATISTICAL

    def _fit(self, X):
        self.sorted_ = np.sort(X, axis=0)
        sk = skew(X, axis=0, bias=True)
        self.skew_ = np.where(np.isfinite(sk), sk, 0.0)

    def _tails(self, X):
        n = self.sorted_.shape[0]
        left = np.empty_like(X)
        right = np.empty_like(X)
        for j in range(X.shape[1]):
            col = self.sorted_[:, j]
            left[:, j] = np.searchsorted(col, X[:, j], side="right")
            right[:, j] = n - np.searchsorted(col, X[:, j], side="left")
        u_left = -np.log((left + 1.0) / (n + 1.0))
        u_right = -np.log((right + 1.0) / (n + 1.0))
        return u_left, u_right


class COPOD(_ECDFModel):
    """Copula-based tails: max of the left, right and skew-corrected sums."""

    name = "COPOD"

    def _score(self, X):
        ul, ur = self._tails(X)
        us = np.where(self.skew_ < 0, ul, ur)
        return np.maximum.reduce([ul.sum(axis=1), ur.sum(axis=1), us.sum(axis=1)])


class ECOD(_ECDFModel):
    """Sum over features of the more extreme one-sided tail score."""

    name = "ECOD"

    def _score(self, X):
        ul, ur = self._tails(X)
        return np.maximum(ul, ur).sum(axis=1)


class MAD(Detector):
    """Largest robust z-score |x - median| / (1.4826 * MAD) over features."""

    name = "MAD"
    family = STATISTICAL

    def _fit(self, X):
        self.median_ = np.median(X, axis=0)
        mad = np.median(np.abs(X - self.median_), axis=0) * 1.4826
        self.scale_ = np.maximum(mad, _RIDGE)

    def _score(self, X):
        return (np.abs(X - self.median_) / self.scale_).max(axis=1)


class MSD(Detector):
    """Largest z-score |x - mean| / std over features."""

    name = "MSD"
    family = STATISTICAL

    def _fit(self, X):
        self.mean_ = X.mean(axis=0)
        self.scale_ = np.maximum(X.std(axis=0), _RIDGE)

    def _score(self, X):
        return (np.abs(X - self.mean_) / self.scale_).max(axis=1)


class MCD(Detector):
    """Mahalanobis distance under a FAST-MCD style robust location/scatter.

    Several random elemental starts are refined with concentration steps on
    ``h = ceil(support_fraction * n)`` points; the smallest-determinant fit
    wins.  A small ridge keeps near-singular window covariances invertible.
    """

    name = "MCD"
    family = STATISTICAL
    defaults = {"support_fraction": 0.75, "n_starts": 10, "max_steps": 30}
    bounds = {"support_fraction": (0.5, 1.0), "n_starts": (1, None), "max_steps": (1, None)}

    def min_rows(self):
        return 2

    def _fit(self, X):
        n, d = X.shape
        h = min(n, max(int(np.ceil(self.params["support_fraction"] * n)), 2))
        rng = np.random.default_rng(self.seed)
        base_ridge = max(_RIDGE, 1e-6 * float(X.var(axis=0).mean()))
        best = None
        for _ in range(self.params["n_starts"]):
            subset = rng.choice(n, min(n, max(d + 1, 2)), replace=False)
            loc, prec, _ = _gaussian(X[subset], base_ridge)
            logdet = np.inf
            for _ in range(self.params["max_steps"]):
                md = _mahalanobis2(X, loc, prec)
                subset = np.sort(np.argsort(md, kind="stable")[:h])
                cand = _gaussian(X[subset], base_ridge)
                if cand[2] >= logdet - 1e-10:
                    break
                loc, prec, logdet = cand
            if best is None or logdet < best[2]:
                best = (loc, prec, logdet)
        self.location_, self.precision_, _ = best

    def _score(self, X):
        return np.sqrt(_mahalanobis2(X, self.location_, self.precision_))


def _gaussian(X, ridge):
    loc = X.mean(axis=0)
    C = X - loc
    cov = C.T @ C / X.shape[0] + ridge * np.eye(X.shape[1])
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise DetectorError("covariance is not positive definite")
    return loc, np.linalg.inv(cov), logdet


def _mahalanobis2(X, loc, prec):
    C = X - loc
    return np.maximum(np.einsum("ij,jk,ik->i", C, prec, C), 0.0)
