"""Distance-, density-, angle- and partition-based detectors."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import KMeans as _SkKMeans
from sklearn.ensemble import IsolationForest as _SkIsolationForest

from .base import (
    PROXIMITY,
    Detector,
    chunks,
    knn,
    pairwise,
    ridge_solve,
    target_columns,
)

_EPS = 1e-10


class KNN(Detector):
    name = "KNN"
    defaults = {"k": 10}
    bounds = {"k": (1, None)}

    def min_rows(self):
        return self.params["k"]

    def _fit(self, X):
        self.X_ = X.copy()

    def _score(self, X):
        d, _ = knn(X, self.X_, self.params["k"])
        return d.mean(axis=1)


class LOF(Detector):
    """Local outlier factor in novelty mode: queries are compared to training densities."""

    name = "LOF"
    defaults = {"k": 10}
    bounds = {"k": (1, None)}

    def min_rows(self):
        return self.params["k"] + 1

    def _fit(self, X):
        k = self.params["k"]
        d, idx = knn(X, X, k, exclude_self=True)
        self.X_ = X.copy()
        self.kdist_ = d[:, -1]
        reach = np.maximum(d, self.kdist_[idx])
        self.lrd_ = 1.0 / (reach.mean(axis=1) + _EPS)

    def _score(self, X):
        d, idx = knn(X, self.X_, self.params["k"])
        reach = np.maximum(d, self.kdist_[idx])
        lrd = 1.0 / (reach.mean(axis=1) + _EPS)
        return self.lrd_[idx].mean(axis=1) / lrd


class Sampling(Detector):
    """Distance to the nearest member of a random subsample of the training windows."""

    name = "Sampling"
    defaults = {"subset": 20}
    bounds = {"subset": (1, None)}

    def _fit(self, X):
        rng = np.random.default_rng(self.seed)
        m = min(self.params["subset"], X.shape[0])
        self.sample_ = X[np.sort(rng.choice(X.shape[0], m, replace=False))].copy()

    def _score(self, X):
        return pairwise(X, self.sample_).min(axis=1)


class SOS(Detector):
    """Stochastic outlier selection against a fixed set of training affinities.

    Each training window calibrates a Gaussian bandwidth to the requested
    perplexity.  A query's outlier probability is ``prod_j (1 - b_jq)`` where
    ``b_jq`` is the probability that training window ``j`` binds to the
    query.  The returned score is ``-log(-log p)``, which is monotone in
    ``p`` but stays finite and untied when ``p`` rounds to 1.
    """

    name = "SOS"
    defaults = {"perplexity": 4.5}
    bounds = {"perplexity": (1.0, None)}

    def min_rows(self):
        return 3

    def _fit(self, X):
        D2 = pairwise(X, X) ** 2
        np.fill_diagonal(D2, np.inf)
        perp = min(self.params["perplexity"], X.shape[0] - 1.5)
        self.beta_ = _calibrate_beta(D2, np.log(perp))
        self.logz_ = logsumexp(-self.beta_[:, None] * D2, axis=1)
        self.X_ = X.copy()

    def _score(self, X):
        out = np.empty(X.shape[0])
        for sl in chunks(X.shape[0], 256):
            loga = -self.beta_[None, :] * pairwise(X[sl], self.X_) ** 2
            logb = loga - np.logaddexp(self.logz_[None, :], loga)
            # log(-log1p(-b)), with -log1p(-b) ~ b once b is tiny
            with np.errstate(divide="ignore"):
                logc = np.where(
                    logb < -30.0, logb, np.log(-np.log1p(-np.exp(np.minimum(logb, -1e-12))))
                )
            out[sl] = -logsumexp(logc, axis=1)
        return out


def _calibrate_beta(D2: np.ndarray, target_entropy: float, iters: int = 64) -> np.ndarray:
    """Per-row precision so that the affinity distribution has the target entropy."""
    n = D2.shape[0]
    finite = np.where(np.isfinite(D2), D2, np.nan)
    scale = np.nanmedian(finite, axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    beta = 1.0 / scale
    for _ in range(iters):
        logits = -beta[:, None] * D2
        logp = logits - logsumexp(logits, axis=1, keepdims=True)
        p = np.exp(logp)
        H = -np.sum(p * np.where(np.isfinite(logp), logp, 0.0), axis=1)
        too_flat = H > target_entropy
        lo = np.where(too_flat, beta, lo)
        hi = np.where(too_flat, hi, beta)
        beta = np.where(np.isinf(hi), beta * 2.0, (lo + hi) / 2.0)
    return beta


class KMeans(Detector):
    name = "KMeans"
    defaults = {"n_clusters": 8}
    bounds = {"n_clusters": (1, None)}

    def _fit(self, X):
        self.centers_ = _kmeans(X, self.params["n_clusters"], self.seed).cluster_centers_

    def _score(self, X):
        return pairwise(X, self.centers_).min(axis=1)


def _kmeans(X, n_clusters, seed):
    n_clusters = min(n_clusters, X.shape[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return _SkKMeans(n_clusters=n_clusters, n_init=3, random_state=seed).fit(X)


class CBLOF(Detector):
    """Distance to the nearest large cluster centre (alpha/beta size split)."""

    name = "CBLOF"
    defaults = {"n_clusters": 8, "alpha": 0.9, "beta": 5.0}
    bounds = {"n_clusters": (2, None), "alpha": (0.5, 1.0), "beta": (1.0, None)}

    def _fit(self, X):
        km = _kmeans(X, self.params["n_clusters"], self.seed)
        centers = km.cluster_centers_
        sizes = np.bincount(km.labels_, minlength=centers.shape[0])
        order = np.argsort(-sizes, kind="stable")
        sorted_sizes = sizes[order]
        cum = np.cumsum(sorted_sizes)
        n_large = len(order)
        for b in range(len(order) - 1):
            if cum[b] >= self.params["alpha"] * X.shape[0]:
                n_large = b + 1
                break
            if sorted_sizes[b + 1] > 0 and sorted_sizes[b] / sorted_sizes[b + 1] >= self.params["beta"]:
                n_large = b + 1
                break
        self.centers_ = centers
        self.large_ = np.zeros(centers.shape[0], dtype=bool)
        self.large_[order[:n_large]] = True

    def _score(self, X):
        D = pairwise(X, self.centers_)
        nearest = D.argmin(axis=1)
        to_large = D[:, self.large_].min(axis=1)
        own = D[np.arange(X.shape[0]), nearest]
        return np.where(self.large_[nearest], own, to_large)


class COF(Detector):
    """Connectivity-based outlier factor (average chaining distance ratio)."""

    name = "COF"
    defaults = {"k": 10}
    bounds = {"k": (2, None)}

    def min_rows(self):
        return self.params["k"] + 1

    def _fit(self, X):
        _, idx = knn(X, X, self.params["k"], exclude_self=True)
        self.X_ = X.copy()
        self.ac_ = _chaining_distance(X, self.X_[idx])

    def _score(self, X):
        _, idx = knn(X, self.X_, self.params["k"])
        ac = _chaining_distance(X, self.X_[idx])
        return ac / np.maximum(self.ac_[idx].mean(axis=1), _EPS)


def _chaining_distance(points: np.ndarray, neigh: np.ndarray) -> np.ndarray:
    """Average chaining distance of each point along its set-based nearest path."""
    n, k, _ = neigh.shape
    V = np.concatenate([np.zeros_like(points)[:, None, :], neigh - points[:, None, :]], axis=1)
    sq = np.einsum("nij,nij->ni", V, V)
    G = np.einsum("nid,njd->nij", V, V)
    dist = np.sqrt(np.maximum(sq[:, :, None] + sq[:, None, :] - 2 * G, 0.0))
    rows = np.arange(n)
    chosen = np.zeros((n, k + 1), dtype=bool)
    chosen[:, 0] = True
    best = dist[:, 0, :].copy()
    weights = 2.0 * (k + 1 - np.arange(1, k + 1)) / (k * (k + 1))
    ac = np.zeros(n)
    for i in range(k):
        cand = np.where(chosen, np.inf, best)
        nxt = cand.argmin(axis=1)
        ac += weights[i] * cand[rows, nxt]
        chosen[rows, nxt] = True
        best = np.minimum(best, dist[rows, nxt, :])
    return ac


class IForest(Detector):
    """Isolation forest; scores are ``2 ** (-E[h] / c(n))`` in (0, 1]."""

    name = "IForest"
    defaults = {"n_estimators": 100, "max_samples": 256}
    bounds = {"n_estimators": (1, None), "max_samples": (2, None)}

    def _fit(self, X):
        self.model_ = _SkIsolationForest(
            n_estimators=self.params["n_estimators"],
            max_samples=min(self.params["max_samples"], X.shape[0]),
            random_state=self.seed,
        ).fit(X)

    def _score(self, X):
        return -self.model_.score_samples(X)


class INNE(Detector):
    """Isolation with nearest-neighbour hypersphere ensembles."""

    name = "INNE"
    defaults = {"n_estimators": 100, "max_samples": 8}
    bounds = {"n_estimators": (1, None), "max_samples": (2, None)}

    def min_rows(self):
        return 2

    def _fit(self, X):
        rng = np.random.default_rng(self.seed)
        psi = min(self.params["max_samples"], X.shape[0])
        self.models_ = []
        for _ in range(self.params["n_estimators"]):
            centers = X[rng.choice(X.shape[0], psi, replace=False)]
            D = pairwise(centers, centers)
            np.fill_diagonal(D, np.inf)
            nn = D.argmin(axis=1)
            radius = D[np.arange(psi), nn]
            self.models_.append((centers, radius, radius[nn]))

    def _score(self, X):
        total = np.zeros(X.shape[0])
        for centers, radius, nn_radius in self.models_:
            D = pairwise(X, centers)
            covered = D <= radius[None, :]
            masked = np.where(covered, radius[None, :], np.inf)
            best = masked.argmin(axis=1)
            r = radius[best]
            ratio = np.divide(nn_radius[best], r, out=np.ones_like(r), where=r > 0)
            iso = np.where(r > 0, 1.0 - ratio, 0.0)
            total += np.where(covered.any(axis=1), iso, 1.0)
        return total / len(self.models_)


class ABOD(Detector):
    """Fast angle-based outlier degree over ``k`` neighbours, negated."""

    name = "ABOD"
    defaults = {"k": 10}
    bounds = {"k": (2, None)}

    def min_rows(self):
        return 3

    def _fit(self, X):
        self.X_ = X.copy()

    def _score(self, X):
        k = min(self.params["k"] + 1, self.X_.shape[0])
        out = np.empty(X.shape[0])
        for sl in chunks(X.shape[0], 512):
            d, idx = knn(X[sl], self.X_, k)
            V = self.X_[idx] - X[sl][:, None, :]
            n2 = d**2
            valid = d > 1e-12
            # keep at most k non-coincident neighbours
            valid &= np.cumsum(valid, axis=1) <= self.params["k"]
            G = np.einsum("nid,njd->nij", V, V)
            safe = np.where(valid, n2, 1.0)
            F = G / (safe[:, :, None] * safe[:, None, :])
            pair = valid[:, :, None] & valid[:, None, :]
            pair &= np.triu(np.ones((k, k), dtype=bool), 1)[None]
            cnt = pair.sum(axis=(1, 2))
            mean = np.where(pair, F, 0.0).sum(axis=(1, 2)) / np.maximum(cnt, 1)
            var = np.where(pair, (F - mean[:, None, None]) ** 2, 0.0).sum(axis=(1, 2)) / np.maximum(cnt, 1)
            out[sl] = -var
        return out


class QMCD(Detector):
    """Wrap-around quasi-Monte Carlo discrepancy of a query against the training windows.

    Training windows are min-max scaled to the unit cube; queries are scaled
    with the same bounds and clipped.  The score is the negative log of the
    query's mean wrap-around kernel with the training set.
    """

    name = "QMCD"

    def _fit(self, X):
        self.lo_ = X.min(axis=0)
        span = X.max(axis=0) - self.lo_
        self.span_ = np.where(span > 0, span, 1.0)
        self.U_ = (X - self.lo_) / self.span_

    def _score(self, X):
        U = np.clip((X - self.lo_) / self.span_, 0.0, 1.0)
        out = np.empty(X.shape[0])
        step = max(1, 4_000_000 // max(1, self.U_.size))
        for sl in chunks(X.shape[0], step):
            delta = np.abs(U[sl][:, None, :] - self.U_[None, :, :])
            log_terms = np.log(1.5 - delta * (1.0 - delta)).sum(axis=2)
            out[sl] = -(logsumexp(log_terms, axis=1) - np.log(self.U_.shape[0]))
        return out


class PCA(Detector):
    """Reconstruction error after projecting onto the leading principal components."""

    name = "PCA"
    defaults = {"variance": 0.9}
    bounds = {"variance": (0.0, 1.0)}

    def _fit(self, X):
        self.mean_ = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - self.mean_, full_matrices=False)
        var = s**2
        if var.sum() <= 0:
            self.components_ = vt[:0]
            return
        q = int(np.searchsorted(np.cumsum(var) / var.sum(), self.params["variance"] - 1e-12) + 1)
        self.components_ = vt[: min(q, vt.shape[0])]

    def _score(self, X):
        C = X - self.mean_
        resid = C - (C @ self.components_.T) @ self.components_
        return np.linalg.norm(resid, axis=1)


class CD(Detector):
    """Cook's distance of a query as if appended to the training regression.

    The final time step of each window is regressed on the remaining
    coordinates.  For a new point with in-sample leverage ``h`` and residual
    ``e`` the augmented-fit Cook's distance is ``e^2 h / ((1 + h) p s^2)``.
    """

    name = "CD"

    def min_rows(self):
        return 3

    def _fit(self, X):
        tgt = target_columns(X.shape[1], self.n_dims)
        self.tgt_ = tgt
        self.pred_ = np.setdiff1d(np.arange(X.shape[1]), tgt)
        A = self._design(X)
        self.coef_ = ridge_solve(A, X[:, tgt])
        G = A.T @ A
        lam = 1e-8 * max(np.trace(G) / G.shape[0], 1.0)
        self.ginv_ = np.linalg.inv(G + lam * np.eye(G.shape[0]))
        resid = X[:, tgt] - A @ self.coef_
        p = A.shape[1]
        dof = X.shape[0] - p if X.shape[0] > p else X.shape[0]
        self.p_ = p
        self.s2_ = max(float(np.sum(resid**2)) / (dof * len(tgt)), 1e-12)

    def _design(self, X):
        return np.column_stack([np.ones(X.shape[0]), X[:, self.pred_]])

    def _score(self, X):
        A = self._design(X)
        e2 = np.sum((X[:, self.tgt_] - A @ self.coef_) ** 2, axis=1) / len(self.tgt_)
        h = np.maximum(np.einsum("ij,jk,ik->i", A, self.ginv_, A), 0.0)
        return e2 * h / ((1.0 + h) * self.p_ * self.s2_)


class SOD(Detector):
    """Subspace outlier degree using the ``k`` nearest training windows as reference set."""

    name = "SOD"
    defaults = {"k": 10, "alpha": 0.8}
    bounds = {"k": (2, None), "alpha": (0.0, 1.0)}

    def min_rows(self):
        return self.params["k"]

    def _fit(self, X):
        self.X_ = X.copy()

    def _score(self, X):
        out = np.empty(X.shape[0])
        for sl in chunks(X.shape[0], 512):
            _, idx = knn(X[sl], self.X_, self.params["k"])
            R = self.X_[idx]
            mu = R.mean(axis=1)
            var = R.var(axis=1)
            sel = var < self.params["alpha"] * var.mean(axis=1, keepdims=True)
            dev = np.where(sel, (X[sl] - mu) ** 2, 0.0).sum(axis=1)
            out[sl] = np.sqrt(dev) / np.maximum(sel.sum(axis=1), 1)
        return out
