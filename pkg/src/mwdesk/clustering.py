"""Typical-action clustering: k-means over differential S-parameter features.

`ActionKMeans` is a scikit-learn style estimator (fit / predict / get_params)
implementing Lloyd's algorithm with k-means++ seeding, so the clusterer and
its within-cluster objective stay fully inspectable: the per-iteration
objective history backs the monotonicity checks, and degenerate empty
clusters are re-seeded at the sample farthest from its centroid.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .perturb import PerturbationSample


class ActionKMeans(BaseEstimator, ClusterMixin):
    """Lloyd k-means with k-means++ seeding, deterministic under random_state.

    Parameters
    ----------
    n_clusters : cluster count k
    n_init : independent seedings; the run with the lowest objective wins
    max_iter : Lloyd iteration cap per run
    random_state : seed for the k-means++ draws

    Attributes (after fit)
    ----------------------
    cluster_centers_ : (k, d) centroids
    labels_ : (n,) nearest-centroid assignment, ties to the lowest id
    inertia_ : summed squared distances J
    inertia_history_ : J after every Lloyd iteration of the winning run
    n_iter_ : iterations of the winning run
    """

    def __init__(self, n_clusters: int = 5, n_init: int = 1, max_iter: int = 500,
                 random_state: int = 0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("X must be a non-empty 2-d array")
        if not 1 <= self.n_clusters <= len(X):
            raise ValueError(f"need 1 <= k <= {len(X)}, got k={self.n_clusters}")
        best = None
        for run in range(self.n_init):
            rng = np.random.default_rng(np.random.SeedSequence([self.random_state, run]))
            result = self._lloyd(X, rng)
            if best is None or result[0] < best[0]:
                best = result
        self.inertia_, self.cluster_centers_, self.labels_, self.inertia_history_, \
            self.n_iter_ = best
        return self

    def _lloyd(self, X, rng):
        centers = self._kmeanspp(X, rng)
        labels = self._assign(X, centers)
        history = []
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            for j in range(self.n_clusters):
                members = X[labels == j]
                if len(members):
                    centers[j] = members.mean(axis=0)
                else:
                    # re-seed an empty cluster at the sample farthest from its centroid
                    d = np.linalg.norm(X - centers[labels], axis=1)
                    centers[j] = X[int(np.argmax(d))]
            new_labels = self._assign(X, centers)
            history.append(float(((X - centers[new_labels]) ** 2).sum()))
            if np.array_equal(new_labels, labels):
                labels = new_labels
                break
            labels = new_labels
        inertia = float(((X - centers[labels]) ** 2).sum())
        return inertia, centers, labels, history, n_iter

    def _kmeanspp(self, X, rng):
        centers = np.empty((self.n_clusters, X.shape[1]))
        centers[0] = X[rng.integers(len(X))]
        for j in range(1, self.n_clusters):
            d2 = np.min(((X[:, None, :] - centers[None, :j, :]) ** 2).sum(axis=2), axis=1)
            total = d2.sum()
            if total > 0:
                idx = rng.choice(len(X), p=d2 / total)
            else:
                idx = rng.integers(len(X))
            centers[j] = X[idx]
        return centers

    @staticmethod
    def _assign(X, centers):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)  # argmin takes the lowest id on ties

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.cluster_centers_.shape[1]:
            raise ValueError(
                f"feature length {X.shape[-1]} does not match centroids "
                f"({self.cluster_centers_.shape[1]})")
        return self._assign(np.atleast_2d(X), self.cluster_centers_)


@dataclass(frozen=True)
class ActionClusterModel:
    """Fitted clustering plus per-cluster effect magnitudes and prune flags."""

    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    effect_magnitude: np.ndarray  # mean ||feature||_2 of member samples
    negligible: np.ndarray
    seed: int
    inertia: float

    def effective_clusters(self) -> list[int]:
        return [int(j) for j in range(self.k) if not self.negligible[j]]

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)


def fit_action_clusters(samples: Sequence[PerturbationSample], k: int, seed: int,
                        n_init: int = 10) -> ActionClusterModel:
    """Cluster a perturbation dataset; no negligible flags yet (see prune)."""
    if not samples:
        raise ValueError("no samples to cluster")
    X = np.stack([s.feature for s in samples])
    est = ActionKMeans(n_clusters=k, n_init=n_init, random_state=seed).fit(X)
    norms = np.linalg.norm(X, axis=1)
    mags = np.array([norms[est.labels_ == j].mean() if np.any(est.labels_ == j) else 0.0
                     for j in range(k)])
    return ActionClusterModel(k=k, centroids=est.cluster_centers_, assignments=est.labels_,
                              effect_magnitude=mags, negligible=np.zeros(k, dtype=bool),
                              seed=seed, inertia=est.inertia_)


def prune_negligible(model: ActionClusterModel, tau: float = 0.05) -> ActionClusterModel:
    """Flag clusters whose mean effect magnitude is below tau * the largest."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    threshold = tau * model.effect_magnitude.max()
    flags = model.effect_magnitude < threshold
    if flags.all():
        raise ValueError("no effective actions: every cluster is negligible")
    return ActionClusterModel(model.k, model.centroids, model.assignments,
                              model.effect_magnitude, flags, model.seed, model.inertia)


def assign(model: ActionClusterModel, feature: np.ndarray) -> int:
    """Nearest-centroid cluster id; ties break to the lowest id."""
    feature = np.asarray(feature, dtype=float)
    if feature.shape != (model.centroids.shape[1],):
        raise ValueError(f"feature length {feature.shape} does not match centroids "
                         f"({model.centroids.shape[1]})")
    d2 = ((model.centroids - feature[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def save_cluster_model(model: ActionClusterModel, path) -> None:
    doc = {
        "format": "mwdesk-cluster-model/1",
        "k": model.k,
        "seed": model.seed,
        "inertia": model.inertia,
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "assignments": [int(v) for v in model.assignments],
        "effect_magnitude": [float(v) for v in model.effect_magnitude],
        "negligible": [bool(v) for v in model.negligible],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_cluster_model(path) -> ActionClusterModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "mwdesk-cluster-model/1":
        raise ValueError("not a cluster model file")
    return ActionClusterModel(
        k=int(doc["k"]),
        centroids=np.array(doc["centroids"], dtype=float),
        assignments=np.array(doc["assignments"], dtype=int),
        effect_magnitude=np.array(doc["effect_magnitude"], dtype=float),
        negligible=np.array(doc["negligible"], dtype=bool),
        seed=int(doc["seed"]),
        inertia=float(doc["inertia"]),
    )


def cluster_report(model: ActionClusterModel, samples: Sequence[PerturbationSample],
                   frequencies: np.ndarray, out_dir) -> list[Path]:
    """Assignment table plus one mean differential-S11 curve per effective cluster."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    table = out / "assignments.csv"
    with open(table, "w", newline="\n") as fh:
        fh.write("vertex,direction,delta_mm,cluster,negligible\n")
        for s, label in zip(samples, model.assignments):
            fh.write(f"{s.action.vertex},{s.action.direction},{s.action.delta_mm!r},"
                     f"{int(label)},{int(model.negligible[label])}\n")
    written.append(table)
    summary = out / "clusters.csv"
    with open(summary, "w", newline="\n") as fh:
        fh.write("cluster,size,effect_magnitude,negligible\n")
        for j in range(model.k):
            fh.write(f"{j},{len(model.members(j))},{model.effect_magnitude[j]!r},"
                     f"{int(model.negligible[j])}\n")
    written.append(summary)
    n = len(frequencies)
    for j in model.effective_clusters():
        rows = model.members(j)
        mean_curve = np.mean([samples[i].feature[:n] for i in rows], axis=0) if len(rows) \
            else np.zeros(n)
        path = out / f"cluster_{j}_mean_s11.csv"
        with open(path, "w", newline="\n") as fh:
            fh.write("frequency_hz,delta_s11_db\n")
            for f, v in zip(frequencies, mean_curve):
                fh.write(f"{float(f)!r},{float(v)!r}\n")
        written.append(path)
    return written


def mean_differential_curve(model: ActionClusterModel,
                            samples: Sequence[PerturbationSample],
                            cluster: int, n_freq: int) -> np.ndarray:
    rows = model.members(cluster)
    if len(rows) == 0:
        return np.zeros(n_freq)
    return np.mean([samples[i].feature[:n_freq] for i in rows], axis=0)
