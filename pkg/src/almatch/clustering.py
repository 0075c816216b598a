"""Size-constrained k-means and cluster-count selection.

Clusters are bounded to [min_fraction, max_fraction] of the points. The
assignment step is the classic alternating scheme with the cluster sizes
enforced exactly: points are assigned by solving a transportation problem
(unit supplies, cluster capacities, squared Euclidean costs). The solver here
is a successive-shortest-path method on the aggregated cluster exchange
graph: start from the unconstrained argmin assignment (whose reduced costs
are all nonnegative), then repeatedly route one point along the cheapest
chain of cluster-to-cluster moves until every cluster size is within bounds,
updating node potentials as in any min-cost-flow SSP. Each augmentation
strictly reduces the total bound violation, and the potential invariant makes
the final assignment optimal, which keeps the k-means objective
non-increasing across iterations.

The cluster count is chosen by scanning a candidate range, building the
k -> average within-cluster SSE curve, and taking its knee; when no knee
stands out, the silhouette argmax decides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ClusterBounds:
    """Cluster size window as fractions of the point count."""

    min_fraction: float = 0.05
    max_fraction: float = 0.15

    def __post_init__(self):
        if not 0 < self.min_fraction < self.max_fraction <= 1:
            raise ValueError(
                f"need 0 < min_fraction < max_fraction <= 1, "
                f"got {self.min_fraction}, {self.max_fraction}"
            )

    def sizes(self, n: int) -> tuple[int, int]:
        return math.ceil(self.min_fraction * n), math.floor(self.max_fraction * n)


class InfeasibleBoundsError(ValueError):
    def __init__(self, k: int, n: int, min_size: int, max_size: int):
        super().__init__(
            f"no assignment of {n} points to {k} clusters with sizes in "
            f"[{min_size}, {max_size}]"
        )
        self.k, self.n, self.min_size, self.max_size = k, n, min_size, max_size


@dataclass
class Clustering:
    """Result of one constrained k-means run; assignment aligns with input rows."""

    k: int
    assignment: np.ndarray
    centroids: np.ndarray
    sizes: np.ndarray
    objective_trace: list[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _assign_transport(D2: np.ndarray, min_size: int, max_size: int) -> np.ndarray:
    """Exact min-cost assignment of n points to k clusters, sizes in bounds.

    D2 holds squared distances (n x k). Successive shortest paths over k
    cluster nodes plus one slack node (index k); see the module docstring.
    """
    n, k = D2.shape
    assign = D2.argmin(axis=1)
    counts = np.bincount(assign, minlength=k)
    if k == 1:
        return assign

    INF = np.inf
    arc_min = np.full((k, k), INF)
    arc_arg = np.full((k, k), -1, dtype=np.int64)

    def refresh_row(c: int) -> None:
        members = np.flatnonzero(assign == c)
        if members.size == 0:
            arc_min[c, :] = INF
            arc_arg[c, :] = -1
            return
        delta = D2[members, :] - D2[members, c][:, None]
        best = delta.argmin(axis=0)
        arc_min[c, :] = delta[best, np.arange(k)]
        arc_arg[c, :] = members[best]
        arc_min[c, c] = INF
        arc_arg[c, c] = -1

    for c in range(k):
        refresh_row(c)

    pot = np.zeros(k + 1)
    while True:
        excess = np.flatnonzero(counts > max_size)
        deficit = np.flatnonzero(counts < min_size)
        if excess.size == 0 and deficit.size == 0:
            return assign
        src = int(excess[0]) if excess.size else k

        # dense Dijkstra over k+1 nodes with reduced costs
        dist = np.full(k + 1, INF)
        dist[src] = 0.0
        prev_node = np.full(k + 1, -1, dtype=np.int64)
        prev_point = np.full(k + 1, -1, dtype=np.int64)
        done = np.zeros(k + 1, dtype=bool)
        while True:
            u = -1
            best = INF
            for v in range(k + 1):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            done[u] = True
            d_u = dist[u]
            if u == k:
                for v in range(k):
                    if counts[v] > min_size and not done[v]:
                        nd = d_u + pot[k] - pot[v]
                        if nd < dist[v]:
                            dist[v] = nd
                            prev_node[v] = k
                            prev_point[v] = -1
            else:
                if counts[u] < max_size and not done[k]:
                    nd = d_u + pot[u] - pot[k]
                    if nd < dist[k]:
                        dist[k] = nd
                        prev_node[k] = u
                        prev_point[k] = -1
                if counts[u] > 0:
                    cand = d_u + arc_min[u] + pot[u] - pot[:k]
                    better = ~done[:k] & (cand < dist[:k])
                    if better.any():
                        idx = np.flatnonzero(better)
                        dist[idx] = cand[idx]
                        prev_node[idx] = u
                        prev_point[idx] = arc_arg[u, idx]

        targets = list(deficit) + ([k] if excess.size else [])
        tgt = min(targets, key=lambda t: dist[t])
        if not np.isfinite(dist[tgt]):
            raise InfeasibleBoundsError(k, n, min_size, max_size)

        pot += np.minimum(dist, dist[tgt])

        node = int(tgt)
        path: list[tuple[int, int, int]] = []
        while node != src:
            path.append((int(prev_node[node]), node, int(prev_point[node])))
            node = int(prev_node[node])
        touched = set()
        for u, v, point in reversed(path):
            if u == k or v == k:
                continue
            assign[point] = v
            counts[u] -= 1
            counts[v] += 1
            touched.add(u)
            touched.add(v)
        for c in touched:
            refresh_row(c)


def _squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    D2 = (X**2).sum(axis=1)[:, None] - 2.0 * (X @ C.T) + (C**2).sum(axis=1)[None, :]
    np.maximum(D2, 0.0, out=D2)
    return D2


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    closest = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centroids[j:] = X[rng.integers(n, size=k - j)]
            break
        probs = closest / total
        centroids[j] = X[rng.choice(n, p=probs)]
        closest = np.minimum(closest, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _warm_start(X: np.ndarray, k: int, rng: np.random.Generator, steps: int = 10) -> np.ndarray:
    """kmeans++ seeding plus a few unconstrained Lloyd steps."""
    C = _kmeanspp_init(X, k, rng)
    prev = None
    for _ in range(steps):
        a = _squared_distances(X, C).argmin(axis=1)
        if prev is not None and np.array_equal(a, prev):
            break
        prev = a
        for c in range(k):
            members = X[a == c]
            if len(members):
                C[c] = members.mean(axis=0)
    return C


def constrained_kmeans(
    vectors: np.ndarray,
    k: int,
    bounds: ClusterBounds,
    seed: int = 0,
    max_iter: int = 100,
) -> Clustering:
    """k-means with every cluster size kept inside the bounds window.

    Alternates the exact transportation assignment with the mean update;
    stops when the assignment repeats or after max_iter rounds. The recorded
    objective (total SSE at each assignment step) is non-increasing.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise ValueError("vectors must be a finite 2-d array")
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    min_size, max_size = bounds.sizes(n)
    if k * min_size > n or k * max_size < n:
        raise InfeasibleBoundsError(k, n, min_size, max_size)

    rng = np.random.default_rng(seed)
    C = _warm_start(X, k, rng)
    trace: list[float] = []
    prev: np.ndarray | None = None
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        D2 = _squared_distances(X, C)
        assign = _assign_transport(D2, min_size, max_size)
        trace.append(float(D2[np.arange(n), assign].sum()))
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign.copy()
        for c in range(k):
            C[c] = X[assign == c].mean(axis=0)
    sizes = np.bincount(assign, minlength=k)
    return Clustering(k=k, assignment=assign, centroids=C, sizes=sizes, objective_trace=trace)


def kneedle(xs, ys, sensitivity: float = 1.0) -> float | None:
    """Knee point of a curve, or None when no knee survives the threshold.

    Both axes are normalized to [0,1]; decreasing curves are flipped so the
    working curve increases, and the knee is a local maximum of the
    difference curve (normalized y minus normalized x) that the curve falls
    away from by more than the sensitivity-scaled mean x-step before the
    next local maximum.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    if len(xs) < 3:
        return None
    x_span = xs.max() - xs.min()
    y_span = ys.max() - ys.min()
    if x_span == 0 or y_span == 0:
        return None
    xn = (xs - xs.min()) / x_span
    yn = (ys - ys.min()) / y_span
    if ys[-1] < ys[0]:
        yn = 1.0 - yn
    diff = yn - xn

    local_max = [
        i
        for i in range(1, len(diff) - 1)
        if diff[i] > diff[i - 1] and diff[i] >= diff[i + 1]
    ]
    if not local_max:
        return None
    threshold_step = sensitivity * float(np.mean(np.diff(xn)))
    for pos, i in enumerate(local_max):
        threshold = diff[i] - threshold_step
        stop = local_max[pos + 1] if pos + 1 < len(local_max) else len(diff)
        for j in range(i + 1, stop):
            if diff[j] < threshold:
                return float(xs[i])
    return None


def silhouette(vectors: np.ndarray, clustering: Clustering,
               distances: np.ndarray | None = None) -> float:
    """Mean silhouette coefficient with Euclidean distances.

    Per point: a = mean distance to its own cluster's other members, b = the
    smallest mean distance to another cluster; score (b-a)/max(a,b).
    Singleton clusters contribute 0 for their point.
    """
    if clustering.k < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    X = np.asarray(vectors, dtype=np.float64)
    n = len(X)
    if distances is None:
        sq = _squared_distances(X, X)
        distances = np.sqrt(np.maximum(sq, 0.0))
    assign = clustering.assignment
    k = clustering.k
    sizes = clustering.sizes
    # mean distance from every point to every cluster, via indicator matmul
    member_matrix = np.zeros((n, k))
    member_matrix[np.arange(n), assign] = 1.0
    totals = distances @ member_matrix
    scores = np.zeros(n)
    for i in range(n):
        c = assign[i]
        if sizes[c] <= 1:
            continue
        a = totals[i, c] / (sizes[c] - 1)
        other = [totals[i, cc] / sizes[cc] for cc in range(k) if cc != c and sizes[cc] > 0]
        b = min(other)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


@dataclass
class KSelection:
    """select_k diagnostics: the chosen k plus the scan that produced it."""

    k: int
    candidates: list[int]
    avg_sse: dict[int, float]
    knee: float | None
    silhouettes: dict[int, float] | None
    clustering: Clustering


def select_k(
    vectors: np.ndarray,
    bounds: ClusterBounds,
    seed: int = 0,
    max_iter: int = 100,
    details: bool = False,
) -> int | KSelection:
    """Choose the cluster count over the bounds-implied candidate range.

    Candidates are ceil(1/max_fraction) .. floor(1/min_fraction), clipped to
    [1, n] and to counts for which the size window is satisfiable. Each
    candidate is clustered, the knee of the k -> average within-cluster SSE
    curve wins; with no knee, the silhouette argmax does (ties toward the
    smaller k). ``details=True`` returns the full scan including the chosen
    clustering, so callers need not re-cluster.
    """
    X = np.asarray(vectors, dtype=np.float64)
    n = len(X)
    lo = math.ceil(1.0 / bounds.max_fraction)
    hi = math.floor(1.0 / bounds.min_fraction)
    min_size, max_size = bounds.sizes(n)
    candidates = [
        k
        for k in range(max(lo, 1), min(hi, n) + 1)
        if k * min_size <= n <= k * max_size
    ]
    if not candidates:
        raise ValueError(
            f"no feasible cluster count in [{lo}, {hi}] for n={n} with sizes "
            f"[{min_size}, {max_size}]"
        )
    runs = {k: constrained_kmeans(X, k, bounds, seed=seed, max_iter=max_iter) for k in candidates}
    avg_sse = {k: runs[k].objective / k for k in candidates}
    knee = kneedle(candidates, [avg_sse[k] for k in candidates], sensitivity=1.0)
    silhouettes: dict[int, float] | None = None
    if knee is not None:
        chosen = int(knee)
    else:
        sq = _squared_distances(X, X)
        dist = np.sqrt(np.maximum(sq, 0.0))
        silhouettes = {k: silhouette(X, runs[k], distances=dist) for k in candidates}
        chosen = max(candidates, key=lambda k: (silhouettes[k], -k))
    if details:
        return KSelection(
            k=chosen,
            candidates=candidates,
            avg_sse=avg_sse,
            knee=knee,
            silhouettes=silhouettes,
            clustering=runs[chosen],
        )
    return chosen
