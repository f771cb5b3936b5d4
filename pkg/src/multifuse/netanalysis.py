"""Post-fusion analysis: distance correlation and modularity clustering.

Distance correlation between two similarity networks treats each node's
similarity profile (its matrix row) as a sample point, builds the pairwise
Euclidean distance matrix of those points for each network, double-centers
both, and correlates them.  Clustering is a deterministic, seeded Louvain
sweep over the weighted graph with self-loops excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInput, InvalidParameter
from .simbuild import SimilarityLayer

__all__ = [
    "Partition",
    "CorrelationTable",
    "distance_correlation",
    "correlation_table",
    "louvain_communities",
    "modularity",
]

GAIN_TOL = 1e-12


@dataclass
class Partition:
    """Community assignment over labelled nodes, with its modularity score."""

    labels: tuple[str, ...]
    community: np.ndarray
    modularity: float

    def __post_init__(self):
        self.labels = tuple(str(x) for x in self.labels)
        comm = np.asarray(self.community, dtype=np.int64)
        if comm.ndim != 1 or comm.shape[0] != len(self.labels):
            raise InvalidInput("one community index per label required")
        uniq = np.unique(comm)
        if not np.array_equal(uniq, np.arange(uniq.shape[0])):
            raise InvalidInput("community indices must be contiguous from 0")
        self.community = comm

    @property
    def n_communities(self) -> int:
        return int(self.community.max()) + 1


@dataclass
class CorrelationTable:
    """Symmetric table of distance correlations between named networks."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.names = tuple(str(x) for x in self.names)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.names), len(self.names)):
            raise DimensionError("one row/column per name required")
        if not np.array_equal(v, v.T):
            raise InvalidInput("correlation table must be symmetric")
        if np.abs(np.diag(v) - 1.0).max() > 1e-12:
            raise InvalidInput("correlation table diagonal must be 1")
        if v.min() < 0.0 or v.max() > 1.0:
            raise InvalidInput("correlations must lie in [0, 1]")
        self.values = v


def _layer_matrix(S) -> tuple[tuple[str, ...] | None, np.ndarray]:
    if isinstance(S, SimilarityLayer):
        return S.labels, S.S
    m = np.asarray(S, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return None, m


def _row_distances(mat: np.ndarray) -> np.ndarray:
    diff = mat[:, None, :] - mat[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _double_center(d: np.ndarray) -> np.ndarray:
    row = d.mean(axis=1, keepdims=True)
    col = d.mean(axis=0, keepdims=True)
    return d - row - col + d.mean()


def distance_correlation(A, B, profile=None) -> float:
    """Generalized distance correlation between two networks, in [0, 1].

    Parameters
    ----------
    A, B : SimilarityLayer or array_like
        Square matrices over the same node set.
    profile : callable, optional
        Maps a matrix to the (n, d) array of per-node sample points; the
        default uses the matrix rows themselves.

    Returns 0 when either network has zero distance variance (all profiles
    coincide).
    """
    labels_a, a = _layer_matrix(A)
    labels_b, b = _layer_matrix(B)
    if a.shape != b.shape:
        raise DimensionError(f"order mismatch: {a.shape[0]} vs {b.shape[0]}")
    if labels_a is not None and labels_b is not None and labels_a != labels_b:
        raise InvalidInput("networks are defined over different node labels")
    if a.shape[0] < 2:
        raise InvalidInput("distance correlation needs at least two nodes")
    if profile is not None:
        a = np.asarray(profile(a), dtype=float)
        b = np.asarray(profile(b), dtype=float)
    ac = _double_center(_row_distances(a))
    bc = _double_center(_row_distances(b))
    dcov2 = float((ac * bc).mean())
    dvar_a = float((ac * ac).mean())
    dvar_b = float((bc * bc).mean())
    if dvar_a <= 0.0 or dvar_b <= 0.0:
        return 0.0
    dcor2 = max(dcov2, 0.0) / np.sqrt(dvar_a * dvar_b)
    return float(min(np.sqrt(dcor2), 1.0))


def correlation_table(names, networks) -> CorrelationTable:
    """Pairwise distance correlations between several networks."""
    nets = list(networks)
    names = tuple(str(x) for x in names)
    if len(names) != len(nets):
        raise InvalidInput("one name per network required")
    k = len(nets)
    v = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            v[i, j] = v[j, i] = distance_correlation(nets[i], nets[j])
    return CorrelationTable(names, v)


def _graph_weights(S) -> tuple[tuple[str, ...], np.ndarray]:
    labels, mat = _layer_matrix(S)
    w = np.array(mat, dtype=float)
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    if w.min() < 0:
        raise InvalidInput("edge weights must be nonnegative")
    if labels is None:
        labels = tuple(str(i) for i in range(w.shape[0]))
    return labels, w


def _modularity_value(w: np.ndarray, comm: np.ndarray, resolution: float) -> float:
    two_m = float(w.sum())
    if two_m <= 0:
        return 0.0
    k = w.sum(axis=1)
    n_comm = int(comm.max()) + 1
    q = 0.0
    for c in range(n_comm):
        members = comm == c
        inside = float(w[np.ix_(members, members)].sum())
        tot = float(k[members].sum())
        q += inside / two_m - resolution * (tot / two_m) ** 2
    return q


def _renumber(comm: np.ndarray) -> np.ndarray:
    mapping: dict[int, int] = {}
    out = np.empty_like(comm)
    for i, c in enumerate(comm):
        if c not in mapping:
            mapping[c] = len(mapping)
        out[i] = mapping[c]
    return out


def _greedy_pass(w: np.ndarray, resolution: float, rng) -> tuple[bool, np.ndarray]:
    """Local-move phase: sweep nodes (seeded order) until no gain remains."""
    n = w.shape[0]
    k = w.sum(axis=1)
    two_m = float(w.sum())
    comm = np.arange(n)
    tot = k.copy()
    order = rng.permutation(n)
    moved_any = False
    while True:
        moved = False
        for i in order:
            c_old = comm[i]
            tot[c_old] -= k[i]
            links = np.bincount(comm, weights=w[i], minlength=n)
            links[c_old] -= w[i, i]
            # Score differences are proportional to modularity gains; ties
            # fall to the smallest community index via the ascending scan.
            base = links[c_old] - resolution * k[i] * tot[c_old] / two_m
            best_c, best_score = c_old, base
            for c in np.flatnonzero(links > 0):
                if c == c_old:
                    continue
                score = links[c] - resolution * k[i] * tot[c] / two_m
                if score > best_score:
                    best_c, best_score = c, score
            gain = 2.0 * (best_score - base) / two_m
            if best_c != c_old and gain > GAIN_TOL:
                comm[i] = best_c
                moved = True
                moved_any = True
            tot[comm[i]] += k[i]
        if not moved:
            break
    return moved_any, _renumber(comm)


def _aggregate(w: np.ndarray, comm: np.ndarray) -> np.ndarray:
    n_comm = int(comm.max()) + 1
    member = np.zeros((w.shape[0], n_comm))
    member[np.arange(w.shape[0]), comm] = 1.0
    return member.T @ w @ member


def louvain_communities(S, resolution: float = 1.0, seed: int = 0) -> Partition:
    """Louvain modularity clustering of a similarity network.

    Diagonal entries are excluded (self-similarity carries no relational
    information).  The node sweep order is drawn from a generator seeded
    with ``seed``, making the partition fully deterministic.
    """
    if not resolution > 0:
        raise InvalidParameter("resolution must be positive")
    labels, w = _graph_weights(S)
    if w.sum() <= 0:
        raise InvalidInput("graph has no positive off-diagonal weight")
    rng = np.random.default_rng(seed)
    assign = np.arange(w.shape[0])
    graph = w
    while True:
        moved, comm = _greedy_pass(graph, resolution, rng)
        assign = comm[assign]
        if not moved or int(comm.max()) + 1 == graph.shape[0]:
            break
        graph = _aggregate(graph, comm)
    final = _renumber(assign)
    score = _modularity_value(w, final, resolution)
    return Partition(labels, final, score)


def modularity(S, partition, resolution: float = 1.0) -> float:
    """Weighted modularity of a partition, with self-loops excluded.

    A graph with no off-diagonal weight scores 0 by convention.
    """
    if not resolution > 0:
        raise InvalidParameter("resolution must be positive")
    labels, w = _graph_weights(S)
    if isinstance(partition, Partition):
        if partition.labels != labels:
            raise InvalidInput("partition labels do not match the network")
        comm = partition.community
    else:
        comm = np.asarray(partition, dtype=np.int64)
    if comm.shape != (w.shape[0],):
        raise InvalidInput("partition must cover every node exactly once")
    return _modularity_value(w, comm, resolution)
