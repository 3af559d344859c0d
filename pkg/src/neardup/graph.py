"""Similarity graph, single-linkage components, and Louvain communities.

Connected components give single-linkage clusters; Louvain modularity
optimization cuts false-positive bridge edges that would otherwise merge
unrelated groups. Both produce total assignments: every corpus document
lands in exactly one cluster, singletons included.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import DataError, InternalError
from .overlap import ScoredPair


@dataclass(frozen=True)
class SimilarityGraph:
    """Candidate-pair edges over the full corpus node set."""

    nodes: tuple
    edges: tuple
    weighted: bool = False

    @property
    def node_set(self) -> frozenset:
        return frozenset(self.nodes)


@dataclass(frozen=True)
class Clustering:
    """Total assignment of doc id -> cluster id."""

    assignment: dict
    method_tag: str = ""

    def clusters(self) -> dict:
        out: dict = {}
        for doc_id, cluster_id in self.assignment.items():
            out.setdefault(cluster_id, []).append(doc_id)
        for members in out.values():
            members.sort()
        return out

    def __len__(self) -> int:
        return len(self.assignment)


@dataclass
class ClusterStats:
    non_singleton_clusters: int
    reproduced_articles: int
    mean_cluster_size: float
    max_cluster_size: int
    singletons: int
    all_singletons: bool = field(default=False)


def build_graph(doc_ids: Iterable[str], edges: Iterable[ScoredPair], weighted: bool = False) -> SimilarityGraph:
    """Graph over all docs (isolated nodes allowed) with deduplicated edges.

    A pair submitted more than once keeps its highest score; unknown
    endpoints and self-loops are rejected.
    """
    nodes = tuple(sorted(set(doc_ids)))
    node_set = set(nodes)
    best: dict = {}
    for e in edges:
        if e.id_a == e.id_b:
            raise DataError(f"self-loop on {e.id_a!r} is not a valid edge")
        if e.id_a not in node_set:
            raise DataError(f"edge endpoint {e.id_a!r} is not a corpus document")
        if e.id_b not in node_set:
            raise DataError(f"edge endpoint {e.id_b!r} is not a corpus document")
        key = (e.id_a, e.id_b) if e.id_a < e.id_b else (e.id_b, e.id_a)
        prev = best.get(key)
        if prev is None or e.score > prev.score:
            best[key] = ScoredPair(key[0], key[1], e.score, e.metric)
    dedup = tuple(best[k] for k in sorted(best))
    return SimilarityGraph(nodes=nodes, edges=dedup, weighted=weighted)


def _adjacency(g: SimilarityGraph, use_weights: bool) -> dict:
    adj: dict = {node: {} for node in g.nodes}
    for e in g.edges:
        w = e.score if use_weights else 1.0
        adj[e.id_a][e.id_b] = w
        adj[e.id_b][e.id_a] = w
    return adj


def _components(adj: dict) -> list:
    """Deterministic BFS components, each returned as a sorted list."""
    seen = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = []
        queue = [start]
        seen.add(start)
        while queue:
            node = queue.pop()
            comp.append(node)
            for nbr in adj[node]:
                if nbr not in seen:
                    seen.add(nbr)
                    queue.append(nbr)
        comps.append(sorted(comp))
    return comps


def connected_components(g: SimilarityGraph) -> Clustering:
    """Single-linkage clusters; cluster id is the smallest member id."""
    adj = _adjacency(g, use_weights=False)
    assignment = {}
    for comp in _components(adj):
        label = comp[0]
        for node in comp:
            assignment[node] = label
    return Clustering(assignment=assignment, method_tag="components")


def _q_of(edges, assignment: dict, resolution: float, use_weights: bool, total: float) -> float:
    """Modularity terms of the communities touched by ``edges``.

    ``total`` is the full graph's edge weight, which may exceed the
    weight of ``edges`` when scoring one component of a larger graph.
    """
    internal: dict = {}
    degree: dict = {}
    for e in edges:
        w = e.score if use_weights else 1.0
        degree[e.id_a] = degree.get(e.id_a, 0.0) + w
        degree[e.id_b] = degree.get(e.id_b, 0.0) + w
        if assignment[e.id_a] == assignment[e.id_b]:
            c = assignment[e.id_a]
            internal[c] = internal.get(c, 0.0) + w
    comm_degree: dict = {}
    for node, deg in degree.items():
        c = assignment[node]
        comm_degree[c] = comm_degree.get(c, 0.0) + deg
    q = 0.0
    for c, d in comm_degree.items():
        q += internal.get(c, 0.0) / total - resolution * (d / (2.0 * total)) ** 2
    return q


def modularity(g: SimilarityGraph, clustering: Clustering, resolution: float = 1.0, use_weights: bool = False) -> float:
    """Direct modularity of a partition: sum_c [L_c/m - r*(D_c/2m)^2]."""
    if not g.edges:
        return 0.0
    total = sum((e.score if use_weights else 1.0) for e in g.edges)
    if total == 0.0:
        return 0.0
    return _q_of(g.edges, clustering.assignment, resolution, use_weights, total)


def _one_level(adj: dict, self_w: dict, resolution: float, m2: float) -> "tuple[dict, bool]":
    """One pass of Louvain local moving over the current (meta-)graph.

    ``m2`` is twice the total edge weight of the whole graph, not of the
    component being optimized; the null-model penalty must use the
    global normalizer or small components of a large graph get split.
    Nodes are visited in sorted key order; a node moves only on strictly
    positive modularity gain, with ties among best candidates broken
    toward the community with the smallest label (its minimum node key).
    Returns the node -> community-representative map and whether anything
    moved.
    """
    nodes = sorted(adj)
    k = {}
    for node in nodes:
        k[node] = sum(adj[node].values()) + 2.0 * self_w.get(node, 0.0)
    if m2 <= 0.0:
        return {node: node for node in nodes}, False
    comm_of = {node: node for node in nodes}
    comm_tot = {node: k[node] for node in nodes}
    comm_label = {node: node for node in nodes}
    comm_members = {node: {node} for node in nodes}
    moved_any = False
    improved = True
    while improved:
        improved = False
        for node in nodes:
            old = comm_of[node]
            comm_tot[old] -= k[node]
            links: dict = {}
            for nbr, w in adj[node].items():
                links[comm_of[nbr]] = links.get(comm_of[nbr], 0.0) + w
            base_gain = links.get(old, 0.0) - resolution * k[node] * comm_tot[old] / m2
            best_comm, best_gain, best_label = old, base_gain, comm_label[old]
            for comm, l in links.items():
                if comm == old:
                    continue
                gain = l - resolution * k[node] * comm_tot[comm] / m2
                if gain > best_gain + 1e-12 or (
                    abs(gain - best_gain) <= 1e-12 and comm_label[comm] < best_label
                ):
                    if gain > base_gain + 1e-12:
                        best_comm, best_gain, best_label = comm, gain, comm_label[comm]
            comm_tot[best_comm] += k[node]
            if best_comm != old:
                comm_of[node] = best_comm
                comm_members[old].discard(node)
                comm_members[best_comm].add(node)
                comm_label[best_comm] = min(comm_label[best_comm], node)
                if comm_members[old]:
                    comm_label[old] = min(comm_members[old])
                improved = True
                moved_any = True
    return comm_of, moved_any


def _aggregate(adj: dict, self_w: dict, comm_of: dict) -> "tuple[dict, dict, dict]":
    """Collapse communities into meta-nodes keyed by their smallest member."""
    members: dict = {}
    for node, comm in comm_of.items():
        members.setdefault(comm, []).append(node)
    rep = {comm: min(nodes) for comm, nodes in members.items()}
    new_adj: dict = {rep[c]: {} for c in members}
    new_self: dict = {rep[c]: 0.0 for c in members}
    for node, nbrs in adj.items():
        ca = rep[comm_of[node]]
        new_self[ca] += self_w.get(node, 0.0)
        for nbr, w in nbrs.items():
            cb = rep[comm_of[nbr]]
            if ca == cb:
                # Each internal undirected edge is seen from both ends.
                new_self[ca] += w / 2.0
            elif ca < cb:
                new_adj[ca][cb] = new_adj[ca].get(cb, 0.0) + w
    for a, nbrs in list(new_adj.items()):
        for b, w in nbrs.items():
            new_adj[b][a] = w
    mapping = {node: rep[comm_of[node]] for node in adj}
    return new_adj, new_self, mapping


def louvain(
    g: SimilarityGraph,
    resolution: float = 1.0,
    seed: int = 0,
    use_weights: bool = False,
) -> Clustering:
    """Louvain modularity communities; always a refinement of components.

    Runs independently per connected component with a fixed sorted visit
    order, so results are reproducible (the seed is accepted for
    interface symmetry and recorded by callers; the implementation is
    order-deterministic and does not consume randomness). Modularity is
    checked to be non-decreasing across aggregation passes.
    """
    if resolution <= 0:
        raise DataError(f"resolution must be > 0, got {resolution}")
    adj_full = _adjacency(g, use_weights)
    # Global normalizer, shared by every component and aggregation level.
    m2_global = sum(sum(nbrs.values()) for nbrs in adj_full.values())
    comps = _components(adj_full)
    comp_index = {}
    for i, comp in enumerate(comps):
        for node in comp:
            comp_index[node] = i
    comp_edges: list = [[] for _ in comps]
    for e in g.edges:
        comp_edges[comp_index[e.id_a]].append(e)
    assignment: dict = {}
    for i, comp in enumerate(comps):
        if len(comp) == 1:
            assignment[comp[0]] = comp[0]
            continue
        membership = {node: node for node in comp}
        self_w: dict = {}
        adj = {node: adj_full[node] for node in comp}
        last_q = None
        while True:
            comm_of, moved = _one_level(adj, self_w, resolution, m2_global)
            if not moved:
                break
            adj, self_w, mapping = _aggregate(adj, self_w, comm_of)
            membership = {node: mapping[membership[node]] for node in membership}
            q = _q_of(
                comp_edges[i], membership, resolution, use_weights, m2_global / 2.0
            )
            if last_q is not None and q < last_q - 1e-9:
                raise InternalError(
                    f"modularity decreased across passes: {last_q} -> {q}"
                )
            last_q = q
        for node, comm in membership.items():
            assignment[node] = comm
    # Rewrite cluster ids as the smallest member id.
    members: dict = {}
    for node, comm in assignment.items():
        members.setdefault(comm, []).append(node)
    final = {}
    for nodes_in in members.values():
        label = min(nodes_in)
        for node in nodes_in:
            final[node] = label
    return Clustering(assignment=final, method_tag="louvain")


def cluster_stats(c: Clustering) -> ClusterStats:
    """Cluster-size diagnostics; mean size covers non-singletons only."""
    sizes = [len(m) for m in c.clusters().values()]
    non_singleton = [s for s in sizes if s > 1]
    singletons = sum(1 for s in sizes if s == 1)
    if not non_singleton:
        return ClusterStats(0, 0, 0.0, max(sizes, default=0), singletons, all_singletons=True)
    return ClusterStats(
        non_singleton_clusters=len(non_singleton),
        reproduced_articles=sum(non_singleton),
        mean_cluster_size=sum(non_singleton) / len(non_singleton),
        max_cluster_size=max(non_singleton),
        singletons=singletons,
    )


def write_clustering(c: Clustering, path) -> None:
    """Clustering file: ``doc_id \\t cluster_id`` sorted by doc id."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(c.assignment):
            cluster_id = c.assignment[doc_id]
            if "\t" in doc_id or "\n" in doc_id or "\t" in cluster_id or "\n" in cluster_id:
                raise DataError(f"id with tab/newline cannot be written: {doc_id!r}")
            fh.write(f"{doc_id}\t{cluster_id}\n")


def load_clustering(path, method_tag: str = "") -> Clustering:
    assignment = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected 'doc_id<TAB>cluster_id'")
            doc_id, cluster_id = parts
            if doc_id in assignment:
                raise DataError(f"{path}: duplicate doc id {doc_id!r} on line {lineno}")
            assignment[doc_id] = cluster_id
    return Clustering(assignment=assignment, method_tag=method_tag)
