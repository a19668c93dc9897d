"""Event-sourced temporal multi-layer graph.

The container records layer registrations, vertex/edge creations and
retirements as an append-only event log.  ``snapshot_at(t)`` materializes an
immutable :class:`SnapshotView` holding exactly the records whose half-open
validity interval ``[t_start, t_end)`` covers ``t``.  All analytics run on
snapshots or on the :class:`GraphView` objects derived from them, never on the
live log.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import ValidationError

Scalar = str | float | int | bool


@dataclass(frozen=True)
class VertexRecord:
    id: int
    roles: frozenset[str]
    layers: frozenset[int]
    attrs: Mapping[str, Scalar]
    t_start: int
    t_end: Optional[int]  # None = still open

    def active_at(self, t: int) -> bool:
        return self.t_start <= t and (self.t_end is None or t < self.t_end)


@dataclass(frozen=True)
class EdgeRecord:
    id: int
    src: int
    dst: int
    layer_src: int
    layer_dst: int
    directed: bool
    weight: float
    relation: str
    t_start: int
    t_end: Optional[int]

    @property
    def intra_layer(self) -> bool:
        return self.layer_src == self.layer_dst

    def active_at(self, t: int) -> bool:
        return self.t_start <= t and (self.t_end is None or t < self.t_end)


class GraphView:
    """A static single-graph slice of a snapshot: vertices plus an edge multiset.

    Produced by :meth:`SnapshotView.layer_subgraph` and
    :meth:`SnapshotView.flatten`.  Immutable; adjacency structures are built
    lazily and cached.
    """

    def __init__(self, vertices: Iterable[int], edges: Iterable[EdgeRecord]):
        self.vertices: tuple[int, ...] = tuple(sorted(set(vertices)))
        self.edges: tuple[EdgeRecord, ...] = tuple(sorted(edges, key=lambda e: e.id))
        vs = set(self.vertices)
        for e in self.edges:
            if e.src not in vs or e.dst not in vs:
                raise ValidationError(f"edge {e.id} references vertex outside view")

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def directed(self) -> bool:
        return any(e.directed for e in self.edges)

    @cached_property
    def index(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def _adj_undirected(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for e in self.edges:
            adj[e.src].add(e.dst)
            adj[e.dst].add(e.src)
        for v in self.vertices:
            adj[v].discard(v)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @cached_property
    def _adj_out(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for e in self.edges:
            adj[e.src].add(e.dst)
            if not e.directed:
                adj[e.dst].add(e.src)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @cached_property
    def _adj_in(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for e in self.edges:
            adj[e.dst].add(e.src)
            if not e.directed:
                adj[e.src].add(e.dst)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    def neighbors(self, v: int, direction: str = "both") -> tuple[int, ...]:
        if v not in self.index:
            raise ValidationError(f"unknown vertex {v}")
        if direction == "both":
            return self._adj_undirected[v]
        if direction == "out":
            return self._adj_out[v]
        if direction == "in":
            return self._adj_in[v]
        raise ValidationError(f"bad direction {direction!r}")

    def degree(self, v: int) -> int:
        """Distinct-neighbor count, direction-agnostic, self-loops excluded."""
        return len(self._adj_undirected[v])

    def csr(self, direction: str = "both") -> tuple[np.ndarray, np.ndarray]:
        """Compact adjacency (indptr, indices) over positional vertex indices.

        Parallel edges are collapsed.  ``direction`` is "out", "in", or
        "both" (every edge contributes both arcs).
        """
        adj = {"out": self._adj_out, "in": self._adj_in, "both": self._adj_undirected}[direction]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        chunks = []
        for i, v in enumerate(self.vertices):
            row = np.array([self.index[u] for u in adj[v]], dtype=np.int64)
            chunks.append(row)
            indptr[i + 1] = indptr[i] + len(row)
        indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        return indptr, indices


class SnapshotView:
    """Immutable picture of every layer at one tick."""

    def __init__(
        self,
        time: int,
        layers: Mapping[int, str],
        vertices: Iterable[VertexRecord],
        edges: Iterable[EdgeRecord],
    ):
        self.time = time
        self.layers = dict(layers)
        self.vertices: dict[int, VertexRecord] = {v.id: v for v in sorted(vertices, key=lambda v: v.id)}
        self.edges: tuple[EdgeRecord, ...] = tuple(sorted(edges, key=lambda e: e.id))

    @property
    def inter_layer_edges(self) -> tuple[EdgeRecord, ...]:
        return tuple(e for e in self.edges if not e.intra_layer)

    def layer_vertices(self, layer: int) -> tuple[int, ...]:
        if layer not in self.layers:
            raise ValidationError(f"unknown layer {layer}")
        return tuple(v.id for v in self.vertices.values() if layer in v.layers)

    def layer_subgraph(self, layer: int) -> GraphView:
        """Single-layer view: V_i plus only the intra-layer edges of ``layer``."""
        vs = self.layer_vertices(layer)
        es = [e for e in self.edges if e.intra_layer and e.layer_src == layer]
        return GraphView(vs, es)

    def flatten(self) -> GraphView:
        """Union of all layer vertex sets with every intra- and inter-layer edge."""
        return GraphView(self.vertices.keys(), self.edges)

    def neighbors(
        self, v: int, direction: str = "both", layer: Optional[int] = None
    ) -> tuple[int, ...]:
        if v not in self.vertices:
            raise ValidationError(f"unknown vertex {v}")
        if layer is not None:
            return self.layer_subgraph(layer).neighbors(v, direction) if v in self.layer_vertices(layer) else ()
        return self.flatten().neighbors(v, direction)

    def validate_bipartite(
        self, layer: int, part_a: set[str], part_b: set[str]
    ) -> tuple[bool, list[EdgeRecord]]:
        """Check every intra-layer edge joins a part_a-role vertex to a part_b one."""
        if set(part_a) & set(part_b):
            raise ValidationError("bipartite role sets overlap")
        sub = self.layer_subgraph(layer)
        violations = []
        for e in sub.edges:
            ra = self.vertices[e.src].roles
            rb = self.vertices[e.dst].roles
            ok = (ra & part_a and rb & part_b) or (ra & part_b and rb & part_a)
            if not ok:
                violations.append(e)
        return (not violations), violations


class TemporalMultiLayerGraph:
    """Append-only event log of layer/vertex/edge lifecycle, with snapshots.

    Events are tuples ``(kind, payload...)``; replaying the log reproduces the
    graph exactly, which the test suite exploits as an oracle.
    """

    def __init__(self) -> None:
        self.events: list[tuple] = []
        self._layer_ids: dict[str, int] = {}
        self._layer_names: dict[int, str] = {}
        self._vertices: dict[int, VertexRecord] = {}
        self._edges: dict[int, EdgeRecord] = {}
        self._next_vertex = 0
        self._next_edge = 0

    # -- construction ------------------------------------------------------

    def create_layer(self, name: str) -> int:
        if name in self._layer_ids:
            raise ValidationError(f"duplicate layer name {name!r}")
        lid = len(self._layer_ids)
        self._layer_ids[name] = lid
        self._layer_names[lid] = name
        self.events.append(("layer", lid, name))
        return lid

    def layer_id(self, name: str) -> int:
        if name not in self._layer_ids:
            raise ValidationError(f"unknown layer {name!r}")
        return self._layer_ids[name]

    @property
    def layer_names(self) -> dict[int, str]:
        return dict(self._layer_names)

    def add_vertex(
        self,
        roles: Iterable[str],
        layers: Iterable[int],
        attrs: Optional[Mapping[str, Scalar]] = None,
        t_start: int = 0,
    ) -> int:
        layer_set = frozenset(layers)
        if not layer_set:
            raise ValidationError("vertex must belong to at least one layer")
        for lid in layer_set:
            if lid not in self._layer_names:
                raise ValidationError(f"unregistered layer {lid}")
        vid = self._next_vertex
        self._next_vertex += 1
        rec = VertexRecord(vid, frozenset(roles), layer_set, dict(attrs or {}), int(t_start), None)
        self._vertices[vid] = rec
        self.events.append(("vertex+", vid, rec.roles, layer_set, rec.attrs, rec.t_start))
        return vid

    def add_edge(
        self,
        src: int,
        dst: int,
        layer_src: int,
        layer_dst: int,
        directed: bool = True,
        weight: float = 1.0,
        relation: str = "",
        t_start: int = 0,
    ) -> int:
        if weight < 0:
            raise ValidationError(f"negative edge weight {weight}")
        for vid in (src, dst):
            if vid not in self._vertices:
                raise ValidationError(f"unknown vertex {vid}")
            if not self._vertices[vid].active_at(t_start):
                raise ValidationError(f"vertex {vid} not active at t={t_start}")
        if layer_src == layer_dst:
            for vid in (src, dst):
                if layer_src not in self._vertices[vid].layers:
                    raise ValidationError(
                        f"intra-layer edge requires vertex {vid} in layer {layer_src}"
                    )
        else:
            if layer_src not in self._vertices[src].layers:
                raise ValidationError(f"src {src} not a member of layer {layer_src}")
            if layer_dst not in self._vertices[dst].layers:
                raise ValidationError(f"dst {dst} not a member of layer {layer_dst}")
        eid = self._next_edge
        self._next_edge += 1
        rec = EdgeRecord(
            eid, src, dst, layer_src, layer_dst, bool(directed), float(weight), relation, int(t_start), None
        )
        self._edges[eid] = rec
        self.events.append(
            ("edge+", eid, src, dst, layer_src, layer_dst, bool(directed), float(weight), relation, int(t_start))
        )
        return eid

    def retire_vertex(self, vid: int, t: int) -> None:
        rec = self._vertices.get(vid)
        if rec is None:
            raise ValidationError(f"unknown vertex {vid}")
        if rec.t_end is not None:
            raise ValidationError(f"vertex {vid} already retired")
        if not rec.active_at(t):
            raise ValidationError(f"vertex {vid} not active at t={t}")
        self._vertices[vid] = replace(rec, t_end=int(t))
        self.events.append(("vertex-", vid, int(t)))
        # incident edges retire at the same tick
        for eid, e in self._edges.items():
            if e.t_end is None and (e.src == vid or e.dst == vid):
                self._edges[eid] = replace(e, t_end=int(t))
                self.events.append(("edge-", eid, int(t)))

    def retire_edge(self, eid: int, t: int) -> None:
        rec = self._edges.get(eid)
        if rec is None:
            raise ValidationError(f"unknown edge {eid}")
        if rec.t_end is not None:
            raise ValidationError(f"edge {eid} already retired")
        if not rec.active_at(t):
            raise ValidationError(f"edge {eid} not active at t={t}")
        self._edges[eid] = replace(rec, t_end=int(t))
        self.events.append(("edge-", eid, int(t)))

    # -- queries -----------------------------------------------------------

    def snapshot_at(self, t: int) -> SnapshotView:
        return SnapshotView(
            int(t),
            self._layer_names,
            (v for v in self._vertices.values() if v.active_at(t)),
            (e for e in self._edges.values() if e.active_at(t)),
        )

    @property
    def vertex_records(self) -> dict[int, VertexRecord]:
        return dict(self._vertices)

    @property
    def edge_records(self) -> dict[int, EdgeRecord]:
        return dict(self._edges)
