"""Assembled conversation knowledge graph: nodes, edges, metrics, storage.

Nodes are knowledge-base heads plus materialized tails. Atomic edges carry the
head-to-tail relations; flow edges come from the edge builders. The store
supports the service's edit operations and keeps its per-family stats in step
with every mutation.
"""

import copy
import gzip
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace

from .edges import (CONCEPT_FLOW, EMOTION_CAUSE, EMOTION_INTENT, EVENT_FLOW,
                    INTENT_EDGE_LABELS, NEXT_SUB_UTTERANCE, NEXT_UTTERANCE,
                    FlowEdge, Provenance, scoped_tail_node_id, tail_node_id)
from .kb import (KB, RELATIONS, TAIL_AFTER, TAIL_BEFORE, TAIL_EMOTION,
                 categorize_tail, normalize_ws)

ATOMIC = "atomic"

NODE_EVENT_HEAD = "event_head"
NODE_ENTITY_HEAD = "entity_head"
NODE_TAIL = "tail"

FORMAT_NAME = "convkg-graph"
FORMAT_VERSION = 1


class GraphError(ValueError):
    """A graph operation or file violates its contract."""


class UnknownNodeError(GraphError):
    """A referenced node or edge does not exist."""


class DuplicateError(GraphError):
    """The mutation would recreate something that already exists."""


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: str
    text: str


@dataclass(frozen=True)
class GraphEdge:
    kind: str
    src: str
    dst: str
    relation: str | None = None
    subkind: str | None = None
    weight: int = 1
    intent_label: str | None = None
    provenance: tuple[Provenance, ...] = ()

    @property
    def key(self):
        return (self.kind, self.relation or "", self.subkind or "",
                self.src, self.dst, self.intent_label or "")


@dataclass
class GraphStats:
    atomic_relations: int = 0
    event_flows: int = 0
    concept_flows: int = 0
    emotion_cause_flows: int = 0
    emotion_intent_flows: int = 0

    @property
    def total_triplets(self) -> int:
        return (self.atomic_relations + self.event_flows + self.concept_flows
                + self.emotion_cause_flows + self.emotion_intent_flows)

    def as_dict(self) -> dict:
        return {
            "atomic_relations": self.atomic_relations,
            "event_flows": self.event_flows,
            "concept_flows": self.concept_flows,
            "emotion_cause_flows": self.emotion_cause_flows,
            "emotion_intent_flows": self.emotion_intent_flows,
            "total_triplets": self.total_triplets,
        }


_STATS_FIELD = {
    ATOMIC: "atomic_relations",
    EVENT_FLOW: "event_flows",
    CONCEPT_FLOW: "concept_flows",
    EMOTION_CAUSE: "emotion_cause_flows",
    EMOTION_INTENT: "emotion_intent_flows",
}


class ConversationGraph:
    """Mutable graph store with deterministic serialization."""

    def __init__(self, tail_dedup: bool = True):
        self.tail_dedup = tail_dedup
        self.nodes: dict[str, GraphNode] = {}
        self.edges: dict[tuple, GraphEdge] = {}
        self.version = 0
        self._out: dict[str, list[tuple]] = {}
        self._in: dict[str, list[tuple]] = {}
        self._stats = GraphStats()

    # -- node and edge plumbing ------------------------------------------

    def add_node(self, node: GraphNode):
        existing = self.nodes.get(node.id)
        if existing is not None:
            if existing != node:
                raise DuplicateError(f"node id {node.id!r} already bound to {existing.text!r}")
            return existing
        self.nodes[node.id] = node
        return node

    def node(self, node_id: str) -> GraphNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def _insert_edge(self, edge: GraphEdge):
        self.edges[edge.key] = edge
        self._out.setdefault(edge.src, []).append(edge.key)
        self._in.setdefault(edge.dst, []).append(edge.key)
        name = _STATS_FIELD[edge.kind]
        setattr(self._stats, name, getattr(self._stats, name) + 1)

    def _remove_edge(self, key):
        edge = self.edges.pop(key)
        self._out[edge.src].remove(key)
        self._in[edge.dst].remove(key)
        name = _STATS_FIELD[edge.kind]
        setattr(self._stats, name, getattr(self._stats, name) - 1)
        return edge

    def _tail_id(self, head_id: str, relation: str, tail: str) -> str:
        if self.tail_dedup:
            return tail_node_id(tail)
        return scoped_tail_node_id(head_id, relation, tail)

    def tail_categories(self, node_id: str) -> set[str]:
        """Tail categories a tail node participates in, via its atomic edges."""
        out = set()
        for key in self._in.get(node_id, ()):
            edge = self.edges[key]
            if edge.kind == ATOMIC:
                out.add(categorize_tail(edge.relation))
        return out

    # -- atomic triples ---------------------------------------------------

    def add_atomic_triple(self, head_id: str, relation: str, tail: str) -> GraphEdge:
        head = self.node(head_id)
        if head.kind not in (NODE_EVENT_HEAD, NODE_ENTITY_HEAD):
            raise GraphError(f"node {head_id!r} is not a head node")
        if relation not in RELATIONS:
            raise GraphError(f"unknown relation {relation!r}")
        tail = tail.strip()
        if not tail:
            raise GraphError("empty tail")
        tid = self._tail_id(head_id, relation, tail)
        key = (ATOMIC, relation, "", head_id, tid, "")
        if key in self.edges:
            raise DuplicateError(f"triple ({head_id}, {relation}, {tail!r}) already present")
        if tid not in self.nodes:
            self.nodes[tid] = GraphNode(id=tid, kind=NODE_TAIL, text=normalize_ws(tail))
        edge = GraphEdge(kind=ATOMIC, relation=relation, src=head_id, dst=tid)
        self._insert_edge(edge)
        return edge

    def delete_atomic_triple(self, head_id: str, relation: str, tail: str):
        tid = self._tail_id(head_id, relation, tail.strip())
        key = (ATOMIC, relation, "", head_id, tid, "")
        if key not in self.edges:
            raise UnknownNodeError(f"no triple ({head_id}, {relation}, {tail!r})")
        self._remove_edge(key)
        self._drop_if_orphaned(tid)

    def revise_atomic_triple(self, head_id: str, relation: str, old_tail: str, new_tail: str):
        old_key = (ATOMIC, relation, "", head_id,
                   self._tail_id(head_id, relation, old_tail.strip()), "")
        if old_key not in self.edges:
            raise UnknownNodeError(f"no triple ({head_id}, {relation}, {old_tail!r})")
        new_tid = self._tail_id(head_id, relation, new_tail.strip())
        if (ATOMIC, relation, "", head_id, new_tid, "") in self.edges:
            raise DuplicateError(f"triple ({head_id}, {relation}, {new_tail!r}) already present")
        self.delete_atomic_triple(head_id, relation, old_tail)
        return self.add_atomic_triple(head_id, relation, new_tail)

    def _drop_if_orphaned(self, node_id: str):
        node = self.nodes.get(node_id)
        if node is None or node.kind != NODE_TAIL:
            return
        if not self._out.get(node_id) and not self._in.get(node_id):
            del self.nodes[node_id]
            self._out.pop(node_id, None)
            self._in.pop(node_id, None)

    # -- flow edges -------------------------------------------------------

    def _check_flow_endpoints(self, kind, src, dst, intent_label):
        src_node = self.node(src)
        dst_node = self.node(dst)
        if kind == EVENT_FLOW:
            want = NODE_EVENT_HEAD
            if src_node.kind != want or dst_node.kind != want:
                raise GraphError(f"event flow endpoints must be event heads, got "
                                 f"{src_node.kind}/{dst_node.kind}")
        elif kind == CONCEPT_FLOW:
            want = NODE_ENTITY_HEAD
            if src_node.kind != want or dst_node.kind != want:
                raise GraphError(f"concept flow endpoints must be entity heads, got "
                                 f"{src_node.kind}/{dst_node.kind}")
        elif kind == EMOTION_CAUSE:
            if TAIL_EMOTION not in self.tail_categories(src):
                raise GraphError(f"emotion cause source {src!r} is not an emotion tail")
            if TAIL_BEFORE not in self.tail_categories(dst):
                raise GraphError(f"emotion cause target {dst!r} is not a precondition tail")
        elif kind == EMOTION_INTENT:
            if intent_label not in INTENT_EDGE_LABELS:
                raise GraphError(f"emotion intent edge needs a specific intent label, "
                                 f"got {intent_label!r}")
            if TAIL_EMOTION not in self.tail_categories(src):
                raise GraphError(f"emotion intent source {src!r} is not an emotion tail")
            if TAIL_AFTER not in self.tail_categories(dst):
                raise GraphError(f"emotion intent target {dst!r} is not an aftermath tail")
        else:
            raise GraphError(f"unknown flow kind {kind!r}")

    def add_flow_edge(self, edge: FlowEdge, validate: bool = True) -> GraphEdge:
        """Insert or merge a flow edge, enforcing endpoint categories."""
        if validate:
            self._check_flow_endpoints(edge.kind, edge.src, edge.dst, edge.intent_label)
        key = (edge.kind, "", edge.subkind or "", edge.src, edge.dst, edge.intent_label or "")
        existing = self.edges.get(key)
        if existing is not None:
            merged = replace(existing, weight=existing.weight + edge.weight,
                             provenance=existing.provenance + edge.provenance)
            self.edges[key] = merged
            return merged
        ge = GraphEdge(kind=edge.kind, src=edge.src, dst=edge.dst, relation=None,
                       subkind=edge.subkind, weight=edge.weight,
                       intent_label=edge.intent_label, provenance=edge.provenance)
        self._insert_edge(ge)
        return ge

    def relabel_intent_edge(self, src: str, dst: str, new_label: str,
                            old_label: str | None = None) -> GraphEdge:
        """Move an emotion-intent edge to a different intent label."""
        if new_label not in INTENT_EDGE_LABELS:
            raise GraphError(f"intent label must be one of {sorted(INTENT_EDGE_LABELS)}, "
                             f"got {new_label!r}")
        candidates = [
            k for k in self._out.get(src, ())
            if self.edges[k].kind == EMOTION_INTENT and self.edges[k].dst == dst
            and (old_label is None or self.edges[k].intent_label == old_label)
        ]
        if not candidates:
            raise UnknownNodeError(f"no emotion intent edge {src!r} -> {dst!r}"
                                   + (f" with label {old_label!r}" if old_label else ""))
        if len(candidates) > 1:
            raise GraphError(f"ambiguous emotion intent edge {src!r} -> {dst!r}; "
                             "specify the current label")
        edge = self._remove_edge(candidates[0])
        moved = replace(edge, intent_label=new_label)
        target = self.edges.get(moved.key)
        if target is not None:
            merged = replace(target, weight=target.weight + moved.weight,
                             provenance=target.provenance + moved.provenance)
            self.edges[moved.key] = merged
            return merged
        self._insert_edge(moved)
        return moved

    # -- read side --------------------------------------------------------

    def neighbors(self, node_id: str, kinds=None, direction: str = "both"):
        """(edge, neighbor) pairs ordered by kind, weight descending, id."""
        self.node(node_id)
        if direction not in ("out", "in", "both"):
            raise GraphError(f"direction must be out, in, or both, got {direction!r}")
        kinds = set(kinds) if kinds is not None else None
        found = []
        if direction in ("out", "both"):
            for key in self._out.get(node_id, ()):
                edge = self.edges[key]
                if kinds is None or edge.kind in kinds:
                    found.append((edge, self.nodes[edge.dst]))
        if direction in ("in", "both"):
            for key in self._in.get(node_id, ()):
                edge = self.edges[key]
                if kinds is None or edge.kind in kinds:
                    found.append((edge, self.nodes[edge.src]))
        found.sort(key=lambda pair: (pair[0].kind, -pair[0].weight, pair[1].id,
                                     pair[0].relation or "", pair[0].subkind or ""))
        return found

    def distance(self, a: str, b: str, kinds=None):
        """Shortest hop count between two nodes, edges taken as undirected.

        Returns None when the nodes are disconnected.
        """
        self.node(a)
        self.node(b)
        if a == b:
            return 0
        kinds = set(kinds) if kinds is not None else None
        seen = {a}
        queue = deque([(a, 0)])
        while queue:
            current, dist = queue.popleft()
            for key in self._out.get(current, []) + self._in.get(current, []):
                edge = self.edges[key]
                if kinds is not None and edge.kind not in kinds:
                    continue
                other = edge.dst if edge.src == current else edge.src
                if other == b:
                    return dist + 1
                if other not in seen:
                    seen.add(other)
                    queue.append((other, dist + 1))
        return None

    def stats(self) -> GraphStats:
        return replace(self._stats)

    def copy(self) -> "ConversationGraph":
        return copy.deepcopy(self)


def assemble(kb: KB, flow_edges=(), tail_dedup: bool = True) -> ConversationGraph:
    """Build a graph from a knowledge base and pre-built flow edges.

    Flow edges whose endpoints resolve to nothing raise one error naming every
    offender.
    """
    graph = ConversationGraph(tail_dedup=tail_dedup)
    for head in sorted(kb.heads.values(), key=lambda h: h.id):
        kind = NODE_EVENT_HEAD if head.level == "event" else NODE_ENTITY_HEAD
        graph.add_node(GraphNode(id=head.id, kind=kind, text=head.text))
    for triple in kb.triples:
        graph.add_atomic_triple(triple.head.id, triple.relation, triple.tail)
    flow_edges = list(flow_edges)
    dangling = []
    for edge in flow_edges:
        for endpoint in (edge.src, edge.dst):
            if endpoint not in graph.nodes:
                dangling.append(f"{edge.kind} edge {edge.src!r} -> {edge.dst!r}: "
                                f"missing {endpoint!r}")
    if dangling:
        raise GraphError("dangling flow edge endpoints:\n" + "\n".join(sorted(set(dangling))))
    for edge in flow_edges:
        graph.add_flow_edge(edge, validate=True)
    return graph


# --- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeEvaluation:
    connectivity: float
    avg_distance: float | None
    pairs: int
    connected: int

    @property
    def disconnected(self) -> int:
        return self.pairs - self.connected


def edge_evaluation(graph: ConversationGraph, pairs, kinds=None) -> EdgeEvaluation:
    """Connectivity fraction and mean distance over node pairs.

    Pairs whose endpoints are absent from the graph count as disconnected.
    """
    pairs = list(pairs)
    if not pairs:
        raise GraphError("no pairs to evaluate")
    connected = 0
    distances = []
    for a, b in pairs:
        if a not in graph.nodes or b not in graph.nodes:
            continue
        d = graph.distance(a, b, kinds)
        if d is not None:
            connected += 1
            distances.append(d)
    avg = sum(distances) / len(distances) if distances else None
    return EdgeEvaluation(
        connectivity=connected / len(pairs),
        avg_distance=avg,
        pairs=len(pairs),
        connected=connected,
    )


@dataclass(frozen=True)
class ScenarioGraph:
    scenario_id: str
    head_ids: tuple[str, ...]
    node_ids: tuple[str, ...]
    edges: tuple[GraphEdge, ...]


def scenario_subgraph(graph: ConversationGraph, scenario_id: str, matches,
                      fraction: float = 0.005) -> ScenarioGraph:
    """Top heads for a scenario by match frequency then score, with the edges
    among them and their tails."""
    if not 0 < fraction <= 1:
        raise GraphError(f"fraction must be in (0, 1], got {fraction}")
    freq: dict[str, int] = {}
    best: dict[str, float] = {}
    for m in matches:
        head_id = m.head.id
        freq[head_id] = freq.get(head_id, 0) + 1
        best[head_id] = max(best.get(head_id, -math.inf), m.score)
    if not freq:
        raise GraphError(f"scenario {scenario_id!r} has no matches")
    ranked = sorted(freq, key=lambda h: (-freq[h], -best[h], h))
    take = math.ceil(fraction * len(ranked))
    chosen = ranked[:take]
    node_ids = set(chosen)
    for head_id in chosen:
        if head_id not in graph.nodes:
            raise UnknownNodeError(f"matched head {head_id!r} missing from graph")
        for key in graph._out.get(head_id, ()):
            edge = graph.edges[key]
            if edge.kind == ATOMIC:
                node_ids.add(edge.dst)
    edges = tuple(
        graph.edges[k] for k in sorted(graph.edges)
        if graph.edges[k].src in node_ids and graph.edges[k].dst in node_ids
    )
    return ScenarioGraph(
        scenario_id=scenario_id,
        head_ids=tuple(chosen),
        node_ids=tuple(sorted(node_ids)),
        edges=edges,
    )


# --- storage ------------------------------------------------------------------

def _edge_to_record(edge: GraphEdge) -> dict:
    return {
        "kind": edge.kind,
        "relation": edge.relation,
        "subkind": edge.subkind,
        "from": edge.src,
        "to": edge.dst,
        "weight": edge.weight,
        "intent_label": edge.intent_label,
        "provenance": [
            {"conv": p.conversation_id, "utterances": list(p.utterances), "kind": p.kind}
            for p in edge.provenance
        ],
    }


def _edge_from_record(rec) -> GraphEdge:
    return GraphEdge(
        kind=rec["kind"],
        src=rec["from"],
        dst=rec["to"],
        relation=rec.get("relation"),
        subkind=rec.get("subkind"),
        weight=rec["weight"],
        intent_label=rec.get("intent_label"),
        provenance=tuple(
            Provenance(p["conv"], tuple(p["utterances"]), p.get("kind", "auto"))
            for p in rec.get("provenance", [])
        ),
    )


def serialize(graph: ConversationGraph, path=None):
    """Write the graph as versioned line-delimited records, nodes then edges.

    With no path, returns the serialized bytes. A ``.gz`` suffix gzips the
    output. Equal graphs serialize to byte-identical payloads.
    """
    lines = [json.dumps({
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "tail_dedup": graph.tail_dedup,
        "graph_version": graph.version,
    }, ensure_ascii=False, sort_keys=True)]
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        lines.append(json.dumps(
            {"node": {"id": node.id, "kind": node.kind, "text": node.text}},
            ensure_ascii=False, sort_keys=True))
    for key in sorted(graph.edges):
        lines.append(json.dumps({"edge": _edge_to_record(graph.edges[key])},
                                ensure_ascii=False, sort_keys=True))
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    if path is None:
        return payload
    path = str(path)
    if path.endswith(".gz"):
        with gzip.open(path, "wb") as fh:
            fh.write(payload)
    else:
        with open(path, "wb") as fh:
            fh.write(payload)
    return None


def deserialize(source) -> ConversationGraph:
    """Read a serialized graph from a path or raw bytes; gzip is transparent."""
    if isinstance(source, (bytes, bytearray)):
        payload = bytes(source)
    else:
        with open(source, "rb") as fh:
            payload = fh.read()
    if payload[:2] == b"\x1f\x8b":
        payload = gzip.decompress(payload)
    lines = payload.decode("utf-8").splitlines()
    if not lines:
        raise GraphError("empty graph file")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT_NAME:
        raise GraphError(f"not a graph file (format {header.get('format')!r})")
    if header.get("version") != FORMAT_VERSION:
        raise GraphError(f"unsupported graph format version {header.get('version')!r}")
    graph = ConversationGraph(tail_dedup=header.get("tail_dedup", True))
    graph.version = header.get("graph_version", 0)
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        rec = json.loads(raw)
        if "node" in rec:
            n = rec["node"]
            graph.add_node(GraphNode(id=n["id"], kind=n["kind"], text=n["text"]))
        elif "edge" in rec:
            edge = _edge_from_record(rec["edge"])
            for endpoint in (edge.src, edge.dst):
                if endpoint not in graph.nodes:
                    raise GraphError(f"line {line_no}: edge references unknown node "
                                     f"{endpoint!r}")
            graph._insert_edge(edge)
        else:
            raise GraphError(f"line {line_no}: unrecognized record")
    return graph


def graphs_equal(a: ConversationGraph, b: ConversationGraph) -> bool:
    return serialize(a) == serialize(b)
