"""HTTP service for browsing and editing an assembled graph.

All mutations flow through a single-writer lock, are checked against the graph
version the editor read (stale writers get the current version back), and are
appended to an audit log before the response goes out. Replaying the audit log
onto the starting graph reproduces the current graph exactly.
"""

import json
import os
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Query, Request
from pydantic import BaseModel

from .edges import EMOTION_INTENT, EVENT_FLOW, CONCEPT_FLOW, EMOTION_CAUSE, FlowEdge, Provenance
from .graph import (ConversationGraph, DuplicateError, GraphError,
                    UnknownNodeError, scenario_subgraph, serialize)

EDIT_OPS = ("add_tail", "revise_tail", "delete_tail", "add_flow_edge", "label_edge")


class ServiceError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


@dataclass(frozen=True)
class EditOp:
    op: str
    payload: dict
    author: str
    base_version: int
    # Recorded in the audit log; never enters graph state, so replay stays
    # byte-identical regardless of wall clock.
    timestamp: float | None = None


@dataclass
class AuditLog:
    """Append-only edit log, durably flushed before each acknowledgment."""

    path: str | None = None
    entries: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.path and os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                self.entries = [json.loads(line) for line in fh if line.strip()]

    def append(self, record: dict):
        self.entries.append(record)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())


def _require(payload: dict, *keys):
    for key in keys:
        value = payload.get(key)
        if value is None or (isinstance(value, str) and not value.strip()):
            raise ServiceError(422, f"edit payload missing {key!r}")
    return [payload[k] for k in keys]


def apply_edit(graph: ConversationGraph, op: EditOp) -> dict:
    """Validate and apply one edit; bumps the graph version on success.

    Raises ServiceError with a 404-class status for unknown targets, 409 for
    stale versions, and 422 for contract violations.
    """
    if op.op not in EDIT_OPS:
        raise ServiceError(422, f"unknown edit op {op.op!r}; expected one of {EDIT_OPS}")
    if not op.author:
        raise ServiceError(422, "edit needs an author")
    if op.base_version != graph.version:
        raise ServiceError(
            409, f"stale edit: based on version {op.base_version}, "
                 f"current version is {graph.version}")
    payload = op.payload or {}
    try:
        if op.op == "add_tail":
            head_id, relation, tail = _require(payload, "head_id", "relation", "tail")
            edge = graph.add_atomic_triple(head_id, relation, tail)
            result = {"edge": {"from": edge.src, "to": edge.dst, "relation": edge.relation}}
        elif op.op == "revise_tail":
            head_id, relation, old, new = _require(
                payload, "head_id", "relation", "old_tail", "new_tail")
            edge = graph.revise_atomic_triple(head_id, relation, old, new)
            result = {"edge": {"from": edge.src, "to": edge.dst, "relation": edge.relation}}
        elif op.op == "delete_tail":
            head_id, relation, tail = _require(payload, "head_id", "relation", "tail")
            graph.delete_atomic_triple(head_id, relation, tail)
            result = {"deleted": True}
        elif op.op == "add_flow_edge":
            kind, src, dst = _require(payload, "kind", "from", "to")
            if kind not in (EVENT_FLOW, CONCEPT_FLOW, EMOTION_CAUSE, EMOTION_INTENT):
                raise ServiceError(422, f"unknown flow kind {kind!r}")
            try:
                flow = FlowEdge(
                    kind=kind, src=src, dst=dst,
                    subkind=payload.get("subkind"),
                    intent_label=payload.get("intent_label"),
                    weight=1,
                    provenance=(Provenance(f"expert:{op.author}", (), "expert"),),
                )
            except ValueError as exc:
                raise ServiceError(422, str(exc)) from None
            edge = graph.add_flow_edge(flow, validate=True)
            result = {"edge": {"from": edge.src, "to": edge.dst, "kind": edge.kind,
                               "weight": edge.weight}}
        else:  # label_edge
            src, dst, label = _require(payload, "from", "to", "intent_label")
            edge = graph.relabel_intent_edge(
                src, dst, label, old_label=payload.get("old_intent_label"))
            result = {"edge": {"from": edge.src, "to": edge.dst,
                               "intent_label": edge.intent_label}}
    except UnknownNodeError as exc:
        raise ServiceError(404, str(exc)) from None
    except DuplicateError as exc:
        raise ServiceError(422, str(exc)) from None
    except GraphError as exc:
        raise ServiceError(422, str(exc)) from None
    graph.version += 1
    return result


def replay_audit_log(graph: ConversationGraph, entries) -> ConversationGraph:
    """Apply logged edits in order to a copy of the graph."""
    out = graph.copy()
    for entry in entries:
        apply_edit(out, EditOp(
            op=entry["op"],
            payload=entry["payload"],
            author=entry["author"],
            base_version=entry["base_version"],
        ))
    return out


class EditRequest(BaseModel):
    op: str
    payload: dict = {}
    author: str = ""
    base_version: int


def _node_record(node):
    return {"id": node.id, "kind": node.kind, "text": node.text}


def _edge_record(edge):
    return {
        "kind": edge.kind,
        "relation": edge.relation,
        "subkind": edge.subkind,
        "from": edge.src,
        "to": edge.dst,
        "weight": edge.weight,
        "intent_label": edge.intent_label,
    }


def create_app(graph: ConversationGraph, corpus=None, scenario_matches=None,
               audit_log: AuditLog | None = None, auth_token: str | None = None,
               fraction: float = 0.005) -> FastAPI:
    """Build the API around one graph store.

    ``scenario_matches`` maps scenario ids to their mention matches and feeds
    the per-scenario subgraph endpoint. When ``auth_token`` is set, mutations
    must present it as a bearer token.
    """
    app = FastAPI(title="convkg")
    log = audit_log if audit_log is not None else AuditLog()
    lock = threading.Lock()
    scenario_matches = scenario_matches or {}

    @app.get("/health")
    def health():
        return {"status": "ok", "version": graph.version}

    @app.get("/stats")
    def stats():
        with lock:
            return {"stats": graph.stats().as_dict(), "version": graph.version,
                    "nodes": len(graph.nodes)}

    @app.get("/nodes/{node_id:path}/neighbors")
    def node_neighbors(node_id: str, kinds: str | None = Query(default=None),
                       direction: str = Query(default="both")):
        kind_filter = [k for k in kinds.split(",") if k] if kinds else None
        with lock:
            try:
                found = graph.neighbors(node_id, kinds=kind_filter, direction=direction)
            except UnknownNodeError as exc:
                raise HTTPException(404, str(exc)) from None
            except GraphError as exc:
                raise HTTPException(422, str(exc)) from None
            return {
                "node": node_id,
                "neighbors": [
                    {"edge": _edge_record(e), "node": _node_record(n)} for e, n in found
                ],
            }

    @app.get("/nodes/{node_id:path}")
    def get_node(node_id: str):
        with lock:
            try:
                node = graph.node(node_id)
            except UnknownNodeError as exc:
                raise HTTPException(404, str(exc)) from None
            return {
                "node": _node_record(node),
                "out_degree": len(graph._out.get(node_id, ())),
                "in_degree": len(graph._in.get(node_id, ())),
            }

    @app.get("/search")
    def search(q: str = Query(min_length=1), limit: int = Query(default=50, le=500)):
        needle = q.casefold()
        with lock:
            hits = [
                _node_record(graph.nodes[n]) for n in sorted(graph.nodes)
                if needle in graph.nodes[n].text.casefold()
            ]
        return {"query": q, "nodes": hits[:limit], "total": len(hits)}

    @app.get("/scenarios/{scenario_id}/graph")
    def scenario_graph(scenario_id: str, fraction_override: float | None = Query(
            default=None, alias="fraction")):
        matches = scenario_matches.get(scenario_id)
        if matches is None:
            raise HTTPException(404, f"unknown scenario {scenario_id!r}")
        with lock:
            try:
                sub = scenario_subgraph(graph, scenario_id, matches,
                                        fraction_override or fraction)
            except GraphError as exc:
                raise HTTPException(422, str(exc)) from None
            return {
                "scenario_id": sub.scenario_id,
                "head_ids": list(sub.head_ids),
                "nodes": [_node_record(graph.nodes[n]) for n in sub.node_ids],
                "edges": [_edge_record(e) for e in sub.edges],
            }

    @app.get("/edits")
    def list_edits():
        with lock:
            return {"edits": list(log.entries), "version": graph.version}

    @app.post("/edits")
    def post_edit(edit: EditRequest, request: Request):
        if auth_token:
            header = request.headers.get("authorization", "")
            if header != f"Bearer {auth_token}":
                raise HTTPException(401, "missing or invalid bearer token")
        op = EditOp(op=edit.op, payload=edit.payload, author=edit.author,
                    base_version=edit.base_version, timestamp=time.time())
        with lock:
            try:
                result = apply_edit(graph, op)
            except ServiceError as exc:
                detail = {"detail": exc.detail, "version": graph.version}
                raise HTTPException(exc.status, detail) from None
            record = {
                "op": op.op,
                "payload": op.payload,
                "author": op.author,
                "base_version": op.base_version,
                "version": graph.version,
                "timestamp": op.timestamp,
            }
            log.append(record)
            return {"applied": True, "version": graph.version, "result": result}

    return app


def serve(graph: ConversationGraph, corpus=None, bind: str = "127.0.0.1:8763",
          scenario_matches=None, audit_log=None, auth_token=None,
          fraction: float = 0.005):
    """Run the API with a local development server."""
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(graph, corpus=corpus, scenario_matches=scenario_matches,
                     audit_log=audit_log, auth_token=auth_token, fraction=fraction)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8763))


def snapshot_bytes(graph: ConversationGraph) -> bytes:
    return serialize(graph)
