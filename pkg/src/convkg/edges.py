"""Build dialog-flow edges between matched heads and between tails.

Event and concept flows follow the order of matches through a conversation.
Emotion-cause edges run from an emotion tail back to a precondition tail that
keyword-matches earlier context; emotion-intent edges run from an emotion tail
forward to an aftermath tail that keyword-matches the next utterance, labeled
with that utterance's intent.
"""

import json
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from .corpus import Conversation
from .extract import CONTENT_POS
from .kb import (KB, TAIL_AFTER, TAIL_BEFORE, TAIL_EMOTION, categorize_tail,
                 normalize_ws)
from .link import MentionHeadMatch, cosine

EVENT_FLOW = "event_flow"
CONCEPT_FLOW = "concept_flow"
EMOTION_CAUSE = "emotion_cause"
EMOTION_INTENT = "emotion_intent"
FLOW_KINDS = (EVENT_FLOW, CONCEPT_FLOW, EMOTION_CAUSE, EMOTION_INTENT)

NEXT_UTTERANCE = "next_utterance"
NEXT_SUB_UTTERANCE = "next_sub_utterance"

# Intent labels an emotion-intent edge may carry; the catch-all class is
# deliberately excluded.
INTENT_EDGE_LABELS = frozenset({"ask", "advise", "describe", "opinion", "console"})

PROVENANCE_AUTO = "auto"
PROVENANCE_EXPERT = "expert"


class EdgeError(ValueError):
    """An edge record or builder input violates its contract."""


@dataclass(frozen=True)
class Provenance:
    conversation_id: str
    utterances: tuple[int, ...]
    kind: str = PROVENANCE_AUTO


@dataclass(frozen=True)
class FlowEdge:
    kind: str
    src: str
    dst: str
    subkind: str | None = None
    weight: int = 1
    intent_label: str | None = None
    provenance: tuple[Provenance, ...] = ()

    def __post_init__(self):
        if self.kind not in FLOW_KINDS:
            raise EdgeError(f"unknown edge kind {self.kind!r}")
        if self.kind == EVENT_FLOW and self.subkind not in (NEXT_UTTERANCE, NEXT_SUB_UTTERANCE):
            raise EdgeError(f"event flow edge needs a subkind, got {self.subkind!r}")
        if self.kind != EVENT_FLOW and self.subkind is not None:
            raise EdgeError(f"{self.kind} edge cannot carry subkind {self.subkind!r}")
        if self.kind == EMOTION_INTENT:
            if self.intent_label not in INTENT_EDGE_LABELS:
                raise EdgeError(f"emotion intent edge needs a specific intent label, "
                                f"got {self.intent_label!r}")
        elif self.intent_label is not None:
            raise EdgeError(f"{self.kind} edge cannot carry an intent label")
        if self.provenance and self.weight != len(self.provenance):
            raise EdgeError(f"weight {self.weight} disagrees with "
                            f"{len(self.provenance)} provenance entries")

    @property
    def key(self):
        return (self.kind, self.subkind or "", self.src, self.dst, self.intent_label or "")


def tail_node_id(text: str) -> str:
    return "tail::" + normalize_ws(text)


def scoped_tail_node_id(head_id: str, relation: str, text: str) -> str:
    return f"tail::{head_id}::{relation}::{normalize_ws(text)}"


class _EdgeAccumulator:
    def __init__(self):
        self._acc: dict[tuple, list[Provenance]] = {}
        self._meta: dict[tuple, tuple] = {}

    def add(self, kind, src, dst, subkind, intent_label, prov: Provenance):
        key = (kind, subkind or "", src, dst, intent_label or "")
        self._acc.setdefault(key, []).append(prov)
        self._meta[key] = (kind, src, dst, subkind, intent_label)

    def edges(self) -> list[FlowEdge]:
        out = []
        for key in sorted(self._acc):
            kind, src, dst, subkind, intent_label = self._meta[key]
            provs = tuple(self._acc[key])
            out.append(FlowEdge(kind=kind, src=src, dst=dst, subkind=subkind,
                                weight=len(provs), intent_label=intent_label,
                                provenance=provs))
        return out


def _flow_edges(linked: Mapping[str, Sequence[MentionHeadMatch]], kind: str,
                subkinds: tuple[str | None, str | None],
                node_id: Callable[[MentionHeadMatch], str],
                cross_utterance_pairs: bool) -> list[FlowEdge]:
    intra_subkind, inter_subkind = subkinds
    acc = _EdgeAccumulator()
    for conv_id in sorted(linked):
        by_utt: dict[int, list[MentionHeadMatch]] = {}
        for m in linked[conv_id]:
            by_utt.setdefault(m.mention.source.utterance_index, []).append(m)
        for utt_idx, matches in sorted(by_utt.items()):
            for a, b in zip(matches, matches[1:]):
                if node_id(a) == node_id(b):
                    continue
                acc.add(kind, node_id(a), node_id(b), intra_subkind, None,
                        Provenance(conv_id, (utt_idx,)))
        for utt_idx in sorted(by_utt):
            if utt_idx + 1 not in by_utt:
                continue
            if cross_utterance_pairs:
                pairs = [(a, b) for a in by_utt[utt_idx] for b in by_utt[utt_idx + 1]]
            else:
                pairs = [(by_utt[utt_idx][-1], by_utt[utt_idx + 1][0])]
            for a, b in pairs:
                if node_id(a) == node_id(b):
                    continue
                acc.add(kind, node_id(a), node_id(b), inter_subkind, None,
                        Provenance(conv_id, (utt_idx, utt_idx + 1)))
    return acc.edges()


def build_event_flows(linked: Mapping[str, Sequence[MentionHeadMatch]],
                      cross_utterance_pairs: bool = False) -> list[FlowEdge]:
    """Directed flows between event heads matched along each conversation.

    Consecutive matches inside one utterance yield next-sub-utterance edges;
    the last match of an utterance connects to the first match of the
    immediately following one (or to all of them when the cross-product pairing
    is turned on).
    """
    return _flow_edges(linked, EVENT_FLOW, (NEXT_SUB_UTTERANCE, NEXT_UTTERANCE),
                       lambda m: m.head.id, cross_utterance_pairs)


def build_concept_flows(linked: Mapping[str, Sequence[MentionHeadMatch]],
                        cross_utterance_pairs: bool = False) -> list[FlowEdge]:
    """Same adjacency as event flows, over concept matches to entity heads."""
    return _flow_edges(linked, CONCEPT_FLOW, (None, None),
                       lambda m: m.head.id, cross_utterance_pairs)


def frequency_filter(edges: Sequence[FlowEdge], min_weight: int) -> list[FlowEdge]:
    return [e for e in edges if e.weight >= min_weight]


# --- emotion labeling for tails ----------------------------------------------

DEFAULT_EMOTION_LEXICON = {
    "joy": ("开心", "高兴", "快乐", "喜悦", "兴奋", "欣慰"),
    "sad": ("难过", "伤心", "悲伤", "不舒服", "失望", "痛苦", "沮丧"),
    "angry": ("生气", "愤怒", "恼火", "气愤", "烦躁"),
}

DEFAULT_SURPRISE_PROTOTYPES = ("惊讶", "吃惊", "意外")


class LexiconSentimentClassifier:
    """Substring lookup over per-label word lists; unmatched text is 'other'."""

    def __init__(self, lexicon=None):
        self.lexicon = dict(lexicon or DEFAULT_EMOTION_LEXICON)

    def classify(self, text: str) -> str:
        for label in ("joy", "sad", "angry"):
            for word in self.lexicon.get(label, ()):
                if word and word in text:
                    return label
        return "other"


def label_tail_emotion(tail: str, classifier, provider=None,
                       surprise_threshold: float = 0.7,
                       prototypes=DEFAULT_SURPRISE_PROTOTYPES) -> str:
    """Sentiment label for a tail, with an embedding fallback for surprise.

    Tails the lexicon cannot place are compared against canonical surprise
    phrases; a close enough match relabels them 'surprising'.
    """
    label = classifier.classify(tail)
    if label != "other" or provider is None or not prototypes:
        return label
    vectors = provider.embed([tail] + list(prototypes))
    best = max(cosine(vectors[0], v) for v in vectors[1:])
    if best >= surprise_threshold:
        return "surprising"
    return label


# --- emotion-anchored edges --------------------------------------------------

def utterance_keywords(conv: Conversation, utt_idx: int, stopwords=frozenset()) -> set[str]:
    """Content-token surface forms of a parsed utterance."""
    parse = conv.parses.get(utt_idx)
    if parse is None:
        return set()
    return {
        tok.form
        for su in parse.sub_utterances
        for tok in su.tokens
        if tok.pos in CONTENT_POS and tok.form not in stopwords
    }


def text_keywords(text: str, stopwords=frozenset()) -> set[str]:
    """Surface forms of an unsegmented text: the whole phrase plus any
    whitespace-separated parts."""
    parts = {text.strip()} | set(text.split())
    return {p for p in parts if p and p not in stopwords}


def _emotion_tails(head_id: str, kb: KB, emotion: str, tail_label) -> list[str]:
    out = []
    for triple in kb.by_head.get(head_id, ()):
        if categorize_tail(triple.relation) != TAIL_EMOTION:
            continue
        if tail_label(triple.tail) == emotion:
            out.append(triple.tail)
    return out


def _category_tails(head_id: str, kb: KB, category: str) -> list[str]:
    return [t.tail for t in kb.by_head.get(head_id, ())
            if categorize_tail(t.relation) == category]


def build_emotion_cause_edges(conv: Conversation, linked_heads: Mapping[int, Sequence],
                              kb: KB, tail_label: Callable[[str], str],
                              stopwords=frozenset()) -> list[FlowEdge]:
    """Edges from an emotion tail back to a precondition tail found in context.

    For each utterance with a real emotion label and a matched head: emotion
    tails agreeing with the utterance label become sources, and precondition
    tails whose keywords intersect any earlier utterance's keywords become
    targets.
    """
    acc = _EdgeAccumulator()
    kw = {u.index: utterance_keywords(conv, u.index, stopwords) for u in conv.utterances}
    for utt_idx in sorted(linked_heads):
        emotion = conv.utterances[utt_idx].emotion
        if emotion == "other":
            continue
        for head in linked_heads[utt_idx]:
            sources = _emotion_tails(head.id, kb, emotion, tail_label)
            if not sources:
                continue
            for tail in _category_tails(head.id, kb, TAIL_BEFORE):
                tail_kw = text_keywords(tail, stopwords)
                hits = [j for j in range(utt_idx) if tail_kw & kw[j]]
                if not hits:
                    continue
                for src_tail in sources:
                    acc.add(EMOTION_CAUSE, tail_node_id(src_tail), tail_node_id(tail),
                            None, None, Provenance(conv.id, (hits[0], utt_idx)))
    return acc.edges()


def build_emotion_intent_edges(conv: Conversation, linked_heads: Mapping[int, Sequence],
                               kb: KB, tail_label: Callable[[str], str],
                               stopwords=frozenset()) -> list[FlowEdge]:
    """Edges from an emotion tail forward to an aftermath tail echoed by the
    next utterance, labeled with that utterance's intent."""
    acc = _EdgeAccumulator()
    kw = {u.index: utterance_keywords(conv, u.index, stopwords) for u in conv.utterances}
    last = len(conv.utterances) - 1
    for utt_idx in sorted(linked_heads):
        if utt_idx >= last:
            continue
        emotion = conv.utterances[utt_idx].emotion
        intent = conv.utterances[utt_idx + 1].intent
        if emotion == "other" or intent == "other":
            continue
        for head in linked_heads[utt_idx]:
            sources = _emotion_tails(head.id, kb, emotion, tail_label)
            if not sources:
                continue
            for tail in _category_tails(head.id, kb, TAIL_AFTER):
                if not (text_keywords(tail, stopwords) & kw[utt_idx + 1]):
                    continue
                for src_tail in sources:
                    acc.add(EMOTION_INTENT, tail_node_id(src_tail), tail_node_id(tail),
                            None, intent, Provenance(conv.id, (utt_idx, utt_idx + 1)))
    return acc.edges()


# --- line-delimited edge files -----------------------------------------------

def edge_record(e: FlowEdge) -> dict:
    return {
        "kind": e.kind,
        "subkind": e.subkind,
        "from": e.src,
        "to": e.dst,
        "weight": e.weight,
        "intent_label": e.intent_label,
        "provenance": [
            {"conv": p.conversation_id, "utterances": list(p.utterances), "kind": p.kind}
            for p in e.provenance
        ],
    }


def edge_from_record(rec, line=None) -> FlowEdge:
    try:
        prov = tuple(
            Provenance(p["conv"], tuple(p["utterances"]), p.get("kind", PROVENANCE_AUTO))
            for p in rec.get("provenance", [])
        )
        return FlowEdge(
            kind=rec["kind"],
            src=rec["from"],
            dst=rec["to"],
            subkind=rec.get("subkind"),
            weight=rec.get("weight", max(len(prov), 1)),
            intent_label=rec.get("intent_label"),
            provenance=prov,
        )
    except (KeyError, TypeError) as exc:
        where = f"line {line}: " if line else ""
        raise EdgeError(f"{where}malformed edge record: {exc!r}") from None
    except EdgeError as exc:
        where = f"line {line}: " if line else ""
        raise EdgeError(f"{where}{exc}") from None


def save_edges(edges, path):
    with open(path, "w", encoding="utf-8") as fh:
        for e in edges:
            fh.write(json.dumps(edge_record(e), ensure_ascii=False) + "\n")


def load_edges(path) -> list[FlowEdge]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            out.append(edge_from_record(json.loads(raw), line=line_no))
    return out


def expert_edge(kind, src, dst, author: str, subkind=None, intent_label=None) -> FlowEdge:
    """A manually authored edge; the author rides along in the provenance."""
    prov = Provenance(conversation_id=f"expert:{author}", utterances=(),
                      kind=PROVENANCE_EXPERT)
    return FlowEdge(kind=kind, src=src, dst=dst, subkind=subkind,
                    weight=1, intent_label=intent_label, provenance=(prov,))


def merge_edges(*edge_lists) -> list[FlowEdge]:
    """Merge edge lists by key, summing weights and concatenating provenance."""
    acc: dict[tuple, FlowEdge] = {}
    for edges in edge_lists:
        for e in edges:
            if e.key in acc:
                prev = acc[e.key]
                acc[e.key] = replace(
                    prev,
                    weight=prev.weight + e.weight,
                    provenance=prev.provenance + e.provenance,
                )
            else:
                acc[e.key] = e
    return [acc[k] for k in sorted(acc)]


def edge_weight_histogram(edges) -> Counter:
    return Counter(e.weight for e in edges)
