"""Match extracted mentions and concept tokens to knowledge-base heads.

Similarity is cosine over embedding vectors supplied by a pluggable provider.
Vectors are plain float tuples; dimension mismatches and zero vectors are hard
errors rather than silent zeros.
"""

import json
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .clients import EmbeddingProvider
from .corpus import ParsedUtterance
from .extract import CONTENT_POS, METHOD_CONCEPT, EventMention, MentionSource
from .kb import Head

DEFAULT_THRESHOLD = 0.7


class LinkError(ValueError):
    """A vector or linking operation violates its contract."""


def as_vector(values) -> tuple[float, ...]:
    vec = tuple(float(x) for x in values)
    for x in vec:
        if not math.isfinite(x):
            raise LinkError(f"non-finite vector value {x!r}")
    return vec


def cosine(a, b) -> float:
    """Cosine similarity; rejects dimension mismatches and zero vectors."""
    a = as_vector(a)
    b = as_vector(b)
    if len(a) != len(b):
        raise LinkError(f"dimension mismatch: {len(a)} vs {len(b)}")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        raise LinkError("cosine undefined for zero vector")
    return dot / (na * nb)


@dataclass(frozen=True)
class MentionHeadMatch:
    mention: EventMention
    head: Head
    score: float


@dataclass(frozen=True)
class FinetunePair:
    mention_text: str
    head_text: str
    label: int | None = None


def best_head(text: str, heads: Sequence[Head], provider: EmbeddingProvider):
    """Highest-scoring head for a text, ties broken by smallest head id.

    Returns (head, score) or (None, None) when there are no candidates. The
    result does not depend on the iteration order of ``heads``.
    """
    heads = list(heads)
    if not heads:
        return None, None
    vectors = provider.embed([text] + [h.text for h in heads])
    query = vectors[0]
    top = None
    top_score = None
    for head, vec in zip(heads, vectors[1:]):
        score = cosine(query, vec)
        if top is None or score > top_score or (score == top_score and head.id < top.id):
            top = head
            top_score = score
    return top, top_score


def link_mention(mention: EventMention, heads: Sequence[Head],
                 provider: EmbeddingProvider,
                 threshold: float = DEFAULT_THRESHOLD):
    """Best head at or above the threshold, or None."""
    head, score = best_head(mention.text, heads, provider)
    if head is None or score < threshold:
        return None
    return MentionHeadMatch(mention=mention, head=head, score=score)


def link_concepts(utt: ParsedUtterance, heads: Sequence[Head],
                  provider: EmbeddingProvider,
                  threshold: float = DEFAULT_THRESHOLD):
    """Match every content token (verb, noun, adjective) against entity heads."""
    matches = []
    for su in utt.sub_utterances:
        for tok in su.tokens:
            if tok.pos not in CONTENT_POS:
                continue
            mention = EventMention(
                text=tok.form,
                source=MentionSource(utt.conversation_id, utt.utterance_index, su.index),
                driver=None,
                method=METHOD_CONCEPT,
                seed_index=tok.index,
            )
            match = link_mention(mention, heads, provider, threshold)
            if match is not None:
                matches.append(match)
    return matches


def export_finetune_pairs(matches, k: int, seed: int = 0):
    """Sample k matches for human labeling; labels start out empty."""
    matches = list(matches)
    if k > len(matches):
        raise LinkError(f"cannot sample {k} pairs from {len(matches)} matches")
    rng = random.Random(seed)
    picked = rng.sample(matches, k)
    return [FinetunePair(m.mention.text, m.head.text) for m in picked]


def save_finetune_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            label = "" if p.label is None else str(p.label)
            fh.write(f"{p.mention_text}\t{p.head_text}\t{label}\n")


# --- line-delimited interchange for the command line -------------------------

def mention_record(m: EventMention) -> dict:
    return {
        "text": m.text,
        "source": {
            "conv": m.source.conversation_id,
            "utt": m.source.utterance_index,
            "sub": m.source.sub_utterance_index,
        },
        "driver": m.driver,
        "method": m.method,
    }


def mention_from_record(rec) -> EventMention:
    src = rec["source"]
    return EventMention(
        text=rec["text"],
        source=MentionSource(src["conv"], src["utt"], src["sub"]),
        driver=rec.get("driver"),
        method=rec["method"],
    )


def save_mentions(mentions, path):
    with open(path, "w", encoding="utf-8") as fh:
        for m in mentions:
            fh.write(json.dumps(mention_record(m), ensure_ascii=False) + "\n")


def load_mentions(path):
    with open(path, encoding="utf-8") as fh:
        return [mention_from_record(json.loads(line)) for line in fh if line.strip()]


def match_record(match: MentionHeadMatch) -> dict:
    rec = mention_record(match.mention)
    rec["head_id"] = match.head.id
    rec["head_text"] = match.head.text
    rec["head_level"] = match.head.level
    rec["score"] = match.score
    return rec


def match_from_record(rec) -> MentionHeadMatch:
    return MentionHeadMatch(
        mention=mention_from_record(rec),
        head=Head(rec["head_id"], rec["head_text"], rec["head_level"]),
        score=float(rec["score"]),
    )


def save_matches(matches, path):
    with open(path, "w", encoding="utf-8") as fh:
        for m in matches:
            fh.write(json.dumps(match_record(m), ensure_ascii=False) + "\n")


def load_matches(path):
    with open(path, encoding="utf-8") as fh:
        return [match_from_record(json.loads(line)) for line in fh if line.strip()]
