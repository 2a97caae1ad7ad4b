"""Commonsense triple store with relation typing, translation, and text rules.

Heads are everyday events or entities; each triple attaches a tail phrase to a
head under one of eleven social-commonsense relations. Relations map onto tail
categories that tell the edge builders whether a tail describes an emotion, a
precondition, or an aftermath.
"""

import re
from dataclasses import dataclass

RELATIONS = (
    "xIntent", "xNeed", "xAttr", "xReact", "xWant", "xEffect",
    "oReact", "oWant", "oEffect", "isAfter", "isBefore",
)

TAIL_EMOTION = "tail_emotion"
TAIL_BEFORE = "tail_before"
TAIL_AFTER = "tail_after"
TAIL_NONE = "none"

# How each relation's tails relate to the dialogue timeline. Attribute and
# reaction tails describe feelings; precondition-like tails point backward;
# want/effect tails point forward. Reactions and wants of other parties stay
# unplaced.
_TAIL_CATEGORY = {
    "xAttr": TAIL_EMOTION,
    "xReact": TAIL_EMOTION,
    "isAfter": TAIL_BEFORE,
    "xNeed": TAIL_BEFORE,
    "isBefore": TAIL_AFTER,
    "xWant": TAIL_AFTER,
    "xIntent": TAIL_AFTER,
    "xEffect": TAIL_AFTER,
    "oEffect": TAIL_AFTER,
}

HEAD_LEVELS = ("event", "entity")


class KBError(ValueError):
    """A triple file or knowledge-base operation violates its contract."""


def categorize_tail(relation: str) -> str:
    if relation not in RELATIONS:
        raise KBError(f"unknown relation {relation!r}")
    return _TAIL_CATEGORY.get(relation, TAIL_NONE)


@dataclass(frozen=True)
class Head:
    id: str
    text: str
    level: str


@dataclass(frozen=True)
class KBTriple:
    head: Head
    relation: str
    tail: str


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


class KB:
    """Deduplicated triples indexed by head and by relation."""

    def __init__(self):
        self.heads: dict[str, Head] = {}
        self.triples: list[KBTriple] = []
        self.by_head: dict[str, list[KBTriple]] = {}
        self.by_relation: dict[str, list[KBTriple]] = {}
        self._seen: set[tuple[str, str, str]] = set()

    def add_head(self, head: Head, line=None):
        if head.level not in HEAD_LEVELS:
            raise KBError(_at(line, f"unknown head level {head.level!r}"))
        existing = self.heads.get(head.id)
        if existing is not None:
            if existing != head:
                raise KBError(_at(line, f"conflicting definitions for head id {head.id!r}"))
            return existing
        self.heads[head.id] = head
        return head

    def add_triple(self, head: Head, relation: str, tail: str, line=None) -> bool:
        """Add one triple; returns False when it deduplicates away."""
        if relation not in RELATIONS:
            raise KBError(_at(line, f"unknown relation {relation!r}"))
        if not tail.strip():
            raise KBError(_at(line, "empty tail"))
        head = self.add_head(head, line)
        key = (normalize_ws(head.text), relation, normalize_ws(tail))
        if key in self._seen:
            return False
        self._seen.add(key)
        triple = KBTriple(head=head, relation=relation, tail=tail)
        self.triples.append(triple)
        self.by_head.setdefault(head.id, []).append(triple)
        self.by_relation.setdefault(relation, []).append(triple)
        return True

    def heads_at(self, level: str) -> list[Head]:
        if level not in HEAD_LEVELS:
            raise KBError(f"unknown head level {level!r}")
        return sorted((h for h in self.heads.values() if h.level == level), key=lambda h: h.id)

    def tails(self, head_id: str, relation=None) -> list[str]:
        out = self.by_head.get(head_id, [])
        if relation is not None:
            out = [t for t in out if t.relation == relation]
        return [t.tail for t in out]


def _at(line, message):
    return f"line {line}: {message}" if line is not None else message


def load_kb(path) -> KB:
    """Read a TSV of (head_id, head_text, head_level, relation, tail) rows."""
    kb = KB()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise KBError(f"line {line_no}: expected 5 columns, got {len(cols)}")
            head_id, head_text, head_level, relation, tail = cols
            kb.add_triple(Head(head_id, head_text, head_level), relation, tail, line=line_no)
    return kb


def save_kb(kb: KB, path):
    with open(path, "w", encoding="utf-8") as fh:
        for t in kb.triples:
            fh.write("\t".join((t.head.id, t.head.text, t.head.level, t.relation, t.tail)) + "\n")


# --- person-placeholder replacement -----------------------------------------

@dataclass(frozen=True)
class ReplacementRule:
    """Gap pattern rewriting: literals separated by ``...`` survive as gaps.

    ``PersonX...PersonY...`` to ``Someone...someone else...`` rewrites the two
    literals and leaves the gap text untouched. Literal counts must agree so
    every replaced literal corresponds to exactly one original literal.
    """

    original_pattern: str
    replaced_pattern: str

    def __post_init__(self):
        if len(self.original_literals()) != len(self.replaced_literals()):
            raise KBError(
                f"rule {self.original_pattern!r} -> {self.replaced_pattern!r}: "
                "literal counts differ")
        if not self.original_literals():
            raise KBError(f"rule {self.original_pattern!r} has no literal text")

    def original_literals(self):
        return tuple(p for p in self.original_pattern.split("...") if p)

    def replaced_literals(self):
        return tuple(p for p in self.replaced_pattern.split("...") if p)


# Possessive two-mention patterns first, then plain two-mention patterns, then
# single-token fallbacks; ordering implements longest-pattern-first matching.
DEFAULT_REPLACEMENT_RULES = (
    ReplacementRule("PersonX...PersonX's...", "Someone...his..."),
    ReplacementRule("PersonX...PersonY's...", "Someone...someone else's..."),
    ReplacementRule("PersonX...PersonX...", "Someone...himself..."),
    ReplacementRule("PersonX...PersonY...", "Someone...someone else..."),
    ReplacementRule("PersonX", "Someone"),
    ReplacementRule("PersonY", "someone else"),
    ReplacementRule("___", "something"),
)


@dataclass(frozen=True)
class ReplacementEvent:
    """One substitution, positioned in the output text so it can be undone."""

    position: int
    original: str
    replacement: str


def _rule_regex(rule: ReplacementRule):
    parts = []
    for lit in rule.original_literals():
        body = re.escape(lit)
        if lit[0].isalnum() or lit[0] == "_":
            body = r"(?<![0-9A-Za-z_])" + body
        if lit[-1].isalnum() or lit[-1] == "_":
            body = body + r"(?![0-9A-Za-z_])"
        parts.append(f"({body})")
    return re.compile("(?:.*?)".join(parts), re.IGNORECASE | re.DOTALL)


def apply_replacements(text: str, rules=DEFAULT_REPLACEMENT_RULES):
    """Rewrite person placeholders and blanks; returns (new_text, log).

    Matching is case-insensitive, leftmost, non-overlapping, with rules tried
    in the given priority order. The log records enough to invert the rewrite.
    """
    claimed: list[tuple[int, int]] = []

    def free(span):
        s, e = span
        return all(e <= cs or s >= ce for cs, ce in claimed)

    subs: list[tuple[int, int, str]] = []
    for rule in rules:
        pattern = _rule_regex(rule)
        replacements = rule.replaced_literals()
        pos = 0
        while pos <= len(text):
            m = pattern.search(text, pos)
            if m is None:
                break
            spans = [m.span(i) for i in range(1, len(replacements) + 1)]
            if all(free(s) for s in spans):
                for (s, e), rep in zip(spans, replacements):
                    claimed.append((s, e))
                    subs.append((s, e, rep))
                pos = m.end()
                if m.end() == m.start():
                    pos += 1
            else:
                pos = m.start() + 1

    subs.sort()
    out_parts = []
    log: list[ReplacementEvent] = []
    cursor = 0
    out_len = 0
    for s, e, rep in subs:
        out_parts.append(text[cursor:s])
        out_len += s - cursor
        log.append(ReplacementEvent(position=out_len, original=text[s:e], replacement=rep))
        out_parts.append(rep)
        out_len += len(rep)
        cursor = e
    out_parts.append(text[cursor:])
    return "".join(out_parts), log


def invert_replacements(text: str, log) -> str:
    """Undo apply_replacements using its log."""
    parts = []
    cursor = 0
    for ev in log:
        parts.append(text[cursor:ev.position])
        parts.append(ev.original)
        cursor = ev.position + len(ev.replacement)
    parts.append(text[cursor:])
    return "".join(parts)


# --- joint translation -------------------------------------------------------

# Bracketed markers survive machine translation unchanged, which keeps the
# joint sentence splittable. Natural-language connectors can be configured in.
DEFAULT_CONNECTORS = {r: f" ⟦{r.upper()}⟧ " for r in RELATIONS}


@dataclass(frozen=True)
class TranslatedTriple:
    head_id: str
    head_text: str
    relation: str
    tail: str
    split_failed: bool = False


def joint_translate(triple: KBTriple, connector_map, client) -> TranslatedTriple:
    """Translate head and tail in one sentence joined by a connector phrase.

    The joined sentence is split back on the translated connector; if the
    connector does not survive translation, head and tail are translated
    separately and the result is flagged ``split_failed``.
    """
    try:
        connector = connector_map[triple.relation]
    except KeyError:
        raise KBError(f"no connector configured for relation {triple.relation!r}") from None
    joined = f"{triple.head.text}{connector}{triple.tail}"
    translated = client.translate(joined)
    connector_tr = client.translate(connector)
    # A connector that translates to nothing but whitespace occurs everywhere
    # and cannot anchor the split.
    if connector_tr.strip() and connector_tr in translated:
        head_tr, _, tail_tr = translated.partition(connector_tr)
        return TranslatedTriple(triple.head.id, head_tr, triple.relation, tail_tr)
    return TranslatedTriple(
        triple.head.id,
        client.translate(triple.head.text),
        triple.relation,
        client.translate(triple.tail),
        split_failed=True,
    )


def translate_triple(triple: KBTriple, client, connector_map=None,
                     rules=DEFAULT_REPLACEMENT_RULES):
    """Replacement rules first, then joint translation."""
    if connector_map is None:
        connector_map = DEFAULT_CONNECTORS
    head_text, _ = apply_replacements(triple.head.text, rules)
    tail_text, _ = apply_replacements(triple.tail, rules)
    prepared = KBTriple(
        head=Head(triple.head.id, head_text, triple.head.level),
        relation=triple.relation,
        tail=tail_text,
    )
    return joint_translate(prepared, connector_map, client)


def translate_kb(kb: KB, client, connector_map=None, rules=DEFAULT_REPLACEMENT_RULES):
    """Translate every triple in input order."""
    return [translate_triple(t, client, connector_map, rules) for t in kb.triples]


# --- human evaluation of translations ---------------------------------------

@dataclass(frozen=True)
class QualityReport:
    fluency: float
    logic: float
    count: int


def translation_quality_report(labels) -> QualityReport:
    """Mean fluency and logic over binary human labels, rounded to 3 decimals.

    ``labels`` is an iterable of (fluency, logic) pairs or (triple_id,
    fluency, logic) records; each score must be 0 or 1.
    """
    fluency = []
    logic = []
    for rec in labels:
        rec = tuple(rec)
        f, l = rec[-2], rec[-1]
        if len(rec) not in (2, 3) or f not in (0, 1) or l not in (0, 1):
            raise KBError(f"labels must be 0/1 pairs or id-tagged pairs, got {rec!r}")
        fluency.append(f)
        logic.append(l)
    if not fluency:
        raise KBError("no labels to aggregate")
    n = len(fluency)
    return QualityReport(
        fluency=round(sum(fluency) / n, 3),
        logic=round(sum(logic) / n, 3),
        count=n,
    )
