"""Load and validate annotated conversation corpora and their dependency parses.

Corpus files carry one JSON record per line. Records holding an ``utterances``
list are conversations; records holding a ``description`` are scenarios. Both
kinds share one file so a single path can feed the loader. Dependency parses
arrive separately as CoNLL-U blocks tied to their sub-utterance through a
``# ref = conversation/utterance/sub`` comment.
"""

import gzip
import json
from dataclasses import dataclass, field

EMOTION_LABELS = frozenset({"joy", "angry", "sad", "surprising", "other"})
INTENT_LABELS = frozenset({"ask", "advise", "describe", "opinion", "console", "other"})

HEAD_LEVELS = frozenset({"event", "entity"})


class CorpusError(ValueError):
    """A corpus or parse file violates the record format or an invariant."""

    def __init__(self, message, line=None, field_name=None):
        detail = message
        if field_name is not None:
            detail = f"{detail} (field: {field_name})"
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line
        self.field_name = field_name


@dataclass(frozen=True)
class Token:
    """One token of a dependency parse; ``head`` 0 marks the root."""

    index: int
    form: str
    pos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class SubUtterance:
    """A punctuation-delimited clause with its dependency tree."""

    index: int
    tokens: tuple[Token, ...]
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", "".join(t.form for t in self.tokens))


@dataclass(frozen=True)
class ParsedUtterance:
    conversation_id: str
    utterance_index: int
    sub_utterances: tuple[SubUtterance, ...]


@dataclass
class Utterance:
    index: int
    speaker: str
    text: str
    emotion: str = "other"
    intent: str = "other"
    cause_spans: tuple[tuple[int, int], ...] = ()


@dataclass
class Conversation:
    id: str
    scenario_id: str
    utterances: list[Utterance]
    parses: dict[int, ParsedUtterance] = field(default_factory=dict)


@dataclass
class Scenario:
    id: str
    topic: str
    description: str


@dataclass
class AlignmentReport:
    """Utterance indices lacking parses, and parses whose text disagrees."""

    missing: list[int]
    mismatched: list[tuple[int, str]]

    @property
    def clean(self):
        return not self.missing and not self.mismatched


def root_token(su: SubUtterance) -> Token:
    """The single token attached to the artificial root."""
    for tok in su.tokens:
        if tok.head == 0:
            return tok
    raise CorpusError(f"sub-utterance {su.index} has no root token")


def validate_sub_utterance(su: SubUtterance, where=""):
    """Check index contiguity, the single-root invariant, and acyclicity."""
    n = len(su.tokens)
    if n == 0:
        raise CorpusError(f"{where}: empty sub-utterance")
    roots = 0
    for pos, tok in enumerate(su.tokens, start=1):
        if tok.index != pos:
            raise CorpusError(f"{where}: token indices not contiguous from 1")
        if not 0 <= tok.head <= n:
            raise CorpusError(f"{where}: head {tok.head} out of range 0..{n}")
        if tok.head == tok.index:
            raise CorpusError(f"{where}: token {tok.index} heads itself")
        if tok.head == 0:
            roots += 1
    if roots != 1:
        raise CorpusError(f"{where}: expected exactly one root token, found {roots}")
    for tok in su.tokens:
        seen = set()
        cur = tok.index
        while cur != 0:
            if cur in seen:
                raise CorpusError(f"{where}: dependency cycle through token {cur}")
            seen.add(cur)
            cur = su.tokens[cur - 1].head


def validate_parsed_utterance(pu: ParsedUtterance):
    for pos, su in enumerate(pu.sub_utterances):
        if su.index != pos:
            raise CorpusError(
                f"parse {pu.conversation_id}/{pu.utterance_index}: sub-utterance "
                f"indices not contiguous from 0"
            )
        validate_sub_utterance(su, f"parse {pu.conversation_id}/{pu.utterance_index}/{su.index}")


def _validate_span(span, text_bytes, line, conv_id):
    if not (isinstance(span, (list, tuple)) and len(span) == 2):
        raise CorpusError(f"conversation {conv_id}: cause span must be a [start, end) pair",
                          line, "cause_spans")
    start, end = span
    if not (isinstance(start, int) and isinstance(end, int)):
        raise CorpusError(f"conversation {conv_id}: cause span offsets must be integers",
                          line, "cause_spans")
    if not 0 <= start < end <= len(text_bytes):
        raise CorpusError(
            f"conversation {conv_id}: cause span {span} outside text bounds",
            line, "cause_spans")
    try:
        text_bytes[start:end].decode("utf-8")
    except UnicodeDecodeError:
        raise CorpusError(
            f"conversation {conv_id}: cause span {span} cuts a UTF-8 character",
            line, "cause_spans") from None
    return (start, end)


def validate_conversation(conv: Conversation, line=None):
    """Enforce the structural invariants on a single conversation."""
    if len(conv.utterances) < 2:
        raise CorpusError(f"conversation {conv.id}: needs at least 2 utterances",
                          line, "utterances")
    speakers = [u.speaker for u in conv.utterances]
    if len(set(speakers)) != 2:
        raise CorpusError(
            f"conversation {conv.id}: expected exactly two speakers, got {sorted(set(speakers))}",
            line, "speaker")
    for a, b in zip(speakers, speakers[1:]):
        if a == b:
            raise CorpusError(f"conversation {conv.id}: speakers do not alternate",
                              line, "speaker")
    for u in conv.utterances:
        if u.emotion not in EMOTION_LABELS:
            raise CorpusError(
                f"conversation {conv.id}: unknown emotion {u.emotion!r}", line, "emotion")
        if u.intent not in INTENT_LABELS:
            raise CorpusError(
                f"conversation {conv.id}: unknown intent {u.intent!r}", line, "intent")
        if not u.text:
            raise CorpusError(f"conversation {conv.id}: empty utterance text", line, "text")


def _utterance_from_record(rec, idx, line, conv_id):
    if not isinstance(rec, dict):
        raise CorpusError(f"conversation {conv_id}: utterance {idx} is not an object",
                          line, "utterances")
    for key in ("speaker", "text"):
        if key not in rec:
            raise CorpusError(f"conversation {conv_id}: utterance {idx} missing {key!r}",
                              line, key)
    text = rec["text"]
    text_bytes = text.encode("utf-8") if isinstance(text, str) else b""
    spans = tuple(
        _validate_span(s, text_bytes, line, conv_id) for s in rec.get("cause_spans", []) or []
    )
    return Utterance(
        index=idx,
        speaker=str(rec["speaker"]),
        text=text,
        emotion=rec.get("emotion") or "other",
        intent=rec.get("intent") or "other",
        cause_spans=spans,
    )


def _open_text(path, mode="rt"):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def load_corpus(path, parse_path=None):
    """Read a line-delimited corpus file.

    Returns (conversations, scenarios). When ``parse_path`` is given, the
    CoNLL-U parses found there are attached to their conversations.
    """
    conversations: list[Conversation] = []
    scenarios: list[Scenario] = []
    seen_conv: set[str] = set()
    seen_scen: set[str] = set()
    with _open_text(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed record: {exc.msg}", line_no) from None
            if not isinstance(rec, dict):
                raise CorpusError("record is not an object", line_no)
            if "utterances" in rec:
                conv = _conversation_from_record(rec, line_no)
                if conv.id in seen_conv:
                    raise CorpusError(f"duplicate conversation id {conv.id!r}", line_no, "id")
                seen_conv.add(conv.id)
                conversations.append(conv)
            elif "description" in rec:
                scen = _scenario_from_record(rec, line_no)
                if scen.id in seen_scen:
                    raise CorpusError(f"duplicate scenario id {scen.id!r}", line_no, "id")
                seen_scen.add(scen.id)
                scenarios.append(scen)
            else:
                raise CorpusError("record is neither a conversation nor a scenario", line_no)
    if parse_path is not None:
        attach_parses(conversations, load_parses(parse_path))
    return conversations, scenarios


def _conversation_from_record(rec, line_no):
    for key in ("id", "scenario_id"):
        if key not in rec:
            raise CorpusError(f"conversation record missing {key!r}", line_no, key)
    utts = rec["utterances"]
    if not isinstance(utts, list):
        raise CorpusError("utterances must be a list", line_no, "utterances")
    conv = Conversation(
        id=str(rec["id"]),
        scenario_id=str(rec["scenario_id"]),
        utterances=[
            _utterance_from_record(u, i, line_no, rec["id"]) for i, u in enumerate(utts)
        ],
    )
    validate_conversation(conv, line_no)
    return conv


def _scenario_from_record(rec, line_no):
    for key in ("id", "topic"):
        if key not in rec:
            raise CorpusError(f"scenario record missing {key!r}", line_no, key)
    if not rec["description"]:
        raise CorpusError("scenario description must be non-empty", line_no, "description")
    return Scenario(id=str(rec["id"]), topic=str(rec["topic"]), description=str(rec["description"]))


def save_corpus(conversations, scenarios, path):
    """Write scenarios then conversations back out, one record per line."""
    with _open_text(path, "wt") as fh:
        for s in scenarios:
            fh.write(json.dumps(
                {"id": s.id, "topic": s.topic, "description": s.description},
                ensure_ascii=False) + "\n")
        for c in conversations:
            rec = {
                "id": c.id,
                "scenario_id": c.scenario_id,
                "utterances": [
                    {
                        "speaker": u.speaker,
                        "text": u.text,
                        "emotion": u.emotion,
                        "intent": u.intent,
                        "cause_spans": [list(s) for s in u.cause_spans],
                    }
                    for u in c.utterances
                ],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _parse_ref(comment, line_no):
    # "# ref = conv/utt/sub"; conversation ids may themselves contain "/".
    body = comment.split("=", 1)[1].strip()
    parts = body.rsplit("/", 2)
    if len(parts) != 3:
        raise CorpusError(f"bad parse reference {body!r}", line_no)
    try:
        return parts[0], int(parts[1]), int(parts[2])
    except ValueError:
        raise CorpusError(f"bad parse reference {body!r}", line_no) from None


def _token_from_columns(cols, line_no):
    if len(cols) != 10:
        raise CorpusError(f"expected 10 tab-separated columns, got {len(cols)}", line_no)
    idx, form, _lemma, upos, xpos, _feats, head, deprel = cols[:8]
    pos = xpos if xpos not in ("", "_") else upos
    try:
        return Token(index=int(idx), form=form, pos=pos, head=int(head), deprel=deprel)
    except ValueError:
        raise CorpusError(f"non-integer token index or head in {cols!r}", line_no) from None


def load_parses(path):
    """Read CoNLL-U blocks into ParsedUtterances keyed by (conversation, utterance)."""
    blocks: dict[tuple[str, int], dict[int, SubUtterance]] = {}
    ref = None
    tokens: list[Token] = []

    def flush(line_no):
        nonlocal ref, tokens
        if ref is None and not tokens:
            return
        if ref is None:
            raise CorpusError("CoNLL-U block without a ref comment", line_no)
        if tokens:
            conv_id, utt_idx, sub_idx = ref
            su = SubUtterance(index=sub_idx, tokens=tuple(tokens))
            sus = blocks.setdefault((conv_id, utt_idx), {})
            if sub_idx in sus:
                raise CorpusError(f"duplicate parse for {conv_id}/{utt_idx}/{sub_idx}", line_no)
            sus[sub_idx] = su
        ref = None
        tokens = []

    last_line = 0
    with _open_text(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            last_line = line_no
            line = raw.rstrip("\n")
            if not line.strip():
                flush(line_no)
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("ref"):
                    ref = _parse_ref(line, line_no)
                continue
            cols = line.split("\t")
            # Skip multiword ranges and empty nodes; only plain tokens matter here.
            if "-" in cols[0] or "." in cols[0]:
                continue
            tokens.append(_token_from_columns(cols, line_no))
        flush(last_line)

    parses: dict[tuple[str, int], ParsedUtterance] = {}
    for (conv_id, utt_idx), sus in blocks.items():
        ordered = tuple(sus[i] for i in sorted(sus))
        pu = ParsedUtterance(conv_id, utt_idx, ordered)
        validate_parsed_utterance(pu)
        parses[(conv_id, utt_idx)] = pu
    return parses


def attach_parses(conversations, parses):
    by_id = {c.id: c for c in conversations}
    for (conv_id, utt_idx), pu in parses.items():
        conv = by_id.get(conv_id)
        if conv is None:
            raise CorpusError(f"parse references unknown conversation {conv_id!r}")
        if not 0 <= utt_idx < len(conv.utterances):
            raise CorpusError(f"parse references unknown utterance {conv_id}/{utt_idx}")
        conv.parses[utt_idx] = pu


def validate_parse_alignment(conv: Conversation, parses=None) -> AlignmentReport:
    """Report utterances without parses and parses that fail to reassemble."""
    if parses is None:
        parses = conv.parses
    missing = [u.index for u in conv.utterances if u.index not in parses]
    mismatched = []
    for u in conv.utterances:
        pu = parses.get(u.index)
        if pu is None:
            continue
        rebuilt = "".join(su.text for su in pu.sub_utterances)
        if rebuilt != u.text:
            mismatched.append((u.index, rebuilt))
    return AlignmentReport(missing=missing, mismatched=mismatched)
