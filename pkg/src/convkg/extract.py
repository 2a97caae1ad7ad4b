"""Event mention extraction from dependency-parsed utterances.

The parsing method walks each clause's dependency tree from the token attached
to the root. Verb seeds keep their adverbial modifiers and the rest of their
clause; adjective seeds keep their subjects. Clauses whose seed governs several
clause-level verbs are re-seeded on those verbs so serial events come out as
separate mentions. Two shallow baselines (part-of-speech templates and whole
clauses) share the same filtering front end.
"""

from dataclasses import dataclass
from typing import NamedTuple

from .corpus import ParsedUtterance, SubUtterance, Token, root_token

SEED_POS = ("v", "a")
CONTENT_POS = frozenset({"v", "n", "a"})
PUNCT_POS = frozenset({"wp", "x"})

# Two- and three-token part-of-speech windows that form self-contained events.
POS_TEMPLATES = (
    ("v", "v"),
    ("v", "n"),
    ("v", "i"),
    ("v", "u", "z"),
    ("v", "u", "m"),
    ("v", "c", "v"),
    ("v", "c", "i"),
    ("a", "v"),
)

METHOD_PARSING = "parsing"
METHOD_POS = "pos_template"
METHOD_SIMPLE = "simple"
METHOD_CONCEPT = "concept"

DRIVER_VERB = "verb"
DRIVER_ADJECTIVE = "adjective"

DEFAULT_PUNCTUATION = "，。！？；、…,.!?;:~"


class ExtractError(ValueError):
    """An extraction config or input violates the extractor's contract."""


@dataclass(frozen=True)
class ExtractorConfig:
    min_sub_utterance_chars: int = 4
    stop_phrases: frozenset = frozenset({"好的", "就是这样"})
    decompose_verb_count_threshold: int = 2
    decompose_depth_threshold: int = 2
    punctuation: str = DEFAULT_PUNCTUATION
    # Aspect and progressive adverbs carry no event content; negation and
    # manner adverbs stay.
    discard_adverbs: frozenset = frozenset({"已经", "在", "正在"})

    def __post_init__(self):
        if self.min_sub_utterance_chars < 1:
            raise ExtractError("min_sub_utterance_chars must be at least 1")
        if self.decompose_verb_count_threshold < 1:
            raise ExtractError("decompose_verb_count_threshold must be at least 1")
        if self.decompose_depth_threshold < 1:
            raise ExtractError("decompose_depth_threshold must be at least 1")


class MentionSource(NamedTuple):
    conversation_id: str
    utterance_index: int
    sub_utterance_index: int


@dataclass(frozen=True)
class EventMention:
    text: str
    source: MentionSource
    driver: str | None
    method: str
    seed_index: int | None = None


def strip_punct(text: str, cfg: ExtractorConfig) -> str:
    return "".join(ch for ch in text if ch not in cfg.punctuation and not ch.isspace())


def split_text(text: str, cfg: ExtractorConfig | None = None) -> list[str]:
    """Split raw text into clauses on the configured punctuation set."""
    cfg = cfg or ExtractorConfig()
    clauses = []
    current = []
    for ch in text:
        if ch in cfg.punctuation:
            if current:
                clauses.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        clauses.append("".join(current))
    return clauses


def split_and_filter(utt: ParsedUtterance, cfg: ExtractorConfig | None = None):
    """Drop clauses that are too short or are pure backchannel phrases."""
    cfg = cfg or ExtractorConfig()
    kept = []
    for su in utt.sub_utterances:
        core = strip_punct(su.text, cfg)
        if len(core) < cfg.min_sub_utterance_chars:
            continue
        if core in cfg.stop_phrases:
            continue
        kept.append(su)
    return kept


def _children(su: SubUtterance):
    kids: dict[int, list[Token]] = {}
    for tok in su.tokens:
        kids.setdefault(tok.head, []).append(tok)
    return kids


def subtree_indices(su: SubUtterance, tok: Token) -> set[int]:
    kids = _children(su)
    out = {tok.index}
    frontier = [tok.index]
    while frontier:
        cur = frontier.pop()
        for child in kids.get(cur, ()):
            if child.index not in out:
                out.add(child.index)
                frontier.append(child.index)
    return out


def subtree_depth(su: SubUtterance, tok: Token) -> int:
    kids = _children(su)

    def depth(idx):
        below = kids.get(idx, ())
        if not below:
            return 1
        return 1 + max(depth(c.index) for c in below)

    return depth(tok.index)


def _direct_event_verbs(su: SubUtterance, tok: Token) -> list[Token]:
    # Verbs hanging off a seed as adverbials (modals and the like) modify the
    # event rather than adding one, so they do not count toward re-seeding.
    return [t for t in su.tokens
            if t.head == tok.index and t.pos == "v" and t.deprel != "ADV"]


def _recursive_verb_seeds(su: SubUtterance, seed: Token) -> list[Token]:
    out = []
    for verb in _direct_event_verbs(su, seed):
        if len(_direct_event_verbs(su, verb)) > 1:
            out.extend(_recursive_verb_seeds(su, verb))
        else:
            out.append(verb)
    return out


def _render(su: SubUtterance, indices, cfg: ExtractorConfig) -> str:
    toks = [su.tokens[i - 1] for i in sorted(indices)]
    toks = [t for t in toks if t.pos not in PUNCT_POS and strip_punct(t.form, cfg)]
    while toks and toks[0].pos == "c":
        toks.pop(0)
    while toks and toks[-1].pos == "u":
        toks.pop()
    return "".join(t.form for t in toks)


def _verb_mention(su: SubUtterance, seed: Token, cfg: ExtractorConfig,
                  conv_id: str, utt_idx: int) -> EventMention:
    sub = subtree_indices(su, seed)
    keep = {seed.index}
    for tok in su.tokens:
        if (tok.head == seed.index and tok.deprel == "ADV"
                and tok.pos not in ("c", "u") and tok.pos not in PUNCT_POS
                and tok.form not in cfg.discard_adverbs):
            keep |= subtree_indices(su, tok)
    keep |= {i for i in sub if i > seed.index}
    return EventMention(
        text=_render(su, keep, cfg),
        source=MentionSource(conv_id, utt_idx, su.index),
        driver=DRIVER_VERB,
        method=METHOD_PARSING,
        seed_index=seed.index,
    )


def _adjective_mention(su: SubUtterance, seed: Token, cfg: ExtractorConfig,
                       conv_id: str, utt_idx: int) -> EventMention:
    keep = {seed.index}
    for tok in su.tokens:
        if tok.head == seed.index and tok.deprel == "SBV":
            keep |= subtree_indices(su, tok)
    return EventMention(
        text=_render(su, keep, cfg),
        source=MentionSource(conv_id, utt_idx, su.index),
        driver=DRIVER_ADJECTIVE,
        method=METHOD_PARSING,
        seed_index=seed.index,
    )


def extract_events(utt: ParsedUtterance, cfg: ExtractorConfig | None = None):
    """Dependency-driven extraction over every surviving clause.

    The token under the root seeds extraction when it is a verb or adjective.
    A verb seed governing more than one clause-level verb is replaced by those
    verbs, each yielding its own mention.
    """
    cfg = cfg or ExtractorConfig()
    mentions = []
    for su in split_and_filter(utt, cfg):
        seed = root_token(su)
        if seed.pos not in SEED_POS:
            continue
        if seed.pos == "a":
            mention = _adjective_mention(su, seed, cfg, utt.conversation_id, utt.utterance_index)
            if mention.text:
                mentions.append(mention)
            continue
        seeds = [seed]
        if len(_direct_event_verbs(su, seed)) > 1:
            seeds = _recursive_verb_seeds(su, seed)
        for s in seeds:
            mention = _verb_mention(su, s, cfg, utt.conversation_id, utt.utterance_index)
            if mention.text:
                mentions.append(mention)
    return mentions


def secondary_decompose(mention: EventMention, su: SubUtterance,
                        cfg: ExtractorConfig | None = None):
    """Split a mention into one mention per clause-level verb when its seed
    governs enough verbs with deep enough subtrees; otherwise return it as is."""
    cfg = cfg or ExtractorConfig()
    if mention.seed_index is None:
        seed = root_token(su)
    else:
        seed = su.tokens[mention.seed_index - 1]
    if seed.pos != "v":
        return [mention]
    verbs = _direct_event_verbs(su, seed)
    if len(verbs) < cfg.decompose_verb_count_threshold:
        return [mention]
    if max(subtree_depth(su, v) for v in verbs) < cfg.decompose_depth_threshold:
        return [mention]
    conv_id, utt_idx, _ = mention.source
    out = []
    for v in _recursive_verb_seeds(su, seed):
        piece = _verb_mention(su, v, cfg, conv_id, utt_idx)
        if piece.text:
            out.append(piece)
    return out or [mention]


def parsing_extract(utt: ParsedUtterance, cfg: ExtractorConfig | None = None):
    """Full parsing pipeline: seed extraction then secondary decomposition."""
    cfg = cfg or ExtractorConfig()
    by_sub = {su.index: su for su in utt.sub_utterances}
    out = []
    for mention in extract_events(utt, cfg):
        out.extend(secondary_decompose(mention, by_sub[mention.source.sub_utterance_index], cfg))
    return out


def pos_template_extract(su: SubUtterance, conv_id: str = "", utt_idx: int = 0,
                         cfg: ExtractorConfig | None = None):
    """Leftmost-longest scan for part-of-speech template windows."""
    cfg = cfg or ExtractorConfig()
    toks = [t for t in su.tokens if t.pos not in PUNCT_POS]
    templates = sorted(POS_TEMPLATES, key=len, reverse=True)
    mentions = []
    i = 0
    while i < len(toks):
        matched = None
        for template in templates:
            window = toks[i:i + len(template)]
            if len(window) == len(template) and all(
                    t.pos == p for t, p in zip(window, template)):
                matched = window
                break
        if matched is None:
            i += 1
            continue
        driver = DRIVER_VERB if matched[0].pos == "v" else DRIVER_ADJECTIVE
        mentions.append(EventMention(
            text="".join(t.form for t in matched),
            source=MentionSource(conv_id, utt_idx, su.index),
            driver=driver,
            method=METHOD_POS,
            seed_index=matched[0].index,
        ))
        i += len(matched)
    return mentions


def pos_extract(utt: ParsedUtterance, cfg: ExtractorConfig | None = None):
    cfg = cfg or ExtractorConfig()
    mentions = []
    for su in split_and_filter(utt, cfg):
        mentions.extend(pos_template_extract(su, utt.conversation_id, utt.utterance_index, cfg))
    return mentions


def simple_extract(utt: ParsedUtterance, cfg: ExtractorConfig | None = None):
    """One mention per surviving clause, text taken verbatim."""
    cfg = cfg or ExtractorConfig()
    return [
        EventMention(
            text=su.text.strip().strip(cfg.punctuation),
            source=MentionSource(utt.conversation_id, utt.utterance_index, su.index),
            driver=None,
            method=METHOD_SIMPLE,
        )
        for su in split_and_filter(utt, cfg)
    ]


EXTRACTORS = {
    "parsing": parsing_extract,
    "pos": pos_extract,
    "simple": simple_extract,
}
