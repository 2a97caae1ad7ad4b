"""Shared builders: dependency trees, corpora, knowledge bases, providers."""

from convkg.corpus import (Conversation, ParsedUtterance, SubUtterance, Token,
                           Utterance)
from convkg.kb import KB, Head


def su(rows, index=0):
    """SubUtterance from (form, pos, head, deprel) rows; indices run 1..n."""
    tokens = tuple(
        Token(index=i + 1, form=form, pos=pos, head=head, deprel=deprel)
        for i, (form, pos, head, deprel) in enumerate(rows)
    )
    return SubUtterance(index=index, tokens=tokens)


def parsed(conv_id, utt_idx, *sub_utterances):
    return ParsedUtterance(conv_id, utt_idx, tuple(sub_utterances))


# A progressive-aspect clause: the verb under the root governs an attributive
# clause, and the surrounding aspect adverbs and particles carry no content.
# 我 和 上司 已经 在 催促 提供 物资 的 商家 了
URGE_ROWS = [
    ("我", "r", 6, "SBV"),
    ("和", "c", 3, "LAD"),
    ("上司", "n", 1, "COO"),
    ("已经", "d", 6, "ADV"),
    ("在", "d", 6, "ADV"),
    ("催促", "v", 0, "HED"),
    ("提供", "v", 10, "ATT"),
    ("物资", "n", 7, "VOB"),
    ("的", "u", 7, "RAD"),
    ("商家", "n", 6, "VOB"),
    ("了", "u", 6, "RAD"),
]
URGE_TEXT = "我和上司已经在催促提供物资的商家了"
URGE_EVENT = "催促提供物资的商家"

# An adjective predicate with a verb-modified subject and tone particles.
# 但 学习 节奏 也 太 快 了 吧
PACE_ROWS = [
    ("但", "c", 6, "ADV"),
    ("学习", "v", 3, "ATT"),
    ("节奏", "n", 6, "SBV"),
    ("也", "d", 6, "ADV"),
    ("太", "d", 6, "ADV"),
    ("快", "a", 0, "HED"),
    ("了", "u", 6, "RAD"),
    ("吧", "u", 6, "RAD"),
]
PACE_TEXT = "但学习节奏也太快了吧"
PACE_EVENT = "学习节奏快"

# Serial events under one reporting verb; decomposes into two mentions.
# 以为 进 了 大学 就 可以 放松 放松
RELAX_ROWS = [
    ("以为", "v", 0, "HED"),
    ("进", "v", 1, "VOB"),
    ("了", "u", 2, "RAD"),
    ("大学", "n", 2, "VOB"),
    ("就", "d", 7, "ADV"),
    ("可以", "v", 7, "ADV"),
    ("放松", "v", 1, "VOB"),
    ("放松", "v", 7, "COO"),
]
RELAX_TEXT = "以为进了大学就可以放松放松"
RELAX_EVENTS = ["进了大学", "就可以放松放松"]


def urge_su(index=0):
    return su(URGE_ROWS, index)


def pace_su(index=0):
    return su(PACE_ROWS, index)


def relax_su(index=0):
    return su(RELAX_ROWS, index)


def conllu_block(conv_id, utt_idx, sub_idx, rows):
    """One CoNLL-U block; part of speech goes in the XPOS column."""
    lines = [f"# ref = {conv_id}/{utt_idx}/{sub_idx}"]
    for i, (form, pos, head, deprel) in enumerate(rows, start=1):
        lines.append(f"{i}\t{form}\t_\t_\t{pos}\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines) + "\n"


def two_speaker(texts, emotions=None, intents=None, conv_id="c1", scenario_id="s1"):
    """Conversation with speakers alternating A, B, A, ..."""
    emotions = emotions or {}
    intents = intents or {}
    utterances = [
        Utterance(
            index=i,
            speaker="A" if i % 2 == 0 else "B",
            text=text,
            emotion=emotions.get(i, "other"),
            intent=intents.get(i, "other"),
        )
        for i, text in enumerate(texts)
    ]
    return Conversation(id=conv_id, scenario_id=scenario_id, utterances=utterances)


def kb_from(rows):
    """KB from (head_id, head_text, level, relation, tail) rows."""
    kb = KB()
    for head_id, text, level, relation, tail in rows:
        kb.add_triple(Head(head_id, text, level), relation, tail)
    return kb


def one_hot(axis, dim):
    v = [0.0] * dim
    v[axis] = 1.0
    return tuple(v)


def axis_table(mapping, dim):
    """Embedding table putting each text on its own coordinate axis."""
    return {text: one_hot(axis, dim) for text, axis in mapping.items()}


class DictClassifier:
    """Oracle classifier: exact lookup from assembled input to label."""

    def __init__(self, mapping):
        self.mapping = dict(mapping)

    def predict(self, text):
        return self.mapping[text]
