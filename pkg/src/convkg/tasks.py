"""Knowledge-augmented emotion and intent classification harness.

Builds classification instances from conversations by linking each utterance
into the graph and sampling tails from its matched heads: attribute and
reaction tails for the emotion task, other-party reaction and effect tails for
the intent task. Inputs are assembled with a separator token in four modes.
"""

import json
import random
from dataclasses import dataclass

from .corpus import Conversation
from .extract import ExtractorConfig, parsing_extract
from .graph import ATOMIC, NODE_EVENT_HEAD, ConversationGraph
from .kb import Head
from .link import best_head, cosine

SEP = " [SEP] "

TASK_EMOTION = "emotion"
TASK_INTENT = "intent"

EMOTION_RELATIONS = ("xAttr", "xReact")
INTENT_RELATIONS = ("oReact", "oEffect")

MODES = ("base", "knowledge", "history", "knowledge+history")


class TaskError(ValueError):
    """A task-harness request violates its contract."""


@dataclass(frozen=True)
class KnowledgeSample:
    tail: str
    relation: str
    head_id: str
    score: float


@dataclass(frozen=True)
class TaskInstance:
    task: str
    history: tuple[str, ...]
    current: str
    knowledge: tuple[KnowledgeSample, ...]
    gold: str


def _event_heads(graph: ConversationGraph) -> list[Head]:
    return [
        Head(id=n.id, text=n.text, level="event")
        for n in sorted(graph.nodes.values(), key=lambda n: n.id)
        if n.kind == NODE_EVENT_HEAD
    ]


def _tails_for(graph: ConversationGraph, head_id: str, relation: str) -> list[str]:
    out = []
    for edge, node in graph.neighbors(head_id, kinds=(ATOMIC,), direction="out"):
        if edge.relation == relation:
            out.append(node.text)
    return out


def sample_knowledge(utt, graph: ConversationGraph, provider, relations,
                     threshold: float = 0.7, per_relation: int = 3,
                     cfg: ExtractorConfig | None = None) -> list[KnowledgeSample]:
    """Tails reachable from matched heads, deduplicated and score-ranked.

    Every sample keeps its head and match score so the provenance of each
    piece of knowledge stays auditable.
    """
    heads = _event_heads(graph)
    scored: dict[str, tuple[float, str]] = {}
    for mention in parsing_extract(utt, cfg or ExtractorConfig()):
        head, score = best_head(mention.text, heads, provider)
        if head is None or score < threshold:
            continue
        prev = scored.get(head.id)
        if prev is None or score > prev[0]:
            scored[head.id] = (score, head.id)
    out: list[KnowledgeSample] = []
    for relation in relations:
        seen: set[str] = set()
        candidates: list[KnowledgeSample] = []
        for head_id, (score, _) in sorted(scored.items()):
            for tail in _tails_for(graph, head_id, relation):
                if tail in seen:
                    continue
                seen.add(tail)
                candidates.append(KnowledgeSample(tail, relation, head_id, score))
        candidates.sort(key=lambda k: (-k.score, k.tail))
        out.extend(candidates[:per_relation])
    return out


def sample_emotion_knowledge(utt, graph, provider, threshold: float = 0.7,
                             per_relation: int = 3, cfg=None) -> list[str]:
    """Attribute and reaction tails supporting emotion classification."""
    return [k.tail for k in sample_knowledge(utt, graph, provider, EMOTION_RELATIONS,
                                             threshold, per_relation, cfg)]


def sample_intent_knowledge(utt, graph, provider, threshold: float = 0.7,
                            per_relation: int = 3, cfg=None) -> list[str]:
    """Other-party reaction and effect tails supporting intent prediction."""
    return [k.tail for k in sample_knowledge(utt, graph, provider, INTENT_RELATIONS,
                                             threshold, per_relation, cfg)]


def build_task_instances(conv: Conversation, graph: ConversationGraph, provider,
                         task: str, threshold: float = 0.7, per_relation: int = 3,
                         cfg: ExtractorConfig | None = None,
                         history_window: int = 2) -> list[TaskInstance]:
    """One instance per eligible utterance.

    The emotion task labels each utterance with its own emotion; the intent
    task predicts the intent of the following utterance from context ending at
    the current one.
    """
    if task not in (TASK_EMOTION, TASK_INTENT):
        raise TaskError(f"unknown task {task!r}")
    relations = EMOTION_RELATIONS if task == TASK_EMOTION else INTENT_RELATIONS
    instances = []
    for utt in conv.utterances:
        idx = utt.index
        if idx not in conv.parses:
            continue
        if task == TASK_INTENT and idx + 1 >= len(conv.utterances):
            continue
        knowledge = tuple(sample_knowledge(
            conv.parses[idx], graph, provider, relations, threshold, per_relation, cfg))
        history = tuple(
            u.text for u in conv.utterances[max(0, idx - history_window):idx])
        gold = utt.emotion if task == TASK_EMOTION else conv.utterances[idx + 1].intent
        instances.append(TaskInstance(
            task=task,
            history=history,
            current=utt.text,
            knowledge=knowledge,
            gold=gold,
        ))
    return instances


def assemble_input(instance: TaskInstance, mode: str) -> str:
    """Separator-joined model input; empty slots are dropped, never doubled."""
    if mode not in MODES:
        raise TaskError(f"unknown mode {mode!r}; expected one of {MODES}")
    parts: list[str] = []
    if "history" in mode:
        parts.extend(instance.history)
    parts.append(instance.current)
    if "knowledge" in mode:
        parts.extend(k.tail for k in instance.knowledge)
    return SEP.join(p for p in parts if p)


def evaluate_task(instances, classifier, mode: str) -> float:
    """Fraction of instances whose predicted label equals the gold label."""
    instances = list(instances)
    if not instances:
        raise TaskError("no instances to evaluate")
    correct = 0
    for inst in instances:
        if classifier.predict(assemble_input(inst, mode)) == inst.gold:
            correct += 1
    return correct / len(instances)


class NearestCentroidClassifier:
    """Embedding-based reference classifier: label of the closest centroid."""

    def __init__(self, provider):
        self.provider = provider
        self.centroids: dict[str, tuple[float, ...]] = {}

    def fit(self, texts, labels):
        texts = list(texts)
        labels = list(labels)
        if not texts or len(texts) != len(labels):
            raise TaskError("fit needs matching non-empty texts and labels")
        vectors = self.provider.embed(texts)
        sums: dict[str, list[float]] = {}
        counts: dict[str, int] = {}
        for vec, label in zip(vectors, labels):
            if label not in sums:
                sums[label] = [0.0] * len(vec)
                counts[label] = 0
            for i, x in enumerate(vec):
                sums[label][i] += x
            counts[label] += 1
        self.centroids = {
            label: tuple(x / counts[label] for x in sums[label]) for label in sums
        }
        return self

    def predict(self, text: str) -> str:
        if not self.centroids:
            raise TaskError("classifier is not fitted")
        vec = self.provider.embed([text])[0]
        ranked = sorted(
            ((-cosine(vec, centroid), label) for label, centroid in self.centroids.items()))
        return ranked[0][1]


def export_instances(instances, path):
    """Line-delimited instance dump for training external models."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps({
                "task": inst.task,
                "history": list(inst.history),
                "current": inst.current,
                "knowledge": [
                    {"tail": k.tail, "relation": k.relation,
                     "head_id": k.head_id, "score": k.score}
                    for k in inst.knowledge
                ],
                "gold": inst.gold,
            }, ensure_ascii=False) + "\n")


def train_test_split(instances, test_fraction: float = 0.5, seed: int = 0):
    instances = list(instances)
    rng = random.Random(seed)
    rng.shuffle(instances)
    cut = int(len(instances) * (1 - test_fraction))
    return instances[:cut], instances[cut:]
