"""Intrinsic evaluation of mention-to-head matching quality.

Reports the mean best-match similarity over mentions and the mean number of
distinct matched heads per utterance at a threshold, for any of the three
extraction methods on a seeded utterance sample.
"""

import random
from dataclasses import dataclass

from .extract import EXTRACTORS, ExtractorConfig
from .kb import KB
from .link import best_head


class EvalError(ValueError):
    """An evaluation request violates its contract."""


@dataclass(frozen=True)
class MatchingReport:
    method: str
    threshold: float
    utterance_count: int
    mention_count: int
    avg_similarity: float | None
    avg_similarity_per_utterance: float | None
    avg_number: float
    seed: int | None = None


def sample_utterances(conversations, n: int, seed: int):
    """Seeded sample of parsed utterances across a corpus."""
    pool = []
    for conv in conversations:
        for idx in sorted(conv.parses):
            pool.append(conv.parses[idx])
    if n > len(pool):
        raise EvalError(f"cannot sample {n} utterances from {len(pool)} parsed ones")
    rng = random.Random(seed)
    return rng.sample(pool, n)


def matching_report(utterances, method: str, kb: KB, provider,
                    threshold: float = 0.7, cfg: ExtractorConfig | None = None,
                    seed: int | None = None) -> MatchingReport:
    """Run one extraction method over the utterances and score its matches.

    Similarity averages use the unthresholded best score of every mention;
    the matched-head count applies the threshold and deduplicates heads
    within an utterance.
    """
    utterances = list(utterances)
    if not utterances:
        raise EvalError("no utterances to evaluate")
    try:
        extractor = EXTRACTORS[method]
    except KeyError:
        raise EvalError(f"unknown method {method!r}; expected one of "
                        f"{sorted(EXTRACTORS)}") from None
    cfg = cfg or ExtractorConfig()
    heads = kb.heads_at("event")

    all_scores: list[float] = []
    per_utt_means: list[float] = []
    matched_counts: list[int] = []
    mention_count = 0
    for utt in utterances:
        mentions = extractor(utt, cfg)
        mention_count += len(mentions)
        scores = []
        matched: set[str] = set()
        for m in mentions:
            head, score = best_head(m.text, heads, provider)
            if head is None:
                continue
            scores.append(score)
            if score >= threshold:
                matched.add(head.id)
        all_scores.extend(scores)
        if scores:
            per_utt_means.append(sum(scores) / len(scores))
        matched_counts.append(len(matched))

    return MatchingReport(
        method=method,
        threshold=threshold,
        utterance_count=len(utterances),
        mention_count=mention_count,
        avg_similarity=(sum(all_scores) / len(all_scores)) if all_scores else None,
        avg_similarity_per_utterance=(
            sum(per_utt_means) / len(per_utt_means)) if per_utt_means else None,
        avg_number=sum(matched_counts) / len(matched_counts),
        seed=seed,
    )
