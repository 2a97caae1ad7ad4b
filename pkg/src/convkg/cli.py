"""Command line front end for the pipeline: extract, link, build, evaluate, serve."""

import json
import os
import sys

import click

from .clients import (HashingEmbeddingProvider, HttpEmbeddingProvider,
                      HttpTranslationClient, IdentityTranslationClient,
                      VectorFileProvider)
from .corpus import load_corpus
from .edges import (LexiconSentimentClassifier, build_concept_flows,
                    build_emotion_cause_edges, build_emotion_intent_edges,
                    build_event_flows, frequency_filter, label_tail_emotion,
                    load_edges, merge_edges, save_edges)
from .extract import EXTRACTORS, ExtractorConfig
from .graph import (assemble, deserialize, edge_evaluation, scenario_subgraph,
                    serialize)
from .kb import load_kb, translate_kb
from .link import (link_concepts, link_mention, load_matches, load_mentions,
                   save_matches, save_mentions)
from .eval_matching import matching_report, sample_utterances
from .tasks import (MODES, NearestCentroidClassifier, assemble_input,
                    build_task_instances, evaluate_task, export_instances,
                    train_test_split)
from .service import AuditLog, serve as run_service


@click.group()
def main():
    """Conversational knowledge graph toolkit."""


def _provider(vectors, endpoint, hashing_dim=None):
    if vectors and endpoint:
        raise click.UsageError("use either --vectors or --endpoint, not both")
    if vectors:
        return VectorFileProvider(vectors)
    if endpoint:
        return HttpEmbeddingProvider(endpoint, token=os.environ.get("CONVKG_TOKEN"))
    if hashing_dim:
        return HashingEmbeddingProvider(hashing_dim)
    raise click.UsageError("an embedding source is required: --vectors or --endpoint")


def _load_conversations(corpus, parses):
    conversations, scenarios = load_corpus(corpus, parse_path=parses)
    return scenarios, sorted(conversations, key=lambda c: c.id)


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(sorted(EXTRACTORS)), default="parsing",
              show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--min-chars", type=int, default=4, show_default=True,
              help="Minimum sub-utterance length kept by the splitter.")
def extract(corpus, parses, method, out, min_chars):
    """Extract event mentions from every parsed utterance."""
    _, conversations = _load_conversations(corpus, parses)
    cfg = ExtractorConfig(min_sub_utterance_chars=min_chars)
    extractor = EXTRACTORS[method]
    mentions = []
    for conv in conversations:
        for idx in sorted(conv.parses):
            mentions.extend(extractor(conv.parses[idx], cfg))
    save_mentions(mentions, out)
    click.echo(f"{len(mentions)} mentions from "
               f"{sum(len(c.parses) for c in conversations)} utterances -> {out}")


@main.command()
@click.option("--mentions", "mentions_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", type=click.Path(exists=True))
@click.option("--endpoint", type=str)
@click.option("--threshold", type=float, default=0.7, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--corpus", type=click.Path(exists=True),
              help="With --parses: also link content words to entity heads.")
@click.option("--parses", type=click.Path(exists=True))
def link(mentions_path, kb_path, vectors, endpoint, threshold, out, corpus, parses):
    """Match mentions to event heads (and optionally tokens to entity heads)."""
    provider = _provider(vectors, endpoint)
    kb = load_kb(kb_path)
    mentions = load_mentions(mentions_path)
    event_heads = kb.heads_at("event")
    matches = []
    for m in mentions:
        match = link_mention(m, event_heads, provider, threshold)
        if match is not None:
            matches.append(match)
    concept_count = 0
    if corpus and parses:
        entity_heads = kb.heads_at("entity")
        _, conversations = _load_conversations(corpus, parses)
        for conv in conversations:
            for idx in sorted(conv.parses):
                found = link_concepts(conv.parses[idx], entity_heads, provider, threshold)
                matches.extend(found)
                concept_count += len(found)
    save_matches(matches, out)
    click.echo(f"{len(matches) - concept_count}/{len(mentions)} mentions linked, "
               f"{concept_count} concept matches -> {out}")


@main.command("build-edges")
@click.option("--linked", required=True, type=click.Path(exists=True))
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--parses", type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--min-weight-event", type=int, default=3, show_default=True)
@click.option("--min-weight-concept", type=int, default=2, show_default=True)
@click.option("--cross-pairs", is_flag=True,
              help="Connect every head pair across adjacent utterances.")
@click.option("--out", required=True, type=click.Path())
def build_edges(linked, corpus, parses, kb_path, min_weight_event,
                min_weight_concept, cross_pairs, out):
    """Build flow and emotion edges from linked mentions."""
    matches = load_matches(linked)
    kb = load_kb(kb_path)
    _, conversations = _load_conversations(corpus, parses)
    by_conv = {c.id: c for c in conversations}

    event_linked, concept_linked = {}, {}
    linked_heads = {}
    for m in matches:
        conv_id = m.mention.source.conversation_id
        bucket = concept_linked if m.head.level == "entity" else event_linked
        bucket.setdefault(conv_id, []).append(m)
        if m.head.level == "event":
            linked_heads.setdefault(conv_id, {}).setdefault(
                m.mention.source.utterance_index, []).append(m.head)

    event_edges = frequency_filter(
        build_event_flows(event_linked, cross_pairs), min_weight_event)
    concept_edges = frequency_filter(
        build_concept_flows(concept_linked, cross_pairs), min_weight_concept)

    classifier = LexiconSentimentClassifier()
    tail_label = lambda tail: label_tail_emotion(tail, classifier)
    cause_edges, intent_edges = [], []
    for conv_id, heads_by_utt in sorted(linked_heads.items()):
        conv = by_conv.get(conv_id)
        if conv is None:
            continue
        cause_edges.extend(build_emotion_cause_edges(conv, heads_by_utt, kb, tail_label))
        intent_edges.extend(build_emotion_intent_edges(conv, heads_by_utt, kb, tail_label))

    edges = merge_edges(event_edges, concept_edges, cause_edges, intent_edges)
    save_edges(edges, out)
    click.echo(f"{len(event_edges)} event, {len(concept_edges)} concept, "
               f"{len(cause_edges)} cause, {len(intent_edges)} intent -> {out}")


@main.command("build-graph")
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--edges", "edges_path", type=click.Path(exists=True))
@click.option("--per-head-tails", is_flag=True,
              help="Keep a separate tail node per (head, relation) pair.")
@click.option("--out", required=True, type=click.Path())
def build_graph(kb_path, edges_path, per_head_tails, out):
    """Assemble a graph file from a knowledge base and optional flow edges."""
    kb = load_kb(kb_path)
    flow = load_edges(edges_path) if edges_path else ()
    graph = assemble(kb, flow, tail_dedup=not per_head_tails)
    serialize(graph, out)
    s = graph.stats()
    click.echo(f"{len(graph.nodes)} nodes, {s.total_triplets} triplets -> {out}")


@main.command("eval-edges")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="Line-delimited {from, to, subkind?} head-id pairs.")
@click.option("--subkind", type=str, default=None,
              help="Only evaluate pairs tagged with this subkind.")
@click.option("--kinds", type=str, default=None,
              help="Comma-separated edge kinds to traverse.")
def eval_edges(graph_path, pairs_path, subkind, kinds):
    """Connectivity and average distance over head pairs."""
    graph = deserialize(graph_path)
    pairs = []
    with open(pairs_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if subkind and rec.get("subkind") not in (None, subkind):
                continue
            pairs.append((rec["from"], rec["to"]))
    kind_filter = [k for k in kinds.split(",") if k] if kinds else None
    report = edge_evaluation(graph, pairs, kinds=kind_filter)
    dist = "n/a" if report.avg_distance is None else f"{report.avg_distance:.2f}"
    click.echo(f"pairs {report.pairs}  connected {report.connected}  "
               f"connectivity {report.connectivity:.2%}  avg_distance {dist}")


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
def stats(graph_path):
    """Print per-family triplet counts."""
    graph = deserialize(graph_path)
    for name, value in graph.stats().as_dict().items():
        click.echo(f"{name}\t{value}")


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--matches", "matches_path", required=True, type=click.Path(exists=True))
@click.option("--scenario-id", required=True, type=str)
@click.option("--fraction", type=float, default=0.005, show_default=True)
def scenario(graph_path, matches_path, scenario_id, fraction):
    """Top-fraction matched heads for one scenario with induced edges."""
    graph = deserialize(graph_path)
    matches = load_matches(matches_path)
    sub = scenario_subgraph(graph, scenario_id, matches, fraction)
    click.echo(f"scenario {sub.scenario_id}: {len(sub.head_ids)} heads, "
               f"{len(sub.node_ids)} nodes, {len(sub.edges)} edges")
    for head_id in sub.head_ids:
        click.echo(f"  {head_id}\t{graph.nodes[head_id].text}")


@main.command("eval-matching")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", type=click.Path(exists=True))
@click.option("--endpoint", type=str)
@click.option("--method", type=click.Choice(sorted(EXTRACTORS)), default="parsing",
              show_default=True)
@click.option("--threshold", type=float, default=0.7, show_default=True)
@click.option("--sample", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def eval_matching(corpus, parses, kb_path, vectors, endpoint, method, threshold,
                  sample, seed):
    """Intrinsic matching quality on a seeded utterance sample."""
    provider = _provider(vectors, endpoint)
    kb = load_kb(kb_path)
    _, conversations = _load_conversations(corpus, parses)
    utterances = sample_utterances(conversations, sample, seed)
    report = matching_report(utterances, method, kb, provider,
                             threshold=threshold, seed=seed)
    sim = "n/a" if report.avg_similarity is None else f"{report.avg_similarity:.4f}"
    per_utt = ("n/a" if report.avg_similarity_per_utterance is None
               else f"{report.avg_similarity_per_utterance:.4f}")
    click.echo(f"method {report.method}  utterances {report.utterance_count}  "
               f"mentions {report.mention_count}")
    click.echo(f"avg_similarity {sim}  per_utterance {per_utt}  "
               f"avg_matched_heads {report.avg_number:.4f}")


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--vectors", type=click.Path(exists=True))
@click.option("--endpoint", type=str)
@click.option("--task", type=click.Choice(["emotion", "intent"]), required=True)
@click.option("--mode", type=click.Choice(MODES), default="knowledge",
              show_default=True)
@click.option("--threshold", type=float, default=0.7, show_default=True)
@click.option("--test-fraction", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--export", "export_path", type=click.Path(),
              help="Also write all instances as line-delimited records.")
def bench(graph_path, corpus, parses, vectors, endpoint, task, mode, threshold,
          test_fraction, seed, export_path):
    """Train the reference classifier and report task accuracy."""
    provider = _provider(vectors, endpoint)
    graph = deserialize(graph_path)
    _, conversations = _load_conversations(corpus, parses)
    instances = []
    for conv in conversations:
        instances.extend(build_task_instances(conv, graph, provider, task,
                                              threshold=threshold))
    if not instances:
        raise click.ClickException("no task instances could be built")
    if export_path:
        export_instances(instances, export_path)
    train, test = train_test_split(instances, test_fraction, seed)
    if not train or not test:
        raise click.ClickException("split left an empty train or test set")
    classifier = NearestCentroidClassifier(provider)
    classifier.fit([assemble_input(i, mode) for i in train], [i.gold for i in train])
    accuracy = evaluate_task(test, classifier, mode)
    click.echo(f"task {task}  mode {mode}  train {len(train)}  test {len(test)}  "
               f"accuracy {accuracy:.4f}")


@main.command()
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--endpoint", type=str, help="Translation service URL; identity if unset.")
def translate(kb_path, out, endpoint):
    """Translate a knowledge base, rewriting placeholders first."""
    kb = load_kb(kb_path)
    client = (HttpTranslationClient(endpoint, token=os.environ.get("CONVKG_TOKEN"))
              if endpoint else IdentityTranslationClient())
    translated = translate_kb(kb, client)
    failed = sum(1 for t in translated if t.split_failed)
    with open(out, "w", encoding="utf-8") as fh:
        for t in translated:
            fh.write(f"{t.head_id}\t{t.head_text}\t{t.relation}\t{t.tail}\n")
    click.echo(f"{len(translated)} triples ({failed} split fallbacks) -> {out}")


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", type=click.Path(exists=True))
@click.option("--matches", "matches_path", type=click.Path(exists=True),
              help="With --corpus: serve per-scenario subgraphs.")
@click.option("--bind", type=str, default="127.0.0.1:8763", show_default=True)
@click.option("--audit-log", type=click.Path(), help="JSONL edit log path.")
@click.option("--auth-token-env", type=str, default="CONVKG_EDIT_TOKEN",
              show_default=True, help="Env var holding the edit bearer token.")
@click.option("--fraction", type=float, default=0.005, show_default=True)
def serve(graph_path, corpus, matches_path, bind, audit_log, auth_token_env,
          fraction):
    """Serve the graph for browsing and expert edits."""
    graph = deserialize(graph_path)
    corpus_data = None
    scenario_matches = None
    if corpus:
        scenarios, conversations = _load_conversations(corpus, None)
        corpus_data = (scenarios, conversations)
        if matches_path:
            by_conv = {c.id: c.scenario_id for c in conversations}
            scenario_matches = {}
            for m in load_matches(matches_path):
                sid = by_conv.get(m.mention.source.conversation_id)
                if sid is not None:
                    scenario_matches.setdefault(sid, []).append(m)
    log = AuditLog(path=audit_log) if audit_log else None
    token = os.environ.get(auth_token_env) if auth_token_env else None
    click.echo(f"serving {graph_path} on {bind}", err=True)
    run_service(graph, corpus=corpus_data, bind=bind,
                scenario_matches=scenario_matches, audit_log=log,
                auth_token=token, fraction=fraction)


if __name__ == "__main__":
    sys.exit(main())
