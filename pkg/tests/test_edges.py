"""Tests for dialog-flow edge construction and edge files."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from convkg.clients import TableEmbeddingProvider
from convkg.edges import (CONCEPT_FLOW, EMOTION_CAUSE, EMOTION_INTENT,
                          EVENT_FLOW, INTENT_EDGE_LABELS, NEXT_SUB_UTTERANCE,
                          NEXT_UTTERANCE, PROVENANCE_EXPERT, EdgeError,
                          FlowEdge, LexiconSentimentClassifier, Provenance,
                          build_concept_flows, build_emotion_cause_edges,
                          build_emotion_intent_edges, build_event_flows,
                          edge_from_record, edge_record, edge_weight_histogram,
                          expert_edge, frequency_filter, label_tail_emotion,
                          load_edges, merge_edges, save_edges,
                          scoped_tail_node_id, tail_node_id, text_keywords,
                          utterance_keywords)
from convkg.extract import EventMention, MentionSource
from convkg.kb import Head
from convkg.link import MentionHeadMatch

from helpers import kb_from, parsed, su, two_speaker


def match(head_id, utt, conv="c1", text="x", level="event"):
    return MentionHeadMatch(
        mention=EventMention(text=text, source=MentionSource(conv, utt, 0),
                             driver="v", method="parsing"),
        head=Head(head_id, "t-" + head_id, level),
        score=1.0,
    )


class TestFlowEdgeValidation:

    def test_unknown_kind(self):
        with pytest.raises(EdgeError, match="unknown edge kind"):
            FlowEdge(kind="causal", src="a", dst="b")

    def test_event_flow_requires_subkind(self):
        with pytest.raises(EdgeError, match="subkind"):
            FlowEdge(kind=EVENT_FLOW, src="a", dst="b")
        with pytest.raises(EdgeError, match="subkind"):
            FlowEdge(kind=EVENT_FLOW, src="a", dst="b", subkind="sideways")

    def test_event_flow_subkinds_accepted(self):
        for subkind in (NEXT_UTTERANCE, NEXT_SUB_UTTERANCE):
            edge = FlowEdge(kind=EVENT_FLOW, src="a", dst="b", subkind=subkind)
            assert edge.subkind == subkind

    def test_other_kinds_reject_subkind(self):
        with pytest.raises(EdgeError, match="cannot carry subkind"):
            FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", subkind=NEXT_UTTERANCE)

    def test_intent_edge_requires_specific_label(self):
        with pytest.raises(EdgeError, match="intent label"):
            FlowEdge(kind=EMOTION_INTENT, src="a", dst="b")
        with pytest.raises(EdgeError, match="intent label"):
            FlowEdge(kind=EMOTION_INTENT, src="a", dst="b", intent_label="other")

    def test_intent_edge_labels(self):
        assert INTENT_EDGE_LABELS == {"ask", "advise", "describe", "opinion", "console"}
        for label in sorted(INTENT_EDGE_LABELS):
            edge = FlowEdge(kind=EMOTION_INTENT, src="a", dst="b", intent_label=label)
            assert edge.intent_label == label

    def test_non_intent_kinds_reject_label(self):
        with pytest.raises(EdgeError, match="intent label"):
            FlowEdge(kind=EMOTION_CAUSE, src="a", dst="b", intent_label="ask")

    def test_weight_must_match_provenance(self):
        prov = (Provenance("c1", (0,)),)
        with pytest.raises(EdgeError, match="disagrees"):
            FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", weight=2, provenance=prov)
        edge = FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", weight=1, provenance=prov)
        assert edge.weight == len(edge.provenance)

    def test_weight_without_provenance_allowed(self):
        assert FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", weight=5).weight == 5

    def test_key(self):
        edge = FlowEdge(kind=EMOTION_INTENT, src="a", dst="b", intent_label="ask")
        assert edge.key == (EMOTION_INTENT, "", "a", "b", "ask")


class TestTailNodeIds:

    def test_normalizes_whitespace(self):
        assert tail_node_id(" 很  难过 ") == "tail::很 难过"

    def test_scoped_includes_head_and_relation(self):
        assert scoped_tail_node_id("e1", "xReact", "难过") == "tail::e1::xReact::难过"


class TestEventFlows:

    def test_intra_utterance_edge(self):
        edges = build_event_flows({"c1": [match("h1", 0), match("h2", 0)]})
        assert len(edges) == 1
        e = edges[0]
        assert (e.kind, e.subkind, e.src, e.dst) == (EVENT_FLOW, NEXT_SUB_UTTERANCE, "h1", "h2")
        assert e.provenance == (Provenance("c1", (0,)),)

    def test_inter_utterance_edge(self):
        edges = build_event_flows({"c1": [match("h1", 0), match("h2", 1)]})
        assert len(edges) == 1
        e = edges[0]
        assert (e.subkind, e.src, e.dst) == (NEXT_UTTERANCE, "h1", "h2")
        assert e.provenance == (Provenance("c1", (0, 1)),)

    def test_last_of_utterance_links_to_first_of_next(self):
        linked = {"c1": [match("h1", 0), match("h2", 0), match("h3", 1), match("h4", 1)]}
        edges = build_event_flows(linked)
        got = {(e.subkind, e.src, e.dst) for e in edges}
        assert got == {
            (NEXT_SUB_UTTERANCE, "h1", "h2"),
            (NEXT_SUB_UTTERANCE, "h3", "h4"),
            (NEXT_UTTERANCE, "h2", "h3"),
        }

    def test_cross_utterance_pairs(self):
        linked = {"c1": [match("h1", 0), match("h2", 0), match("h3", 1), match("h4", 1)]}
        edges = build_event_flows(linked, cross_utterance_pairs=True)
        inter = {(e.src, e.dst) for e in edges if e.subkind == NEXT_UTTERANCE}
        assert inter == {("h1", "h3"), ("h1", "h4"), ("h2", "h3"), ("h2", "h4")}

    def test_self_loops_skipped(self):
        assert build_event_flows({"c1": [match("h1", 0), match("h1", 0)]}) == []
        assert build_event_flows({"c1": [match("h1", 0), match("h1", 1)]}) == []

    def test_gap_between_utterances_produces_nothing(self):
        assert build_event_flows({"c1": [match("h1", 0), match("h2", 2)]}) == []

    def test_weight_accumulates_across_conversations(self):
        linked = {
            "c1": [match("h1", 0, "c1"), match("h2", 1, "c1")],
            "c2": [match("h1", 0, "c2"), match("h2", 1, "c2")],
        }
        edges = build_event_flows(linked)
        assert len(edges) == 1
        e = edges[0]
        assert e.weight == 2
        assert [p.conversation_id for p in e.provenance] == ["c1", "c2"]

    def test_output_sorted_and_deterministic(self):
        linked = {
            "c2": [match("h3", 0, "c2"), match("h1", 1, "c2")],
            "c1": [match("h2", 0, "c1"), match("h1", 1, "c1")],
        }
        edges = build_event_flows(linked)
        assert [e.key for e in edges] == sorted(e.key for e in edges)
        assert edges == build_event_flows(dict(reversed(list(linked.items()))))


class TestConceptFlows:

    def test_no_subkind_on_concept_edges(self):
        linked = {"c1": [match("n1", 0, level="entity"), match("n2", 0, level="entity"),
                         match("n3", 1, level="entity")]}
        edges = build_concept_flows(linked)
        assert {(e.kind, e.subkind, e.src, e.dst) for e in edges} == {
            (CONCEPT_FLOW, None, "n1", "n2"),
            (CONCEPT_FLOW, None, "n2", "n3"),
        }

    def test_intra_and_inter_merge_under_one_key(self):
        # The same ordered pair seen inside an utterance and across a boundary
        # accumulates into a single unlabeled concept edge.
        linked = {
            "c1": [match("n1", 0, "c1", level="entity"), match("n2", 0, "c1", level="entity")],
            "c2": [match("n1", 0, "c2", level="entity"), match("n2", 1, "c2", level="entity")],
        }
        edges = build_concept_flows(linked)
        assert len(edges) == 1
        assert edges[0].weight == 2


class TestFrequencyFilter:

    def test_threshold(self):
        edges = [FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", weight=1),
                 FlowEdge(kind=CONCEPT_FLOW, src="b", dst="c", weight=3),
                 FlowEdge(kind=CONCEPT_FLOW, src="c", dst="d", weight=2)]
        kept = frequency_filter(edges, 2)
        assert [(e.src, e.dst) for e in kept] == [("b", "c"), ("c", "d")]

    def test_min_weight_one_keeps_all(self):
        edges = [FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", weight=1)]
        assert frequency_filter(edges, 1) == edges


class TestSentiment:

    def test_lexicon_labels(self):
        clf = LexiconSentimentClassifier()
        assert clf.classify("考完试很开心") == "joy"
        assert clf.classify("有点难过") == "sad"
        assert clf.classify("真让人生气") == "angry"
        assert clf.classify("今天天气不错") == "other"

    def test_custom_lexicon(self):
        clf = LexiconSentimentClassifier({"joy": ("爽",)})
        assert clf.classify("太爽了") == "joy"
        assert clf.classify("难过") == "other"

    def test_label_tail_emotion_prefers_lexicon(self):
        clf = LexiconSentimentClassifier()
        assert label_tail_emotion("很开心", clf) == "joy"

    def test_surprise_fallback(self):
        clf = LexiconSentimentClassifier()
        provider = TableEmbeddingProvider({
            "没想到会这样": (1.0, 0.0),
            "惊讶": (1.0, 0.0),
            "吃惊": (0.0, 1.0),
            "意外": (0.0, 1.0),
        })
        assert label_tail_emotion("没想到会这样", clf, provider) == "surprising"

    def test_surprise_below_threshold_stays_other(self):
        clf = LexiconSentimentClassifier()
        provider = TableEmbeddingProvider({
            "平平常常": (0.0, 1.0),
            "惊讶": (1.0, 0.0),
            "吃惊": (1.0, 0.0),
            "意外": (1.0, 0.0),
        })
        assert label_tail_emotion("平平常常", clf, provider) == "other"

    def test_no_provider_no_fallback(self):
        clf = LexiconSentimentClassifier()
        assert label_tail_emotion("没想到会这样", clf, provider=None) == "other"


class TestKeywords:

    def test_utterance_keywords_are_content_forms(self):
        conv = two_speaker(["丢了钱包", "好"])
        conv.parses[0] = parsed("c1", 0, su([
            ("丢", "v", 0, "HED"), ("了", "u", 1, "RAD"), ("钱包", "n", 1, "VOB"),
        ]))
        assert utterance_keywords(conv, 0) == {"丢", "钱包"}

    def test_missing_parse_is_empty(self):
        conv = two_speaker(["丢了钱包", "好"])
        assert utterance_keywords(conv, 0) == set()

    def test_stopwords_removed(self):
        conv = two_speaker(["丢了钱包", "好"])
        conv.parses[0] = parsed("c1", 0, su([
            ("丢", "v", 0, "HED"), ("钱包", "n", 1, "VOB"),
        ]))
        assert utterance_keywords(conv, 0, stopwords={"丢"}) == {"钱包"}

    def test_text_keywords_include_phrase_and_parts(self):
        assert text_keywords("丢了 钱包") == {"丢了 钱包", "丢了", "钱包"}
        assert text_keywords("  钱包  ") == {"钱包"}
        assert text_keywords("丢了 钱包", stopwords={"丢了"}) == {"丢了 钱包", "钱包"}


def exam_conv():
    """Three turns: losing a wallet, feeling sad about it, being consoled."""
    conv = two_speaker(
        ["我丢了钱包", "考试没考好我很难过", "我来安慰你一下"],
        emotions={1: "sad"},
        intents={2: "console"},
    )
    conv.parses[0] = parsed("c1", 0, su([
        ("我", "r", 2, "SBV"), ("丢", "v", 0, "HED"),
        ("了", "u", 2, "RAD"), ("钱包", "n", 2, "VOB"),
    ]))
    conv.parses[2] = parsed("c1", 2, su([
        ("我", "r", 3, "SBV"), ("来", "v", 3, "ADV"), ("安慰", "v", 0, "HED"),
        ("你", "r", 3, "VOB"), ("一下", "m", 3, "CMP"),
    ]))
    return conv


def exam_kb():
    return kb_from([
        ("e1", "考试没考好", "event", "xReact", "难过"),
        ("e1", "考试没考好", "event", "xNeed", "钱包"),
        ("e1", "考试没考好", "event", "xWant", "安慰"),
    ])


class TestEmotionCauseEdges:

    def classifier(self):
        return LexiconSentimentClassifier().classify

    def test_edge_from_emotion_tail_to_echoed_precondition(self):
        conv = exam_conv()
        heads = {1: [Head("e1", "考试没考好", "event")]}
        edges = build_emotion_cause_edges(conv, heads, exam_kb(), self.classifier())
        assert len(edges) == 1
        e = edges[0]
        assert (e.kind, e.src, e.dst) == (EMOTION_CAUSE, "tail::难过", "tail::钱包")
        assert e.intent_label is None
        assert e.provenance == (Provenance("c1", (0, 1)),)

    def test_unlabeled_utterance_produces_nothing(self):
        conv = exam_conv()
        conv.utterances[1].emotion = "other"
        heads = {1: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_cause_edges(conv, heads, exam_kb(), self.classifier()) == []

    def test_emotion_mismatch_produces_nothing(self):
        conv = exam_conv()
        conv.utterances[1].emotion = "joy"
        heads = {1: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_cause_edges(conv, heads, exam_kb(), self.classifier()) == []

    def test_keyword_miss_produces_nothing(self):
        conv = exam_conv()
        kb = kb_from([
            ("e1", "考试没考好", "event", "xReact", "难过"),
            ("e1", "考试没考好", "event", "xNeed", "复习资料"),
        ])
        heads = {1: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_cause_edges(conv, heads, kb, self.classifier()) == []

    def test_only_earlier_utterances_count(self):
        # The echoed keyword appears only after the emotional turn.
        conv = two_speaker(["你好", "我很难过", "钱包找到了"], emotions={1: "sad"})
        conv.parses[2] = parsed("c1", 2, su([
            ("钱包", "n", 2, "SBV"), ("找到", "v", 0, "HED"), ("了", "u", 2, "RAD"),
        ]))
        heads = {1: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_cause_edges(conv, heads, exam_kb(), self.classifier()) == []

    def test_earliest_hit_recorded(self):
        conv = two_speaker(["我丢了钱包", "钱包很贵吗", "我很难过"], emotions={2: "sad"})
        for idx in (0, 1):
            conv.parses[idx] = parsed("c1", idx, su([
                ("钱包", "n", 0, "HED"),
            ]))
        heads = {2: [Head("e1", "考试没考好", "event")]}
        edges = build_emotion_cause_edges(conv, heads, exam_kb(), self.classifier())
        assert len(edges) == 1
        assert edges[0].provenance == (Provenance("c1", (0, 2)),)

    def test_duplicate_heads_accumulate_weight(self):
        conv = exam_conv()
        heads = {1: [Head("e1", "考试没考好", "event"), Head("e1", "考试没考好", "event")]}
        edges = build_emotion_cause_edges(conv, heads, exam_kb(), self.classifier())
        assert len(edges) == 1
        assert edges[0].weight == 2


class TestEmotionIntentEdges:

    def classifier(self):
        return LexiconSentimentClassifier().classify

    def test_edge_to_echoed_aftermath_with_intent_label(self):
        conv = exam_conv()
        heads = {1: [Head("e1", "考试没考好", "event")]}
        edges = build_emotion_intent_edges(conv, heads, exam_kb(), self.classifier())
        assert len(edges) == 1
        e = edges[0]
        assert (e.kind, e.src, e.dst) == (EMOTION_INTENT, "tail::难过", "tail::安慰")
        assert e.intent_label == "console"
        assert e.provenance == (Provenance("c1", (1, 2)),)

    def test_catch_all_intent_produces_nothing(self):
        conv = exam_conv()
        conv.utterances[2].intent = "other"
        heads = {1: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_intent_edges(conv, heads, exam_kb(), self.classifier()) == []

    def test_last_utterance_skipped(self):
        conv = exam_conv()
        heads = {2: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_intent_edges(conv, heads, exam_kb(), self.classifier()) == []

    def test_next_utterance_keyword_miss_produces_nothing(self):
        conv = exam_conv()
        kb = kb_from([
            ("e1", "考试没考好", "event", "xReact", "难过"),
            ("e1", "考试没考好", "event", "xWant", "重新考试"),
        ])
        heads = {1: [Head("e1", "考试没考好", "event")]}
        assert build_emotion_intent_edges(conv, heads, kb, self.classifier()) == []


class TestEdgeFiles:

    def sample_edges(self):
        return [
            FlowEdge(kind=EVENT_FLOW, src="e1", dst="e2", subkind=NEXT_UTTERANCE,
                     weight=2, provenance=(Provenance("c1", (0, 1)), Provenance("c2", (3, 4)))),
            FlowEdge(kind=EMOTION_INTENT, src="tail::难过", dst="tail::安慰",
                     intent_label="console", weight=1,
                     provenance=(Provenance("c1", (1, 2)),)),
        ]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "edges.jsonl"
        save_edges(self.sample_edges(), path)
        assert load_edges(path) == self.sample_edges()

    def test_file_is_chinese_readable(self, tmp_path):
        path = tmp_path / "edges.jsonl"
        save_edges(self.sample_edges(), path)
        assert "难过" in path.read_text(encoding="utf-8")

    def test_record_round_trip(self):
        for e in self.sample_edges():
            assert edge_from_record(edge_record(e)) == e

    def test_weight_defaults_to_provenance_count(self):
        rec = edge_record(self.sample_edges()[0])
        del rec["weight"]
        assert edge_from_record(rec).weight == 2

    def test_weight_defaults_to_one_without_provenance(self):
        rec = {"kind": CONCEPT_FLOW, "from": "a", "to": "b"}
        assert edge_from_record(rec).weight == 1

    def test_missing_key_is_malformed(self):
        with pytest.raises(EdgeError, match="malformed"):
            edge_from_record({"kind": CONCEPT_FLOW, "from": "a"})

    def test_line_number_in_errors(self, tmp_path):
        path = tmp_path / "edges.jsonl"
        good = edge_record(self.sample_edges()[0])
        import json
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(good) + "\n")
            fh.write(json.dumps({"kind": "bogus", "from": "a", "to": "b"}) + "\n")
        with pytest.raises(EdgeError, match="line 2"):
            load_edges(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "edges.jsonl"
        import json
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n")
            fh.write(json.dumps(edge_record(self.sample_edges()[0])) + "\n")
            fh.write("   \n")
        assert len(load_edges(path)) == 1


class TestExpertAndMerge:

    def test_expert_edge_provenance(self):
        e = expert_edge(EVENT_FLOW, "e1", "e2", author="lin", subkind=NEXT_UTTERANCE)
        assert e.weight == 1
        assert len(e.provenance) == 1
        p = e.provenance[0]
        assert p.kind == PROVENANCE_EXPERT
        assert p.conversation_id == "expert:lin"
        assert p.utterances == ()

    def test_expert_intent_edge(self):
        e = expert_edge(EMOTION_INTENT, "a", "b", author="lin", intent_label="ask")
        assert e.intent_label == "ask"

    def test_merge_sums_weights_and_concatenates_provenance(self):
        a = FlowEdge(kind=CONCEPT_FLOW, src="x", dst="y", weight=1,
                     provenance=(Provenance("c1", (0,)),))
        b = FlowEdge(kind=CONCEPT_FLOW, src="x", dst="y", weight=2,
                     provenance=(Provenance("c2", (1,)), Provenance("c3", (2,))))
        merged = merge_edges([a], [b])
        assert len(merged) == 1
        assert merged[0].weight == 3
        assert [p.conversation_id for p in merged[0].provenance] == ["c1", "c2", "c3"]

    def test_merge_keeps_distinct_keys_apart(self):
        a = FlowEdge(kind=CONCEPT_FLOW, src="x", dst="y")
        b = FlowEdge(kind=EVENT_FLOW, src="x", dst="y", subkind=NEXT_UTTERANCE)
        merged = merge_edges([a, b])
        assert len(merged) == 2
        assert [e.key for e in merged] == sorted(e.key for e in merged)

    def test_merge_intent_labels_separate_edges(self):
        a = FlowEdge(kind=EMOTION_INTENT, src="x", dst="y", intent_label="ask")
        b = FlowEdge(kind=EMOTION_INTENT, src="x", dst="y", intent_label="advise")
        assert len(merge_edges([a], [b])) == 2

    def test_histogram(self):
        edges = [FlowEdge(kind=CONCEPT_FLOW, src="a", dst="b", weight=1),
                 FlowEdge(kind=CONCEPT_FLOW, src="b", dst="c", weight=3),
                 FlowEdge(kind=CONCEPT_FLOW, src="c", dst="d", weight=1)]
        assert edge_weight_histogram(edges) == {1: 2, 3: 1}


@st.composite
def edge_batches(draw):
    nodes = ["a", "b", "c"]
    n = draw(st.integers(1, 12))
    edges = []
    for i in range(n):
        src, dst = draw(st.sampled_from([(s, d) for s in nodes for d in nodes if s != d]))
        count = draw(st.integers(1, 3))
        provs = tuple(Provenance(f"c{i}", (j,)) for j in range(count))
        edges.append(FlowEdge(kind=CONCEPT_FLOW, src=src, dst=dst,
                              weight=count, provenance=provs))
    return edges


@given(edge_batches(), edge_batches())
def test_merge_conserves_total_weight(batch_a, batch_b):
    merged = merge_edges(batch_a, batch_b)
    assert sum(e.weight for e in merged) == sum(e.weight for e in batch_a + batch_b)
    for e in merged:
        assert e.weight == len(e.provenance)
    assert [e.key for e in merged] == sorted(e.key for e in merged)
