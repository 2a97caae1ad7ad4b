"""Conversational commonsense knowledge graphs.

Builds an event-level knowledge graph over two-party conversations: utterance
events linked to a commonsense base, flow edges between adjacent events, and
emotion cause/intent edges grounded in the dialogue, plus evaluation harnesses
and an HTTP browse/edit service.
"""

from .corpus import (Conversation, CorpusError, ParsedUtterance, Scenario,
                     SubUtterance, Token, Utterance, attach_parses, load_corpus,
                     load_parses, save_corpus, validate_conversation,
                     validate_parse_alignment)
from .kb import (DEFAULT_CONNECTORS, DEFAULT_REPLACEMENT_RULES, KB, Head,
                 KBError, KBTriple, ReplacementRule, apply_replacements,
                 categorize_tail, invert_replacements, load_kb, normalize_ws,
                 save_kb, translate_kb, translate_triple)
from .clients import (HashingEmbeddingProvider, HttpEmbeddingProvider,
                      HttpTranslationClient, IdentityTranslationClient,
                      ProviderError, TableEmbeddingProvider,
                      TableTranslationClient, TranslationError,
                      VectorFileProvider, load_vector_file, save_vector_file)
from .extract import (EXTRACTORS, EventMention, ExtractError, ExtractorConfig,
                      MentionSource, extract_events, parsing_extract,
                      pos_extract, secondary_decompose, simple_extract)
from .link import (DEFAULT_THRESHOLD, FinetunePair, LinkError, MentionHeadMatch,
                   best_head, cosine, export_finetune_pairs, link_concepts,
                   link_mention, load_matches, load_mentions, save_matches,
                   save_mentions)
from .edges import (EdgeError, FlowEdge, LexiconSentimentClassifier, Provenance,
                    build_concept_flows, build_emotion_cause_edges,
                    build_emotion_intent_edges, build_event_flows, expert_edge,
                    frequency_filter, label_tail_emotion, load_edges, merge_edges,
                    save_edges)
from .graph import (ConversationGraph, DuplicateError, EdgeEvaluation,
                    GraphEdge, GraphError, GraphNode, GraphStats, ScenarioGraph,
                    UnknownNodeError, assemble, deserialize, edge_evaluation,
                    graphs_equal, scenario_subgraph, serialize)
from .eval_matching import MatchingReport, matching_report, sample_utterances
from .tasks import (NearestCentroidClassifier, TaskInstance, assemble_input,
                    build_task_instances, evaluate_task, sample_emotion_knowledge,
                    sample_intent_knowledge, sample_knowledge)
from .service import AuditLog, EditOp, apply_edit, create_app, replay_audit_log, serve

__version__ = "0.1.0"
