/**
 * Wire types for the graph service API.
 *
 * Field names mirror the service's JSON bodies one to one so responses can be
 * rendered without a mapping layer.
 */

// Vocabulary

export type NodeKind = "event_head" | "entity_head" | "tail";

export type EdgeKind =
  | "atomic"
  | "event_flow"
  | "concept_flow"
  | "emotion_cause"
  | "emotion_intent";

export const FLOW_KINDS = [
  "event_flow",
  "concept_flow",
  "emotion_cause",
  "emotion_intent",
] as const;

export const EVENT_FLOW_SUBKINDS = ["next_utterance", "next_sub_utterance"] as const;

export const RELATIONS = [
  "xIntent",
  "xNeed",
  "xAttr",
  "xReact",
  "xWant",
  "xEffect",
  "oReact",
  "oWant",
  "oEffect",
  "isAfter",
  "isBefore",
] as const;

export type Relation = (typeof RELATIONS)[number];

/** Labels an emotion-intent edge may carry; the catch-all class is excluded. */
export const INTENT_LABELS = ["ask", "advise", "describe", "opinion", "console"] as const;

export type IntentLabel = (typeof INTENT_LABELS)[number];

export const EDIT_OPS = [
  "add_tail",
  "revise_tail",
  "delete_tail",
  "add_flow_edge",
  "label_edge",
] as const;

export type EditOpName = (typeof EDIT_OPS)[number];

// Records

export interface NodeRecord {
  id: string;
  kind: NodeKind;
  text: string;
}

export interface EdgeRecord {
  kind: EdgeKind;
  relation: string | null;
  subkind: string | null;
  from: string;
  to: string;
  weight: number;
  intent_label: string | null;
}

export interface NeighborEntry {
  edge: EdgeRecord;
  node: NodeRecord;
}

// Responses

export interface HealthResponse {
  status: string;
  version: number;
}

export interface GraphStatsRecord {
  atomic_relations: number;
  event_flows: number;
  concept_flows: number;
  emotion_cause_flows: number;
  emotion_intent_flows: number;
  total_triplets: number;
}

export interface StatsResponse {
  stats: GraphStatsRecord;
  version: number;
  nodes: number;
}

export interface NodeResponse {
  node: NodeRecord;
  out_degree: number;
  in_degree: number;
}

export interface NeighborsResponse {
  node: string;
  neighbors: NeighborEntry[];
}

export interface SearchResponse {
  query: string;
  nodes: NodeRecord[];
  total: number;
}

export interface ScenarioGraphResponse {
  scenario_id: string;
  head_ids: string[];
  nodes: NodeRecord[];
  edges: EdgeRecord[];
}

export interface AuditEntry {
  op: EditOpName;
  payload: Record<string, unknown>;
  author: string;
  base_version: number;
  version: number;
  timestamp: number | null;
}

export interface EditListResponse {
  edits: AuditEntry[];
  version: number;
}

export interface EditAppliedResponse {
  applied: boolean;
  version: number;
  result: Record<string, unknown>;
}

// Edit drafts, one shape per operation

export interface AddTailDraft {
  op: "add_tail";
  head_id: string;
  relation: string;
  tail: string;
}

export interface ReviseTailDraft {
  op: "revise_tail";
  head_id: string;
  relation: string;
  old_tail: string;
  new_tail: string;
}

export interface DeleteTailDraft {
  op: "delete_tail";
  head_id: string;
  relation: string;
  tail: string;
}

export interface AddFlowEdgeDraft {
  op: "add_flow_edge";
  kind: string;
  from: string;
  to: string;
  subkind?: string;
  intent_label?: string;
}

export interface LabelEdgeDraft {
  op: "label_edge";
  from: string;
  to: string;
  intent_label: string;
  old_intent_label?: string;
}

export type EditDraft =
  | AddTailDraft
  | ReviseTailDraft
  | DeleteTailDraft
  | AddFlowEdgeDraft
  | LabelEdgeDraft;

/** Strip the op discriminant; what remains is the POST /edits payload. */
export function draftPayload(draft: EditDraft): Record<string, unknown> {
  const { op, ...rest } = draft;
  void op;
  const payload: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(rest)) {
    if (value !== undefined) payload[key] = value;
  }
  return payload;
}
