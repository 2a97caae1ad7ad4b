/**
 * Client-side edit validation.
 *
 * Deliberately a subset of what the service enforces: every rejection here
 * corresponds to a schema-level 422 on the service, so a draft that passes
 * may still bounce off graph state (unknown node, duplicate triple), but no
 * draft the service would accept is ever blocked locally.
 */

import {
  EDIT_OPS,
  EVENT_FLOW_SUBKINDS,
  FLOW_KINDS,
  INTENT_LABELS,
  RELATIONS,
  type EditDraft,
  type IntentLabel,
} from "./types.js";

export interface FieldIssue {
  /** Draft field the issue is attached to; "op" or "author" for envelope issues. */
  field: string;
  message: string;
}

export function isIntentLabel(value: unknown): value is IntentLabel {
  return typeof value === "string" && (INTENT_LABELS as readonly string[]).includes(value);
}

function blank(value: unknown): boolean {
  return value === undefined || value === null || (typeof value === "string" && !value.trim());
}

function requireFields(draft: Record<string, unknown>, fields: string[], issues: FieldIssue[]) {
  for (const field of fields) {
    if (blank(draft[field])) issues.push({ field, message: "required" });
  }
}

function checkRelation(relation: unknown, issues: FieldIssue[]) {
  if (blank(relation)) return;
  if (!(RELATIONS as readonly string[]).includes(String(relation))) {
    issues.push({ field: "relation", message: `unknown relation; expected one of ${RELATIONS.join(", ")}` });
  }
}

function checkIntentLabel(value: unknown, field: string, issues: FieldIssue[]) {
  if (blank(value)) return;
  if (isIntentLabel(value)) return;
  const message =
    value === "other"
      ? "the catch-all label cannot be annotated; pick one of " + INTENT_LABELS.join(", ")
      : "intent label must be one of " + INTENT_LABELS.join(", ");
  issues.push({ field, message });
}

/**
 * Validate a draft before it is allowed to reach the network.
 *
 * Returns an empty list when the draft is well formed; otherwise one issue
 * per offending field, in field order.
 */
export function validateDraft(draft: EditDraft): FieldIssue[] {
  const issues: FieldIssue[] = [];
  const record = draft as unknown as Record<string, unknown>;
  if (!(EDIT_OPS as readonly string[]).includes(draft.op)) {
    issues.push({ field: "op", message: `unknown edit op; expected one of ${EDIT_OPS.join(", ")}` });
    return issues;
  }
  switch (draft.op) {
    case "add_tail":
    case "delete_tail":
      requireFields(record, ["head_id", "relation", "tail"], issues);
      checkRelation(record["relation"], issues);
      break;
    case "revise_tail":
      requireFields(record, ["head_id", "relation", "old_tail", "new_tail"], issues);
      checkRelation(record["relation"], issues);
      break;
    case "add_flow_edge": {
      requireFields(record, ["kind", "from", "to"], issues);
      const kind = record["kind"];
      if (!blank(kind) && !(FLOW_KINDS as readonly string[]).includes(String(kind))) {
        issues.push({ field: "kind", message: `unknown flow kind; expected one of ${FLOW_KINDS.join(", ")}` });
        break;
      }
      if (kind === "event_flow") {
        const subkind = record["subkind"];
        if (blank(subkind) || !(EVENT_FLOW_SUBKINDS as readonly string[]).includes(String(subkind))) {
          issues.push({
            field: "subkind",
            message: `event flow edges need a subkind: ${EVENT_FLOW_SUBKINDS.join(" or ")}`,
          });
        }
      } else if (!blank(record["subkind"])) {
        issues.push({ field: "subkind", message: "only event flow edges carry a subkind" });
      }
      if (kind === "emotion_intent") {
        if (blank(record["intent_label"])) {
          issues.push({ field: "intent_label", message: "required" });
        } else {
          checkIntentLabel(record["intent_label"], "intent_label", issues);
        }
      } else if (!blank(record["intent_label"])) {
        issues.push({ field: "intent_label", message: "only emotion intent edges carry an intent label" });
      }
      break;
    }
    case "label_edge":
      requireFields(record, ["from", "to", "intent_label"], issues);
      checkIntentLabel(record["intent_label"], "intent_label", issues);
      if (!blank(record["old_intent_label"])) {
        checkIntentLabel(record["old_intent_label"], "old_intent_label", issues);
      }
      break;
  }
  return issues;
}

/** The service refuses anonymous edits; surface that before the request. */
export function validateAuthor(author: string): FieldIssue[] {
  return blank(author) ? [{ field: "author", message: "required" }] : [];
}
