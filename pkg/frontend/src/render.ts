/**
 * HTML renderers for the annotator views.
 *
 * Every function maps state to a markup string and touches no globals, so
 * the views are testable without a browser. The page shell binds the strings
 * into the document and wires events by delegation.
 */

import type { AuditEntry, EdgeRecord, SearchResponse } from "./types.js";
import type { ConflictState, FocusView, NeighborGroup } from "./viewmodel.js";
import type { FieldIssue } from "./validate.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function edgeBadges(edge: EdgeRecord): string {
  const badges: string[] = [];
  if (edge.relation) badges.push(`<span class="badge relation">${escapeHtml(edge.relation)}</span>`);
  if (edge.subkind) badges.push(`<span class="badge subkind">${escapeHtml(edge.subkind)}</span>`);
  if (edge.intent_label) {
    badges.push(`<span class="badge intent">${escapeHtml(edge.intent_label)}</span>`);
  }
  badges.push(`<span class="badge weight">w=${edge.weight}</span>`);
  return badges.join(" ");
}

function renderGroup(focusId: string, group: NeighborGroup): string {
  const items = group.entries
    .map((entry) => {
      const arrow = entry.edge.to === focusId && entry.edge.from !== focusId ? "&larr;" : "&rarr;";
      return (
        `<li class="neighbor">` +
        `${arrow} <a href="#/node/${encodeURIComponent(entry.node.id)}" data-node-link="${escapeHtml(entry.node.id)}">` +
        `${escapeHtml(entry.node.text)}</a> ${edgeBadges(entry.edge)}</li>`
      );
    })
    .join("");
  return (
    `<section class="group" data-kind="${escapeHtml(group.kind)}">` +
    `<h3>${escapeHtml(group.kind)} (${group.entries.length})</h3>` +
    `<ul>${items}</ul></section>`
  );
}

/** The ego view: focused node header plus its one-hop neighbors by edge kind. */
export function renderFocusPanel(view: FocusView): string {
  const header =
    `<header class="focus">` +
    `<h2>${escapeHtml(view.node.text)}</h2>` +
    `<p class="meta"><code>${escapeHtml(view.node.id)}</code> ` +
    `<span class="badge kind">${escapeHtml(view.node.kind)}</span> ` +
    `out ${view.outDegree} / in ${view.inDegree}</p></header>`;
  if (view.groups.length === 0) {
    return header + `<p class="empty">no neighbors</p>`;
  }
  return header + view.groups.map((group) => renderGroup(view.node.id, group)).join("");
}

export function renderSearchResults(result: SearchResponse): string {
  const items = result.nodes
    .map(
      (node) =>
        `<li><a href="#/node/${encodeURIComponent(node.id)}" data-node-link="${escapeHtml(node.id)}">` +
        `${escapeHtml(node.text)}</a> <span class="badge kind">${escapeHtml(node.kind)}</span></li>`,
    )
    .join("");
  return (
    `<section class="search-results">` +
    `<h3>${result.total} matches for &quot;${escapeHtml(result.query)}&quot;</h3>` +
    `<ul>${items}</ul></section>`
  );
}

function issueFor(field: string, issues: readonly FieldIssue[]): string {
  const hits = issues.filter((issue) => issue.field === field);
  return hits
    .map((issue) => `<span class="issue" data-field="${escapeHtml(field)}">${escapeHtml(issue.message)}</span>`)
    .join("");
}

function field(name: string, label: string, value: string, issues: readonly FieldIssue[]): string {
  return (
    `<label data-field-row="${escapeHtml(name)}">${escapeHtml(label)} ` +
    `<input name="${escapeHtml(name)}" value="${escapeHtml(value)}">` +
    issueFor(name, issues) +
    `</label>`
  );
}

/**
 * The edit form for a staged draft. Validation issues render inside the
 * offending field's label block, directly next to its input.
 */
export function renderEditForm(draft: { op: string }, issues: readonly FieldIssue[]): string {
  const rows = Object.entries(draft as unknown as Record<string, unknown>)
    .filter(([key]) => key !== "op")
    .map(([key, value]) => field(key, key.replaceAll("_", " "), String(value ?? ""), issues))
    .join("");
  const envelope = issueFor("op", issues) + issueFor("author", issues) + issueFor("draft", issues);
  return (
    `<form class="edit" data-op="${escapeHtml(draft.op)}">` +
    `<h3>${escapeHtml(draft.op)}</h3>${envelope}${rows}` +
    `<button type="submit">submit</button></form>`
  );
}

/** Stale-version prompt: the user chooses reload-and-retry or discard. */
export function renderConflictPrompt(conflict: ConflictState): string {
  return (
    `<div class="conflict" role="alertdialog">` +
    `<p>${escapeHtml(conflict.detail)}</p>` +
    `<p>the graph moved to version ${conflict.currentVersion} while you were editing</p>` +
    `<button data-action="retry">reload and retry</button> ` +
    `<button data-action="discard">discard draft</button></div>`
  );
}

export function renderNotice(notice: string): string {
  return `<p class="notice">${escapeHtml(notice)}</p>`;
}

export function renderAuditLog(entries: readonly AuditEntry[]): string {
  const rows = entries
    .map(
      (entry) =>
        `<tr><td>${entry.version}</td><td>${escapeHtml(entry.op)}</td>` +
        `<td>${escapeHtml(entry.author)}</td>` +
        `<td><code>${escapeHtml(JSON.stringify(entry.payload))}</code></td></tr>`,
    )
    .join("");
  return (
    `<table class="audit"><thead>` +
    `<tr><th>version</th><th>op</th><th>author</th><th>payload</th></tr>` +
    `</thead><tbody>${rows}</tbody></table>`
  );
}
