/**
 * Session state for the annotator.
 *
 * One focused node with its one-hop neighborhood, one pending edit draft,
 * and the graph version this session last saw. The displayed snapshot is
 * frozen on arrival and is only ever replaced by a fresh service response:
 * pending edits never touch it until the service acknowledges them.
 */

import {
  EditConflictError,
  EditRejectedError,
  GraphClient,
} from "./client.js";
import {
  draftPayload,
  type EdgeKind,
  type EditDraft,
  type NeighborEntry,
  type NodeRecord,
  type SearchResponse,
} from "./types.js";
import { validateAuthor, validateDraft, type FieldIssue } from "./validate.js";

export interface NeighborGroup {
  kind: EdgeKind;
  entries: readonly NeighborEntry[];
}

/** Immutable render model for the focused node and its one-hop neighborhood. */
export interface FocusView {
  node: NodeRecord;
  outDegree: number;
  inDegree: number;
  groups: readonly NeighborGroup[];
  neighborCount: number;
}

export interface ConflictState {
  detail: string;
  currentVersion: number;
}

export type SubmitOutcome =
  | { status: "invalid"; issues: FieldIssue[] }
  | { status: "applied"; version: number }
  | { status: "conflict"; conflict: ConflictState }
  | { status: "rejected"; issues: FieldIssue[]; detail: string };

/** Where the pending draft survives a page reload or dropped connection. */
export interface DraftStorage {
  load(): EditDraft | null;
  save(draft: EditDraft): void;
  clear(): void;
}

export class MemoryDraftStorage implements DraftStorage {
  private draft: EditDraft | null = null;

  load(): EditDraft | null {
    return this.draft;
  }

  save(draft: EditDraft): void {
    this.draft = draft;
  }

  clear(): void {
    this.draft = null;
  }
}

const DRAFT_KEY = "convkg.annotator.draft";

/** Draft storage over window.localStorage; tolerates quota and parse failures. */
export function browserDraftStorage(backing: Storage, key: string = DRAFT_KEY): DraftStorage {
  return {
    load(): EditDraft | null {
      try {
        const raw = backing.getItem(key);
        return raw ? (JSON.parse(raw) as EditDraft) : null;
      } catch {
        return null;
      }
    },
    save(draft: EditDraft): void {
      try {
        backing.setItem(key, JSON.stringify(draft));
      } catch {
        // Draft persistence is best effort; the in-memory copy still exists.
      }
    },
    clear(): void {
      try {
        backing.removeItem(key);
      } catch {
        // Ignore; a stale draft is re-validated on restore anyway.
      }
    },
  };
}

function deepFreeze<T>(value: T): T {
  if (value && typeof value === "object" && !Object.isFrozen(value)) {
    Object.freeze(value);
    for (const child of Object.values(value)) deepFreeze(child);
  }
  return value;
}

function groupByKind(entries: NeighborEntry[]): NeighborGroup[] {
  const order: EdgeKind[] = [];
  const byKind = new Map<EdgeKind, NeighborEntry[]>();
  for (const entry of entries) {
    const bucket = byKind.get(entry.edge.kind);
    if (bucket) {
      bucket.push(entry);
    } else {
      byKind.set(entry.edge.kind, [entry]);
      order.push(entry.edge.kind);
    }
  }
  return order.map((kind) => ({ kind, entries: byKind.get(kind) ?? [] }));
}

// Service messages for missing payload fields name the field in quotes.
const MISSING_FIELD = /missing '([a-z_]+)'/;

function issuesFromRejection(detail: string): FieldIssue[] {
  const match = MISSING_FIELD.exec(detail);
  return [{ field: match?.[1] ?? "draft", message: detail }];
}

export class AnnotatorViewModel {
  private readonly client: GraphClient;
  private readonly storage: DraftStorage;

  focus: FocusView | null = null;
  /** Graph version this session is editing against; null until first contact. */
  version: number | null = null;
  draft: EditDraft | null = null;
  issues: FieldIssue[] = [];
  conflict: ConflictState | null = null;
  notice: string | null = null;
  lastSearch: SearchResponse | null = null;

  constructor(client: GraphClient, storage: DraftStorage = new MemoryDraftStorage()) {
    this.client = client;
    this.storage = storage;
    this.draft = storage.load();
  }

  /** Re-read the service's current graph version. */
  async refreshVersion(): Promise<number> {
    const health = await this.client.health();
    this.version = health.version;
    return health.version;
  }

  /**
   * Focus a node: fetch it plus its one-hop neighborhood and swap the view
   * in atomically. The resulting snapshot is frozen.
   */
  async browse(nodeId: string): Promise<FocusView> {
    const [nodeResponse, neighborResponse] = await Promise.all([
      this.client.getNode(nodeId),
      this.client.neighbors(nodeId),
    ]);
    const view: FocusView = deepFreeze({
      node: nodeResponse.node,
      outDegree: nodeResponse.out_degree,
      inDegree: nodeResponse.in_degree,
      groups: groupByKind(neighborResponse.neighbors),
      neighborCount: neighborResponse.neighbors.length,
    });
    this.focus = view;
    return view;
  }

  /** Text search over node surface forms, for the node-list panel. */
  async search(query: string, limit?: number): Promise<SearchResponse> {
    const result = await this.client.search(query, limit);
    this.lastSearch = deepFreeze(result);
    return result;
  }

  /** Stage a draft; it is persisted immediately so a dropped session keeps it. */
  beginDraft(draft: EditDraft): void {
    this.draft = draft;
    this.issues = [];
    this.conflict = null;
    this.notice = null;
    this.storage.save(draft);
  }

  discardDraft(): void {
    this.draft = null;
    this.issues = [];
    this.conflict = null;
    this.storage.clear();
  }

  /**
   * Submit the pending draft.
   *
   * An invalid draft never reaches the network. A stale-version rejection
   * parks the draft behind a conflict prompt instead of overwriting anything;
   * retryConflict() reloads the version and resubmits the same draft.
   */
  async submitDraft(author: string): Promise<SubmitOutcome> {
    if (!this.draft) {
      return { status: "invalid", issues: [{ field: "draft", message: "nothing staged" }] };
    }
    const issues = [...validateDraft(this.draft), ...validateAuthor(author)];
    if (issues.length > 0) {
      this.issues = issues;
      return { status: "invalid", issues };
    }
    if (this.version === null) await this.refreshVersion();
    try {
      const applied = await this.client.submitEdit(
        this.draft.op,
        draftPayload(this.draft),
        author,
        this.version as number,
      );
      this.version = applied.version;
      this.issues = [];
      this.conflict = null;
      this.notice = `${this.draft.op} applied at version ${applied.version}`;
      this.draft = null;
      this.storage.clear();
      if (this.focus) await this.browse(this.focus.node.id);
      return { status: "applied", version: applied.version };
    } catch (error) {
      if (error instanceof EditConflictError) {
        this.conflict = { detail: error.detail, currentVersion: error.currentVersion };
        return { status: "conflict", conflict: this.conflict };
      }
      if (error instanceof EditRejectedError) {
        this.issues = issuesFromRejection(error.detail);
        return { status: "rejected", issues: this.issues, detail: error.detail };
      }
      throw error;
    }
  }

  /** Accept the reload-and-retry prompt after a stale-version rejection. */
  async retryConflict(author: string): Promise<SubmitOutcome> {
    if (!this.conflict) {
      return { status: "invalid", issues: [{ field: "draft", message: "no conflict to retry" }] };
    }
    this.conflict = null;
    await this.refreshVersion();
    return this.submitDraft(author);
  }
}
