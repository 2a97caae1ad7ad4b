/**
 * Scripted annotation sessions.
 *
 * A session is a list of steps, each mapping to exactly the interaction a
 * user performs in the UI: focus a node, search, stage a draft, submit it,
 * or answer the stale-version prompt with reload-and-retry. Running a
 * recorded session drives the same view-model code paths the UI uses, so
 * its effect on the service equals the live session's.
 */

import type { EditDraft } from "./types.js";
import type { AnnotatorViewModel, SubmitOutcome } from "./viewmodel.js";

export type SessionStep =
  | { action: "browse"; nodeId: string }
  | { action: "search"; query: string; limit?: number }
  | { action: "draft"; draft: EditDraft }
  | { action: "submit" }
  | { action: "retry" }
  | { action: "discard" };

export interface StepOutcome {
  step: SessionStep;
  /** "focused", "searched", "staged", "discarded", or a submit status. */
  result: string;
  submit?: SubmitOutcome;
}

/** Replay a recorded session through the view model, step by step. */
export async function runSession(
  vm: AnnotatorViewModel,
  steps: readonly SessionStep[],
  author: string,
): Promise<StepOutcome[]> {
  const outcomes: StepOutcome[] = [];
  for (const step of steps) {
    switch (step.action) {
      case "browse": {
        await vm.browse(step.nodeId);
        outcomes.push({ step, result: "focused" });
        break;
      }
      case "search": {
        await vm.search(step.query, step.limit);
        outcomes.push({ step, result: "searched" });
        break;
      }
      case "draft": {
        vm.beginDraft(step.draft);
        outcomes.push({ step, result: "staged" });
        break;
      }
      case "submit": {
        const submit = await vm.submitDraft(author);
        outcomes.push({ step, result: submit.status, submit });
        break;
      }
      case "retry": {
        const submit = await vm.retryConflict(author);
        outcomes.push({ step, result: submit.status, submit });
        break;
      }
      case "discard": {
        vm.discardDraft();
        outcomes.push({ step, result: "discarded" });
        break;
      }
    }
  }
  return outcomes;
}
