/**
 * Browser entry point.
 *
 * Wires the view model to the document: hash routing for node focus, a
 * search box, the edit form, and the conflict prompt. Configuration is
 * limited to the service base URL and an optional bearer token, both taken
 * from query parameters and remembered in localStorage.
 */

import { GraphClient } from "./client.js";
import {
  renderConflictPrompt,
  renderEditForm,
  renderFocusPanel,
  renderNotice,
  renderSearchResults,
} from "./render.js";
import type { EditDraft, EditOpName } from "./types.js";
import { AnnotatorViewModel, browserDraftStorage } from "./viewmodel.js";

interface PageConfig {
  baseUrl: string;
  authToken?: string;
}

function readConfig(): PageConfig {
  const params = new URLSearchParams(window.location.search);
  const stored = window.localStorage.getItem("convkg.annotator.config");
  const fallback: PageConfig = stored
    ? (JSON.parse(stored) as PageConfig)
    : { baseUrl: "http://127.0.0.1:8763" };
  const config: PageConfig = {
    baseUrl: params.get("service") ?? fallback.baseUrl,
    authToken: params.get("token") ?? fallback.authToken,
  };
  window.localStorage.setItem("convkg.annotator.config", JSON.stringify(config));
  return config;
}

function draftFromForm(form: HTMLFormElement): EditDraft {
  const data = new FormData(form);
  const draft: Record<string, unknown> = { op: form.dataset["op"] as EditOpName };
  for (const [key, value] of data.entries()) {
    const text = String(value).trim();
    if (text) draft[key] = text;
  }
  return draft as unknown as EditDraft;
}

function mount() {
  const config = readConfig();
  const client = new GraphClient({ baseUrl: config.baseUrl, authToken: config.authToken });
  const vm = new AnnotatorViewModel(client, browserDraftStorage(window.localStorage));
  const app = document.getElementById("app");
  if (!app) throw new Error("missing #app container");

  const authorInput = document.getElementById("author") as HTMLInputElement | null;
  const author = () => authorInput?.value.trim() ?? "";

  function paint() {
    const parts: string[] = [];
    if (vm.notice) parts.push(renderNotice(vm.notice));
    if (vm.conflict) parts.push(renderConflictPrompt(vm.conflict));
    if (vm.draft) parts.push(renderEditForm(vm.draft, vm.issues));
    if (vm.lastSearch) parts.push(renderSearchResults(vm.lastSearch));
    if (vm.focus) parts.push(renderFocusPanel(vm.focus));
    app!.innerHTML = parts.join("\n");
  }

  async function route() {
    const match = /^#\/node\/(.+)$/.exec(window.location.hash);
    if (match?.[1]) {
      try {
        await vm.browse(decodeURIComponent(match[1]));
      } catch (error) {
        vm.notice = String(error);
      }
      paint();
    }
  }

  document.addEventListener("submit", async (event) => {
    const form = event.target as HTMLFormElement;
    if (form.classList.contains("edit")) {
      event.preventDefault();
      vm.beginDraft(draftFromForm(form));
      await vm.submitDraft(author());
      paint();
    }
    if (form.id === "search-form") {
      event.preventDefault();
      const box = form.querySelector<HTMLInputElement>("input[name=q]");
      if (box?.value.trim()) {
        await vm.search(box.value.trim());
        paint();
      }
    }
  });

  document.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset["action"] === "retry") {
      await vm.retryConflict(author());
      paint();
    }
    if (target.dataset["action"] === "discard") {
      vm.discardDraft();
      paint();
    }
  });

  window.addEventListener("hashchange", route);
  void vm.refreshVersion().then(route);
}

if (typeof document !== "undefined") {
  mount();
}
