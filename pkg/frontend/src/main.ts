// Entry point: wires the form, the highlighted article view, the candidate
// picker, the polarity gauge, undo and export against the HTTP service.

import { ApiClient, ApiError } from "./api.js";
import {
  ViewState,
  afterPick,
  afterUndo,
  fromSession,
  peekUndo,
} from "./state.js";
import { renderBanner, renderGauge, renderPicker, renderTokens, renderUndo } from "./render.js";

let client: ApiClient | null = null;
let state: ViewState | null = null;
let openPicker: number | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function setError(message: string | null) {
  el("error").innerHTML = message ? `<div class="banner error">${message}</div>` : "";
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.status === 409) {
      return "someone else edited this session; reload it to continue";
    }
    if (err.status === 422) {
      return "unknown topic or ideology";
    }
    return `service error ${err.status}`;
  }
  return "service unreachable; check the server URL and retry";
}

function render() {
  if (!state) {
    return;
  }
  el("banner").innerHTML = renderBanner(state);
  el("article").innerHTML = renderTokens(state);
  el("gauge").innerHTML = renderGauge(state);
  el("undo-holder").innerHTML = renderUndo(state);
  el<HTMLButtonElement>("export").disabled = false;
  const picker = el("picker");
  if (openPicker !== null) {
    const suggestion = state.suggestions.find((s) => s.position === openPicker);
    picker.innerHTML = suggestion ? renderPicker(state, suggestion) : "";
  } else {
    picker.innerHTML = "";
  }
}

async function load() {
  setError(null);
  const base = el<HTMLInputElement>("server").value.replace(/\/$/, "");
  client = new ApiClient(base);
  const text = el<HTMLTextAreaElement>("text").value;
  const topic = el<HTMLInputElement>("topic").value;
  const ideology = el<HTMLSelectElement>("ideology").value;
  try {
    const payload = await client.createSession(text, topic, ideology);
    state = fromSession(payload);
    openPicker = null;
    render();
  } catch (err) {
    state = null;
    setError(describe(err));
  }
}

async function pick(position: number, choice: string | null) {
  if (!client || !state) {
    return;
  }
  try {
    const response = await client.applyChoice(state.sessionId, position, choice, state.version);
    state = afterPick(state, position, choice, response);
    render();
  } catch (err) {
    setError(describe(err));
  }
}

async function undo() {
  if (!client || !state) {
    return;
  }
  const entry = peekUndo(state);
  if (!entry) {
    return;
  }
  try {
    const response = await client.applyChoice(
      state.sessionId,
      entry.position,
      entry.previous,
      state.version,
    );
    state = afterUndo(state, response);
    render();
  } catch (err) {
    setError(describe(err));
  }
}

async function exportText() {
  if (!client || !state) {
    return;
  }
  try {
    const text = await client.exportText(state.sessionId);
    const blob = new Blob([text], { type: "text/plain;charset=utf-8" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "depolarized.txt";
    link.click();
    URL.revokeObjectURL(link.href);
  } catch (err) {
    setError(describe(err));
  }
}

function onBodyClick(event: Event) {
  const target = event.target as HTMLElement;
  const span = target.closest<HTMLElement>("span.polar");
  if (span && span.dataset.position) {
    openPicker = Number(span.dataset.position);
    render();
    return;
  }
  const pickButton = target.closest<HTMLElement>("button.pick");
  if (pickButton && pickButton.dataset.position) {
    const position = Number(pickButton.dataset.position);
    const choice = pickButton.classList.contains("keep") ? null : (pickButton.dataset.choice ?? null);
    void pick(position, choice);
    return;
  }
  if (target.closest("#undo")) {
    void undo();
  }
}

export function boot() {
  el("load").addEventListener("click", () => void load());
  el("export").addEventListener("click", () => void exportText());
  document.body.addEventListener("click", onBodyClick);
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
