// HTML-string renderers. Kept DOM-free so they are trivially testable; the
// entry point assigns the strings to innerHTML and wires events by
// delegation. Candidate lists render in the server's order, never
// re-sorted client-side.

import type { Suggestion } from "./api.js";
import type { ViewState } from "./state.js";
import { currentChoice } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** 1..3; redundant encoding (color depth + underline weight) per tier. */
export function intensityTier(z: number, maxZ: number): number {
  if (maxZ <= 0) {
    return 1;
  }
  const ratio = z / maxZ;
  if (ratio > 2 / 3) {
    return 3;
  }
  return ratio > 1 / 3 ? 2 : 1;
}

export function renderTokens(state: ViewState): string {
  const byPosition = new Map(state.suggestions.map((s) => [s.position, s]));
  const maxZ = Math.max(0, ...state.suggestions.map((s) => s.z));
  const parts: string[] = [];
  state.tokens.forEach((token, position) => {
    const suggestion = byPosition.get(position);
    if (!suggestion) {
      parts.push(escapeHtml(token));
      return;
    }
    const tier = intensityTier(suggestion.z, maxZ);
    const replaced = currentChoice(state, position) !== null ? " replaced" : "";
    parts.push(
      `<span class="polar tier-${tier}${replaced}" data-position="${position}" ` +
        `title="z=${suggestion.z.toFixed(2)}">${escapeHtml(token)}</span>`,
    );
  });
  return parts.join(" ");
}

export function renderGauge(state: ViewState): string {
  const before = state.scores.polarity_before;
  const current = state.scores.polarity;
  const pct = before > 0 ? Math.max(0, Math.min(100, (current / before) * 100)) : 0;
  return (
    `<div class="gauge" role="meter" aria-valuemin="0" aria-valuemax="${before.toFixed(3)}" ` +
    `aria-valuenow="${current.toFixed(3)}">` +
    `<div class="gauge-fill" style="width:${pct.toFixed(1)}%"></div>` +
    `<div class="gauge-label">polarity ${current.toFixed(3)} / ${before.toFixed(3)}</div>` +
    `</div>`
  );
}

export function renderPicker(state: ViewState, suggestion: Suggestion): string {
  const chosen = currentChoice(state, suggestion.position);
  const rows = suggestion.candidates
    .map((candidate) => {
      const deltaPolarity = candidate.polarity_delta;
      const deltaFluency = candidate.fluency - state.scores.fluency;
      const active = chosen === candidate.word ? " active" : "";
      return (
        `<button class="pick${active}" data-position="${suggestion.position}" ` +
        `data-choice="${escapeHtml(candidate.word)}">` +
        `<span class="word">${escapeHtml(candidate.word)}</span>` +
        `<span class="delta">&Delta;polarity ${formatDelta(deltaPolarity)}</span>` +
        `<span class="delta">&Delta;fluency ${formatDelta(deltaFluency)}</span>` +
        `</button>`
      );
    })
    .join("");
  const keepActive = chosen === null ? " active" : "";
  return (
    `<div class="picker" data-position="${suggestion.position}">` +
    `<div class="picker-title">${escapeHtml(suggestion.word)} (z=${suggestion.z.toFixed(2)})</div>` +
    `<button class="pick keep${keepActive}" data-position="${suggestion.position}">keep original</button>` +
    rows +
    `</div>`
  );
}

export function formatDelta(value: number): string {
  const rounded = value.toFixed(3);
  return value > 0 ? `+${rounded}` : rounded;
}

export function renderBanner(state: ViewState): string {
  if (!state.banner) {
    return "";
  }
  return `<div class="banner">${escapeHtml(state.banner)}</div>`;
}

export function renderUndo(state: ViewState): string {
  const depth = state.undoStack.length;
  const disabled = depth === 0 ? " disabled" : "";
  return `<button id="undo"${disabled}>undo (${depth})</button>`;
}
