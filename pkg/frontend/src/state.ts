// Editor view state: a pure mirror of server responses plus the undo stack.
// Reducers return new state objects; nothing here computes scores.

import type { ApplyResponse, SessionPayload, Scores, Suggestion } from "./api.js";

export type Choice = string | null;

export interface UndoEntry {
  position: number;
  previous: Choice; // the choice to resend to undo the pick
}

export interface ViewState {
  sessionId: string;
  version: number;
  topic: string;
  ideology: string;
  originalTokens: string[];
  tokens: string[];
  suggestions: Suggestion[];
  scores: Scores;
  assignments: Record<number, string>;
  undoStack: UndoEntry[];
  banner: string | null;
}

export function fromSession(payload: SessionPayload): ViewState {
  const assignments: Record<number, string> = {};
  for (const rep of payload.replacements) {
    assignments[rep.position] = rep.new;
  }
  return {
    sessionId: payload.session_id,
    version: payload.version,
    topic: payload.topic,
    ideology: payload.ideology,
    originalTokens: [...payload.original_tokens],
    tokens: [...payload.tokens],
    suggestions: payload.suggestions,
    scores: payload.scores,
    assignments,
    undoStack: [],
    banner: payload.suggestions.length === 0 ? "nothing to depolarize" : null,
  };
}

function withChoice(state: ViewState, position: number, choice: Choice, response: ApplyResponse): ViewState {
  const tokens = [...state.tokens];
  const original = state.originalTokens[position];
  tokens[position] = choice === null ? original : choice;
  const assignments = { ...state.assignments };
  if (choice === null) {
    delete assignments[position];
  } else {
    assignments[position] = choice;
  }
  return {
    ...state,
    tokens,
    assignments,
    version: response.version,
    scores: response.scores,
  };
}

export function afterPick(
  state: ViewState,
  position: number,
  choice: Choice,
  response: ApplyResponse,
): ViewState {
  const previous: Choice = state.assignments[position] ?? null;
  const next = withChoice(state, position, choice, response);
  next.undoStack = [...state.undoStack, { position, previous }];
  return next;
}

/** The apply call that reverses the latest pick, or null when nothing to undo. */
export function peekUndo(state: ViewState): UndoEntry | null {
  return state.undoStack.length ? state.undoStack[state.undoStack.length - 1] : null;
}

export function afterUndo(state: ViewState, response: ApplyResponse): ViewState {
  const entry = peekUndo(state);
  if (!entry) {
    return state;
  }
  const next = withChoice(state, entry.position, entry.previous, response);
  next.undoStack = state.undoStack.slice(0, -1);
  return next;
}

export function undoDepth(state: ViewState): number {
  return state.undoStack.length;
}

export function currentChoice(state: ViewState, position: number): Choice {
  return state.assignments[position] ?? null;
}

/** Highlighted positions with their z-scores, straight from the server. */
export function polarSpans(state: ViewState): { position: number; word: string; z: number }[] {
  return state.suggestions.map((s) => ({ position: s.position, word: s.word, z: s.z }));
}
