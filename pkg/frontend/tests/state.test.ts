import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  afterPick,
  afterUndo,
  fromSession,
  peekUndo,
  polarSpans,
  undoDepth,
} from "../src/state.js";
import { FakeService, fakeFetch, TOKENS } from "./fixtures.js";

function loadedState(service = new FakeService()) {
  const payload = service.createSession(TOKENS.join(" "));
  return { service, state: fromSession(payload) };
}

describe("fromSession", () => {
  it("mirrors the server payload", () => {
    const { state } = loadedState();
    expect(state.tokens).toEqual(TOKENS);
    expect(state.originalTokens).toEqual(TOKENS);
    expect(state.banner).toBeNull();
    expect(undoDepth(state)).toBe(0);
    expect(polarSpans(state).map((s) => s.position)).toEqual([1, 4]);
  });

  it("shows the no-op banner when nothing is polar", () => {
    const service = new FakeService();
    const payload = service.createSession("calm words only here");
    const state = fromSession(payload);
    expect(state.banner).toBe("nothing to depolarize");
    expect(state.suggestions).toEqual([]);
  });
});

describe("pick and undo", () => {
  it("applies a choice and mirrors server scores", () => {
    const { service, state } = loadedState();
    const response = service.apply(state.sessionId, 1, "firm", state.version);
    const next = afterPick(state, 1, "firm", response);
    expect(next.tokens[1]).toBe("firm");
    expect(next.version).toBe(1);
    expect(next.scores).toEqual(response.scores);
    expect(undoDepth(next)).toBe(1);
    // the view never recomputes polarity locally: values are the server's
    expect(next.scores.polarity).toBeLessThan(state.scores.polarity);
  });

  it("keep on an untouched position is a visual no-op", () => {
    const { service, state } = loadedState();
    const response = service.apply(state.sessionId, 1, null, state.version);
    const next = afterPick(state, 1, null, response);
    expect(next.tokens).toEqual(state.tokens);
    expect(next.scores.polarity).toBe(state.scores.polarity);
  });

  it("pick then undo restores the pre-pick view", () => {
    const { service, state } = loadedState();
    const picked = afterPick(state, 1, "firm", service.apply(state.sessionId, 1, "firm", 0));
    const entry = peekUndo(picked);
    expect(entry).toEqual({ position: 1, previous: null });
    const undone = afterUndo(
      picked,
      service.apply(state.sessionId, entry!.position, entry!.previous, picked.version),
    );
    expect(undone.tokens).toEqual(state.tokens);
    expect(undone.scores).toEqual(state.scores);
    expect(undoDepth(undone)).toBe(0);
  });

  it("undo depth always equals the number of applied choices", () => {
    const { service, state } = loadedState();
    let current = state;
    const picks: Array<[number, string | null]> = [
      [1, "firm"],
      [4, "firm"],
      [1, "stern"],
    ];
    for (const [position, choice] of picks) {
      const response = service.apply(current.sessionId, position, choice, current.version);
      current = afterPick(current, position, choice, response);
    }
    expect(undoDepth(current)).toBe(3);
    expect(current.tokens[1]).toBe("stern");
    // undo the re-pick of position 1: back to "firm"
    let entry = peekUndo(current)!;
    expect(entry.previous).toBe("firm");
    current = afterUndo(current, service.apply(current.sessionId, entry.position, entry.previous, current.version));
    expect(current.tokens[1]).toBe("firm");
    expect(undoDepth(current)).toBe(2);
  });
});

describe("client plumbing", () => {
  it("round-trips through the fetch-compatible transport", async () => {
    const service = new FakeService();
    const client = new ApiClient("http://fake", fakeFetch(service));
    const payload = await client.createSession(TOKENS.join(" "), "energy", "liberal");
    const state = fromSession(payload);
    const response = await client.applyChoice(state.sessionId, 1, "firm", state.version);
    expect(response.version).toBe(1);
    const exported = await client.exportText(state.sessionId);
    expect(exported).toBe("the firm rally drew harsh crowds");
  });

  it("maps error statuses", async () => {
    const service = new FakeService();
    const client = new ApiClient("http://fake", fakeFetch(service));
    await expect(client.exportText("missing")).rejects.toMatchObject({ status: 404 });
    const payload = await client.createSession(TOKENS.join(" "), "energy", "liberal");
    await client.applyChoice(payload.session_id, 1, "firm", 0);
    await expect(client.applyChoice(payload.session_id, 1, "stern", 0)).rejects.toMatchObject({
      status: 409,
    });
  });
});
