/**
 * Console view state and its pure reducers.
 *
 * The feed list is append-only: message records must arrive in strictly
 * increasing seq order and duplicates are discarded, so replaying the same
 * transcript always rebuilds the identical state. All reducers return fresh
 * state objects; nothing here touches the network or the DOM.
 */

import { decodeLine, FeedRecord } from "./wire.js";

export interface ComposerDraft {
  target: string;
  action: string;
}

export interface RosterEntry {
  id: string;
  role: string;
}

export interface SituationSummary {
  crisis_instance: string;
  crisis_type: string;
  severity: number;
  context: Record<string, unknown>;
}

export interface StateSnapshot {
  phase: string;
  tick: number;
  finished: boolean;
  awaiting_human: boolean;
  roster: RosterEntry[];
  situation: SituationSummary | null;
}

export interface ViewState {
  session: string | null;
  banner: string | null;
  events: FeedRecord[];
  maxSeq: number;
  snapshot: StateSnapshot | null;
  composer: ComposerDraft;
}

export function initialState(): ViewState {
  return {
    session: null,
    banner: null,
    events: [],
    maxSeq: 0,
    snapshot: null,
    composer: { target: "", action: "" },
  };
}

export function withSession(state: ViewState, token: string): ViewState {
  return { ...state, session: token, banner: null };
}

export function withBanner(state: ViewState, banner: string): ViewState {
  return { ...state, banner };
}

export function withSnapshot(state: ViewState, snapshot: StateSnapshot): ViewState {
  return { ...state, snapshot };
}

export function withComposer(state: ViewState, composer: ComposerDraft): ViewState {
  return { ...state, composer };
}

export function clearComposer(state: ViewState): ViewState {
  return { ...state, composer: { target: "", action: "" } };
}

/** Apply one stream line; duplicate seqs are dropped, failures kept inline. */
export function applyLine(state: ViewState, line: string): ViewState {
  const record = decodeLine(line);
  if (record.kind === "message") {
    if (record.seq <= state.maxSeq) {
      return state; // duplicate or stale replay line
    }
    return { ...state, events: [...state.events, record], maxSeq: record.seq };
  }
  return { ...state, events: [...state.events, record] };
}

export function applyTranscript(state: ViewState, lines: string[]): ViewState {
  return lines.reduce(applyLine, state);
}

/** Composer is usable only in the phases where the gateway accepts input. */
export function composerEnabled(state: ViewState): boolean {
  if (state.session === null || state.snapshot === null) {
    return false;
  }
  return state.snapshot.phase === "Decision" || state.snapshot.phase === "Monitoring";
}
