/** Console state: the current draft, a bounded response history, and the
 * request sequencing that discards stale responses.  Pure functions only,
 * so the whole lifecycle is unit-testable without a DOM. */

import type { HistoryRecord, MixRequestDraft, ProjectionResponse } from './types.js';

export const HISTORY_LIMIT = 50;

export interface ConsoleState {
  draft: MixRequestDraft;
  history: HistoryRecord[];
  projection: ProjectionResponse | null;
  nextSeq: number;
  inFlightSeq: number | null;
}

export function initialState(): ConsoleState {
  return {
    draft: {
      mode: 'secondary',
      pair: ['joy', 'sadness'],
      beta: 0.5,
      alpha: 1.0,
      negate: false,
      seed: freshSeed(),
    },
    history: [],
    projection: null,
    nextSeq: 1,
    inFlightSeq: null,
  };
}

/** Client-generated seeds are explicit and displayed, so any view can be
 * reproduced through the CLI with the same numbers. */
export function freshSeed(): number {
  return Math.floor(Math.random() * 2 ** 31);
}

export function validateDraft(draft: MixRequestDraft): string | null {
  if (!Number.isFinite(draft.alpha) || draft.alpha <= 0) {
    return 'intensity must be a positive number';
  }
  if (draft.beta < 0 || draft.beta > 1) return 'blend weight must be in [0, 1]';
  if (!Number.isInteger(draft.seed)) return 'seed must be an integer';
  if (draft.mode === 'primary' && !draft.emotion) return 'pick an emotion';
  if (draft.mode === 'secondary' && !draft.pair) return 'pick an emotion pair';
  return null;
}

/** Assign a sequence number and mark it in flight (superseding any other). */
export function beginSubmit(state: ConsoleState): [ConsoleState, number] {
  const seq = state.nextSeq;
  return [{ ...state, nextSeq: seq + 1, inFlightSeq: seq }, seq];
}

/** Append a finished record unless a newer submission superseded it. */
export function acceptResult(state: ConsoleState, record: HistoryRecord): ConsoleState {
  if (record.seq !== state.inFlightSeq) return state;
  const history = [...state.history, record].slice(-HISTORY_LIMIT);
  return { ...state, history, inFlightSeq: null };
}

export function failSubmit(state: ConsoleState, seq: number): ConsoleState {
  if (seq !== state.inFlightSeq) return state;
  return { ...state, inFlightSeq: null };
}

export function setProjection(state: ConsoleState,
                              projection: ProjectionResponse): ConsoleState {
  return { ...state, projection };
}

export function updateDraft(state: ConsoleState,
                            patch: Partial<MixRequestDraft>): ConsoleState {
  return { ...state, draft: { ...state.draft, ...patch } };
}

/** Marker position of a record in the 2-D map: its first two weights. */
export function markerPosition(record: HistoryRecord): [number, number] {
  return [record.mix.w[0] ?? 0, record.mix.w[1] ?? 0];
}
