/** Wires the console together: one immutable state object, re-rendered
 * wholesale after every accepted response. */

import { ApiClient, ApiError } from './api.js';
import { renderBars, renderPlaceholder, statsBars } from './bars.js';
import { betaNote, renderControls, renderHistoryPanel } from './controls.js';
import { renderProjection } from './scatter.js';
import {
  acceptResult, beginSubmit, ConsoleState, failSubmit, freshSeed,
  initialState, setProjection, updateDraft, validateDraft,
} from './state.js';
import type { EmotionCatalog, HistoryRecord } from './types.js';

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get('api') ?? 'http://127.0.0.1:8765');

let state: ConsoleState = initialState();
let catalog: EmotionCatalog | null = null;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function renderAll(): void {
  if (!catalog || !state.projection) return;
  el('scatter').innerHTML = renderProjection(state.projection, state.history);
  el('history').innerHTML = renderHistoryPanel(state.history);
  const latest = state.history[state.history.length - 1];
  el('stats').innerHTML = latest
    ? renderBars(statsBars(latest.stats.stats, state.projection.reference_stats))
    : renderPlaceholder();
  el<HTMLButtonElement>('submit').disabled = state.inFlightSeq !== null;
}

function readDraft(): void {
  const mode = el<HTMLSelectElement>('mode').value as 'primary' | 'secondary';
  state = updateDraft(state, {
    mode,
    emotion: el<HTMLSelectElement>('emotion').value as never,
    pair: [el<HTMLSelectElement>('pair1').value,
           el<HTMLSelectElement>('pair2').value] as never,
    alpha: Number(el<HTMLInputElement>('alpha').value),
    beta: Number(el<HTMLInputElement>('beta').value),
    negate: el<HTMLInputElement>('negate').checked,
    seed: Number(el<HTMLInputElement>('seed').value),
  });
  el('alpha-value').textContent = state.draft.alpha.toFixed(2);
  el('beta-value').textContent = state.draft.beta.toFixed(2);
  el('beta-note').textContent = betaNote(state.draft.beta);
  document.body.classList.toggle('mode-primary', mode === 'primary');
}

async function submit(): Promise<void> {
  readDraft();
  const error = validateDraft(state.draft);
  const errorBox = el('inline-error');
  errorBox.textContent = error ?? '';
  if (error) return;
  const draft = { ...state.draft };
  const [next, seq] = beginSubmit(state);
  state = next;
  renderAll();
  try {
    const mix = await api.mix(draft);
    const verdict = await api.classify(mix.embedding, draft.seed);
    const stats = await api.stats(mix.embedding, draft.seed);
    const record: HistoryRecord = { seq, request: draft, mix, verdict, stats };
    state = acceptResult(state, record);
  } catch (err) {
    state = failSubmit(state, seq);
    errorBox.textContent = err instanceof ApiError
      ? `service rejected the request (${err.status}): ${err.message}`
      : `service unreachable: ${String(err)}`;
  }
  renderAll();
}

async function boot(): Promise<void> {
  const banner = el('banner');
  try {
    catalog = await api.emotions();
    state = setProjection(state, await api.projection());
  } catch (err) {
    banner.textContent = `cannot reach the service at ${api.base}: ${String(err)}`;
    banner.classList.add('visible');
    return;
  }
  banner.classList.remove('visible');
  el('controls-mount').innerHTML = renderControls(catalog, state.draft);
  for (const id of ['mode', 'emotion', 'pair1', 'pair2', 'alpha', 'beta',
                    'negate', 'seed']) {
    el(id).addEventListener('input', readDraft);
  }
  el('reroll').addEventListener('click', () => {
    el<HTMLInputElement>('seed').value = String(freshSeed());
    readDraft();
  });
  el('submit').addEventListener('click', () => { void submit(); });
  readDraft();
  renderAll();
}

void boot();
