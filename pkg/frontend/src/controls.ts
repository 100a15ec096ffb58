/** Control panel markup and formatting helpers.  Rendering returns strings;
 * main.ts owns the actual DOM events. */

import type { EmotionCatalog, HistoryRecord, MixRequestDraft } from './types.js';

export function renderControls(catalog: EmotionCatalog,
                               draft: MixRequestDraft): string {
  const emotionOptions = (selected?: string) => catalog.primaries
    .map((e) => `<option value="${e}"${e === selected ? ' selected' : ''}>${e}</option>`)
    .join('');
  const alphas = catalog.alpha_levels;
  return `
<div class="controls">
  <label>mode
    <select id="mode">
      <option value="primary"${draft.mode === 'primary' ? ' selected' : ''}>primary</option>
      <option value="secondary"${draft.mode === 'secondary' ? ' selected' : ''}>secondary (pair)</option>
    </select>
  </label>
  <label class="primary-only">emotion
    <select id="emotion">${emotionOptions(draft.emotion ?? 'joy')}</select>
  </label>
  <label class="secondary-only">first
    <select id="pair1">${emotionOptions(draft.pair?.[0])}</select>
  </label>
  <label class="secondary-only">second
    <select id="pair2">${emotionOptions(draft.pair?.[1])}</select>
  </label>
  <label>intensity &alpha; <span id="alpha-value">${draft.alpha.toFixed(2)}</span>
    <input id="alpha" type="range" min="${alphas.low}" max="2.5" step="0.05"
           value="${draft.alpha}"/>
    <span class="hint">low ${alphas.low} / medium ${alphas.medium} / high ${alphas.high}</span>
  </label>
  <label class="secondary-only">blend &beta; <span id="beta-value">${draft.beta.toFixed(2)}</span>
    <input id="beta" type="range" min="0" max="1" step="0.05" value="${draft.beta}"/>
    <span class="hint" id="beta-note"></span>
  </label>
  <label>polarity
    <input id="negate" type="checkbox"${draft.negate ? ' checked' : ''}/> negate
  </label>
  <label>seed
    <input id="seed" type="number" value="${draft.seed}"/>
    <button id="reroll" type="button" title="new random seed">&#x21bb;</button>
  </label>
  <button id="submit" type="button">sample</button>
  <span id="inline-error" class="error" role="alert"></span>
</div>`;
}

/** Annotation shown when the blend weight leaves the equal fusion. */
export function betaNote(beta: number): string {
  return beta === 0.5 ? '' : 'extension beyond the equal-precision fusion';
}

export function describeRecord(record: HistoryRecord): string {
  const stats = record.stats.stats;
  const fields = [
    `name: ${record.mix.name}`,
    `verdict: ${record.verdict.label}`,
    `alpha: ${record.mix.alpha}`,
    `seed: ${record.mix.seed}`,
    `pitch: ${stats.pitch_mean_hz.toFixed(1)} Hz`,
    `energy: ${stats.energy_mean.toFixed(3)}`,
  ];
  if (record.mix.extension) fields.push('beta extension');
  return fields.join(' | ');
}

export function renderHistoryPanel(history: HistoryRecord[]): string {
  if (!history.length) return '<div class="history empty">no samples yet</div>';
  const items = [...history].reverse().slice(0, 8)
    .map((record) => `<li>${describeRecord(record)}</li>`)
    .join('');
  return `<div class="history"><ol reversed>${items}</ol></div>`;
}
