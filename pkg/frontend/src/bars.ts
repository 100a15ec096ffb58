/** Comparative prosody bars: the decoded statistics of the latest sample
 * against the corpus-average reference served by /projection.  The
 * reference bar is always rendered; pitch bars disappear when the sample
 * is predicted fully unvoiced. */

import type { StatsResponse } from './types.js';

export interface BarRow {
  key: string;
  label: string;
  value: number;
  reference: number;
  valuePct: number;      // bar width, reference pinned at 50%
  hidden: boolean;
}

const ROWS: Array<{ key: string; label: string; pitch: boolean }> = [
  { key: 'pitch_mean_hz', label: 'pitch mean (Hz)', pitch: true },
  { key: 'pitch_std_hz', label: 'pitch range (Hz)', pitch: true },
  { key: 'energy_mean', label: 'energy', pitch: false },
  { key: 'energy_std', label: 'energy spread', pitch: false },
  { key: 'voiced_fraction', label: 'voiced fraction', pitch: false },
];

export function statsBars(stats: StatsResponse['stats'],
                          reference: Record<string, number>): BarRow[] {
  const voiced = stats.voiced_fraction ?? 0;
  return ROWS.map(({ key, label, pitch }) => {
    const value = stats[key] ?? 0;
    const ref = reference[key] ?? 0;
    const scale = Math.abs(ref) > 1e-9 ? Math.abs(ref) * 2 : Math.max(Math.abs(value) * 2, 1e-9);
    return {
      key,
      label,
      value,
      reference: ref,
      valuePct: Math.min(Math.max((value / scale) * 100, 0), 100),
      hidden: pitch && voiced <= 0,
    };
  });
}

export function renderBars(rows: BarRow[]): string {
  const parts: string[] = ['<div class="stat-bars">'];
  for (const row of rows) {
    if (row.hidden) continue;
    parts.push(
      `<div class="stat-row" data-key="${row.key}">` +
        `<span class="stat-label">${row.label}</span>` +
        `<span class="stat-track">` +
        `<span class="stat-fill" style="width:${row.valuePct.toFixed(1)}%"></span>` +
        `<span class="stat-ref" style="left:50%" title="corpus average ` +
        `${row.reference.toPrecision(3)}"></span>` +
        `</span>` +
        `<span class="stat-value">${row.value.toPrecision(3)}</span>` +
      `</div>`);
  }
  parts.push('</div>');
  return parts.join('\n');
}

export function renderPlaceholder(): string {
  return '<div class="stat-bars placeholder">submit a mix to see decoded prosody</div>';
}
