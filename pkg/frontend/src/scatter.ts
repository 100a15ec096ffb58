/** SVG renderer for the projection background plus sampled-point overlay.
 * Returns markup strings; the caller mounts them. */

import { markerPosition } from './state.js';
import type { HistoryRecord, ProjectionResponse } from './types.js';

export const EMOTION_COLORS: Record<string, string> = {
  joy: '#e6a817',
  sadness: '#3b6fb6',
  anger: '#c13f3f',
  surprise: '#4caf7d',
};

export interface Extent {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

export function computeExtent(projection: ProjectionResponse,
                              history: HistoryRecord[]): Extent {
  const xs = projection.points.map((p) => p.x);
  const ys = projection.points.map((p) => p.y);
  for (const record of history) {
    const [x, y] = markerPosition(record);
    xs.push(x);
    ys.push(y);
  }
  const pad = (lo: number, hi: number) => Math.max((hi - lo) * 0.05, 1e-9);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  return {
    minX: minX - pad(minX, maxX),
    maxX: maxX + pad(minX, maxX),
    minY: minY - pad(minY, maxY),
    maxY: maxY + pad(minY, maxY),
  };
}

function scaler(extent: Extent, width: number, height: number, margin: number) {
  const sx = (x: number) =>
    margin + ((x - extent.minX) / (extent.maxX - extent.minX)) * (width - 2 * margin);
  const sy = (y: number) =>
    height - margin - ((y - extent.minY) / (extent.maxY - extent.minY)) * (height - 2 * margin);
  return { sx, sy };
}

/** Background corpus points colored by emotion, class means ringed in black,
 * history markers joined by a fading trail. */
export function renderProjection(projection: ProjectionResponse,
                                 history: HistoryRecord[],
                                 width = 640, height = 480): string {
  const margin = 30;
  const extent = computeExtent(projection, history);
  const { sx, sy } = scaler(extent, width, height, margin);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  for (const point of projection.points) {
    const color = EMOTION_COLORS[point.emotion] ?? '#999999';
    parts.push(`<circle class="bg-point" cx="${sx(point.x).toFixed(1)}" ` +
      `cy="${sy(point.y).toFixed(1)}" r="3" fill="${color}" fill-opacity="0.35"/>`);
  }
  for (const [emotion, mean] of Object.entries(projection.class_means)) {
    const color = EMOTION_COLORS[emotion] ?? '#555555';
    parts.push(`<circle class="class-mean" cx="${sx(mean[0]).toFixed(1)}" ` +
      `cy="${sy(mean[1]).toFixed(1)}" r="8" fill="${color}" stroke="#111" stroke-width="2"/>`);
    parts.push(`<text x="${(sx(mean[0]) + 11).toFixed(1)}" ` +
      `y="${(sy(mean[1]) + 4).toFixed(1)}" font-size="12" font-family="sans-serif">${emotion}</text>`);
  }
  if (history.length > 1) {
    const trail = history
      .map((record) => {
        const [x, y] = markerPosition(record);
        return `${sx(x).toFixed(1)},${sy(y).toFixed(1)}`;
      })
      .join(' ');
    parts.push(`<polyline class="trail" points="${trail}" fill="none" ` +
      `stroke="#333" stroke-opacity="0.4" stroke-width="1.5"/>`);
  }
  history.forEach((record, index) => {
    const [x, y] = markerPosition(record);
    const color = EMOTION_COLORS[record.verdict.label] ?? '#333333';
    const latest = index === history.length - 1;
    parts.push(`<circle class="sample-marker" cx="${sx(x).toFixed(1)}" ` +
      `cy="${sy(y).toFixed(1)}" r="${latest ? 7 : 4.5}" fill="${color}" ` +
      `stroke="#111" stroke-width="${latest ? 2.5 : 1}" ` +
      `fill-opacity="${latest ? 0.95 : 0.6}"><title>${record.mix.name} ` +
      `(seed ${record.mix.seed})</title></circle>`);
  });
  parts.push('</svg>');
  return parts.join('\n');
}
