import { readFileSync } from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

import type { HistoryRecord, MixRequestDraft, MixResponse } from '../src/types.js';

export function apiBase(): string {
  const here = path.dirname(fileURLToPath(import.meta.url));
  return readFileSync(path.resolve(here, '..', '.artifacts', 'api_base'),
                      'utf-8').trim();
}

export function draft(overrides: Partial<MixRequestDraft> = {}): MixRequestDraft {
  return {
    mode: 'secondary',
    pair: ['joy', 'sadness'],
    beta: 0.5,
    alpha: 1.0,
    negate: false,
    seed: 1234,
    ...overrides,
  };
}

export function record(seq: number, w: number[], name = 'bittersweetness',
                       label = 'joy'): HistoryRecord {
  const mix: MixResponse = {
    seed: seq, mode: 'secondary', name, pair: ['joy', 'sadness'], beta: 0.5,
    alpha: 1.0, negate: false, extension: false, self_mixture: false,
    w, embedding: [],
  };
  return {
    seq,
    request: draft({ seed: seq }),
    mix,
    verdict: { seed: seq, probabilities: { joy: 1, sadness: 0, anger: 0, surprise: 0 }, label },
    stats: {
      seed: seq,
      stats: {
        pitch_mean_hz: 200, pitch_std_hz: 20, pitch_slope_hz_per_frame: 0.1,
        energy_mean: 0.2, energy_std: 0.05, voiced_fraction: 0.8,
      },
    },
  };
}
