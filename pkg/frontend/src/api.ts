/** Thin fetch client for the service; every value shown in the UI comes
 * from one of these responses. */

import type {
  ClassifyResponse, EmotionCatalog, MixRequestDraft, MixResponse,
  ProjectionResponse, StatsResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** Request body for POST /mix; only the fields the chosen mode needs. */
export function mixBody(draft: MixRequestDraft): Record<string, unknown> {
  const body: Record<string, unknown> = {
    mode: draft.mode,
    alpha: draft.alpha,
    negate: draft.negate,
    seed: draft.seed,
  };
  if (draft.mode === 'primary') body.emotion = draft.emotion;
  if (draft.mode === 'secondary') {
    body.pair = draft.pair;
    body.beta = draft.beta;
  }
  return body;
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  const text = await response.text();
  if (!response.ok) {
    let message = text;
    try {
      message = (JSON.parse(text) as { error?: string }).error ?? text;
    } catch {
      /* non-JSON error body; show it raw */
    }
    throw new ApiError(response.status, message);
  }
  return JSON.parse(text) as T;
}

export class ApiClient {
  constructor(readonly base: string) {}

  private async get<T>(path: string): Promise<T> {
    return parseOrThrow<T>(await fetch(`${this.base}${path}`));
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.base}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    return parseOrThrow<T>(response);
  }

  emotions(): Promise<EmotionCatalog> {
    return this.get('/emotions');
  }

  projection(): Promise<ProjectionResponse> {
    return this.get('/projection');
  }

  mix(draft: MixRequestDraft): Promise<MixResponse> {
    return this.post('/mix', mixBody(draft));
  }

  classify(embedding: number[], seed: number): Promise<ClassifyResponse> {
    return this.post('/classify', { embedding, seed });
  }

  stats(embedding: number[], seed: number): Promise<StatsResponse> {
    return this.post('/stats', { embedding, seed });
  }
}
