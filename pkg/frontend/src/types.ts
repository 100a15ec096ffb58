/** JSON contract of the daisy HTTP service, mirrored field for field. */

export type Emotion = 'joy' | 'sadness' | 'anger' | 'surprise';

export const EMOTIONS: Emotion[] = ['joy', 'sadness', 'anger', 'surprise'];

export interface SecondaryEntry {
  name: string;
  pair: string[];
}

export interface EmotionCatalog {
  seed: null;
  primaries: Emotion[];
  secondaries: SecondaryEntry[];
  alpha_levels: { low: number; medium: number; high: number };
  embed_dim: number;
  n_components: number;
}

export interface ProjectionPoint {
  x: number;
  y: number;
  emotion: string;
  speaker: string;
}

export interface ProjectionResponse {
  seed: null;
  points: ProjectionPoint[];
  class_means: Record<string, number[]>;
  reference_stats: Record<string, number>;
}

export type MixMode = 'primary' | 'secondary' | 'transfer';

export interface MixRequestDraft {
  mode: MixMode;
  emotion?: Emotion;
  pair?: [Emotion, Emotion];
  beta: number;
  alpha: number;
  negate: boolean;
  seed: number;
}

export interface MixResponse {
  seed: number;
  mode: string;
  name: string;
  pair: string[] | null;
  beta: number;
  alpha: number;
  negate: boolean;
  extension: boolean;
  self_mixture: boolean;
  w: number[];
  embedding: number[];
}

export interface ClassifyResponse {
  seed: number | null;
  probabilities: Record<string, number>;
  label: string;
}

export interface StatsResponse {
  seed: number | null;
  stats: Record<string, number>;
}

/** One completed submit: the draft plus the three service responses. */
export interface HistoryRecord {
  seq: number;
  request: MixRequestDraft;
  mix: MixResponse;
  verdict: ClassifyResponse;
  stats: StatsResponse;
}
