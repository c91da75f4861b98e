export const SCALAR_CONCEPTS = [
  'sharpness',
  'vignetting',
  'saturation',
  'exposure',
  'contrast',
] as const;

export const PAIR_CONCEPTS = ['tint', 'highlight', 'shadow'] as const;

export const ALL_CONCEPTS = [
  'sharpness',
  'vignetting',
  'saturation',
  'tint',
  'exposure',
  'contrast',
  'highlight',
  'shadow',
] as const;

export type ScalarConcept = (typeof SCALAR_CONCEPTS)[number];
export type PairConcept = (typeof PAIR_CONCEPTS)[number];
export type ConceptName = (typeof ALL_CONCEPTS)[number];

export interface PairValue {
  strength: number;
  hue: number;
}

export interface ConceptParams {
  sharpness: number;
  vignetting: number;
  saturation: number;
  exposure: number;
  contrast: number;
  tint: PairValue;
  highlight: PairValue;
  shadow: PairValue;
}

export interface PresetDocument {
  version: number;
  name: string;
  created_at: string;
  params: ConceptParams;
  thresholds: { tau_highlight: number; tau_shadow: number; sharpness_kernel: number };
  fit_meta: Record<string, unknown> | null;
}

export interface PresetListEntry {
  name: string;
  created_at: string;
  fitted: boolean;
}

export interface FitJobView {
  id: string;
  state: 'queued' | 'running' | 'done' | 'failed';
  progress: { iteration: number; loss: number } | null;
  result: PresetDocument | null;
  error: string | null;
}

export type RenderMode = 'absolute' | 'relative';

export function neutralParams(): ConceptParams {
  return {
    sharpness: 0,
    vignetting: 0,
    saturation: 0,
    exposure: 0,
    contrast: 0,
    tint: { strength: 0, hue: 0 },
    highlight: { strength: 0, hue: 0 },
    shadow: { strength: 0, hue: 0 },
  };
}

export function isPairConcept(name: ConceptName): name is PairConcept {
  return (PAIR_CONCEPTS as readonly string[]).includes(name);
}
