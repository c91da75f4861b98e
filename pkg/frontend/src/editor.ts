import { Backend, RenderRequest } from './api';
import {
  ALL_CONCEPTS,
  ConceptName,
  ConceptParams,
  PairConcept,
  RenderMode,
  ScalarConcept,
  isPairConcept,
  neutralParams,
} from './types';

export interface PreviewUpdate {
  blob: Blob;
  seq: number;
}

/**
 * Editor model: preset + per-concept toggles and overrides + mode.
 *
 * Every change schedules a debounced server render; responses carry a
 * sequence number and a stale response can never overwrite a newer preview.
 * The preview is always the exact bytes the server returned - no pixel math
 * happens on the client.
 */
export class EditorCore {
  static readonly DEBOUNCE_MS = 250; // contract: <= 300 ms

  presetName: string | null = null;
  mode: RenderMode = 'absolute';
  enabled: Record<ConceptName, boolean>;
  overrides: ConceptParams = neutralParams();
  content: Blob | null = null;
  preview: Blob | null = null;

  onPreview: (update: PreviewUpdate) => void = () => {};
  onError: (message: string) => void = () => {};

  private seq = 0;
  private appliedSeq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly backend: Backend) {
    this.enabled = Object.fromEntries(ALL_CONCEPTS.map((c) => [c, true])) as Record<
      ConceptName,
      boolean
    >;
  }

  setContent(blob: Blob): void {
    this.content = blob;
    this.scheduleRender();
  }

  selectPreset(name: string | null): void {
    this.presetName = name;
    // toggles default to all-on when a preset lands
    for (const concept of ALL_CONCEPTS) this.enabled[concept] = true;
    this.overrides = neutralParams();
    this.scheduleRender();
  }

  setMode(mode: RenderMode): void {
    this.mode = mode;
    this.scheduleRender();
  }

  toggle(concept: ConceptName, on: boolean): void {
    this.enabled[concept] = on;
    this.scheduleRender();
  }

  setScalar(concept: ScalarConcept, value: number): void {
    this.overrides[concept] = value;
    this.scheduleRender();
  }

  setPair(concept: PairConcept, strength: number, hue: number): void {
    this.overrides[concept] = { strength, hue };
    this.scheduleRender();
  }

  mask(): ConceptName[] {
    return ALL_CONCEPTS.filter((c) => this.enabled[c]);
  }

  /** Parameters sent with the render: preset overridden by moved sliders. */
  overridePayload(): Record<string, unknown> {
    const payload: Record<string, unknown> = {};
    for (const concept of ALL_CONCEPTS) {
      const value = this.overrides[concept];
      if (isPairConcept(concept)) {
        const pair = value as { strength: number; hue: number };
        if (pair.strength !== 0 || pair.hue !== 0) payload[concept] = pair;
      } else if (value !== 0) {
        payload[concept] = value;
      }
    }
    return payload;
  }

  renderRequest(): RenderRequest {
    if (!this.content) throw new Error('no content image loaded');
    const request: RenderRequest = {
      content: this.content,
      mode: this.mode,
      concepts: this.mask(),
    };
    const overrides = this.overridePayload();
    if (this.presetName) {
      request.presetName = this.presetName;
      if (Object.keys(overrides).length > 0) request.overrides = overrides;
    } else {
      request.params = overrides;
    }
    return request;
  }

  scheduleRender(): void {
    if (!this.content) return;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.renderNow();
    }, EditorCore.DEBOUNCE_MS);
  }

  /** Issue the render immediately; stale responses are discarded by seq. */
  async renderNow(): Promise<void> {
    if (!this.content) return;
    const seq = ++this.seq;
    let blob: Blob;
    try {
      blob = await this.backend.render(this.renderRequest());
    } catch (error) {
      this.onError(error instanceof Error ? error.message : String(error));
      return;
    }
    if (seq <= this.appliedSeq) return; // an out-of-order (stale) response
    this.appliedSeq = seq;
    this.preview = blob;
    this.onPreview({ blob, seq });
  }
}

/** Poll a fit job once per second until it finishes. */
export async function watchFit(
  backend: Backend,
  jobId: string,
  onProgress: (iteration: number, loss: number) => void,
  intervalMs = 1000,
): Promise<import('./types').FitJobView> {
  for (;;) {
    const view = await backend.fitStatus(jobId);
    if (view.progress) onProgress(view.progress.iteration, view.progress.loss);
    if (view.state === 'done' || view.state === 'failed') return view;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
