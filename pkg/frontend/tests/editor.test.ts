import { describe, expect, it } from 'vitest';

import { Backend, RenderRequest } from '../src/api';
import { EditorCore, watchFit } from '../src/editor';
import { ALL_CONCEPTS, FitJobView, PresetDocument } from '../src/types';

/**
 * Deterministic fake server: render responses are a byte encoding of the
 * full request, so "preview equals server render" is checkable bytewise
 * and any local pixel math would show up immediately.
 */
class FakeBackend implements Backend {
  requests: RenderRequest[] = [];
  delays: number[] = [];

  async render(request: RenderRequest): Promise<Blob> {
    this.requests.push(request);
    const delay = this.delays.shift() ?? 0;
    if (delay > 0) await new Promise((resolve) => setTimeout(resolve, delay));
    return new Blob([FakeBackend.encode(request)]);
  }

  static encode(request: RenderRequest): string {
    return JSON.stringify({
      preset: request.presetName ?? null,
      params: request.params ?? null,
      overrides: request.overrides ?? null,
      mode: request.mode,
      concepts: request.concepts,
    });
  }

  async uploadReference(): Promise<string> {
    return 'ref-1';
  }

  fitViews: FitJobView[] = [];

  async startFit(): Promise<string> {
    return 'job-1';
  }

  async fitStatus(): Promise<FitJobView> {
    return this.fitViews.shift() ?? {
      id: 'job-1',
      state: 'done',
      progress: { iteration: 3, loss: 0.01 },
      result: null,
      error: null,
    };
  }

  async listPresets() {
    return [];
  }

  async getPreset(): Promise<PresetDocument> {
    throw new Error('not stored');
  }

  async putPreset(): Promise<void> {}

  async deletePreset(): Promise<void> {}
}

async function blobText(blob: Blob): Promise<string> {
  return blob.text();
}

function newEditor(backend: FakeBackend): EditorCore {
  const editor = new EditorCore(backend);
  editor.content = new Blob(['content-bytes']);
  return editor;
}

describe('preview equals the server render', () => {
  it('matches response bytes for five scripted slider/toggle states', async () => {
    const backend = new FakeBackend();
    const editor = newEditor(backend);
    const previews: string[] = [];
    editor.onPreview = async ({ blob }) => {
      previews.push(await blobText(blob));
    };

    const scripted = [
      () => editor.setScalar('exposure', 0.5),
      () => editor.setScalar('contrast', -0.25),
      () => editor.setPair('tint', 0.4, 0.66),
      () => editor.toggle('sharpness', false),
      () => editor.setMode('relative'),
    ];
    for (const step of scripted) {
      step();
      await editor.renderNow();
    }
    // let async onPreview callbacks settle
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(previews).toHaveLength(5);
    // renderNow issued one request per scripted state beyond the debounce path
    const lastFive = backend.requests.slice(-5);
    lastFive.forEach((request, index) => {
      expect(previews[index]).toBe(FakeBackend.encode(request));
    });
    // the final preview reflects the final state exactly
    expect(previews[4]).toContain('"mode":"relative"');
    expect(previews[4]).not.toContain('sharpness');
  });
});

describe('incremental concept toggling', () => {
  it('reproduces the masked-render sequence', async () => {
    const backend = new FakeBackend();
    const editor = newEditor(backend);
    editor.presetName = 'fitted-style';
    for (const concept of ALL_CONCEPTS) editor.enabled[concept] = false;

    const enabledSoFar: string[][] = [];
    for (const concept of ALL_CONCEPTS) {
      editor.toggle(concept, true);
      await editor.renderNow();
      enabledSoFar.push([...editor.mask()]);
    }

    const masks = backend.requests.map((request) => request.concepts);
    expect(masks).toHaveLength(ALL_CONCEPTS.length);
    masks.forEach((mask, index) => {
      // each frame renders exactly the concepts enabled so far, in order
      expect(mask).toEqual(ALL_CONCEPTS.slice(0, index + 1));
      expect(mask).toEqual(enabledSoFar[index]);
    });
    // every render keeps using the fitted preset
    backend.requests.forEach((request) => expect(request.presetName).toBe('fitted-style'));
  });
});

describe('stale responses', () => {
  it('never overwrite a newer preview', async () => {
    const backend = new FakeBackend();
    const editor = newEditor(backend);
    const applied: Array<{ seq: number; body: string }> = [];
    editor.onPreview = async ({ blob, seq }) => {
      applied.push({ seq, body: await blobText(blob) });
    };

    backend.delays = [50, 0]; // first render artificially delayed
    editor.setScalar('exposure', 0.1);
    const slow = editor.renderNow();
    editor.setScalar('exposure', 0.9);
    const fast = editor.renderNow();
    await Promise.all([slow, fast]);
    await new Promise((resolve) => setTimeout(resolve, 80));

    expect(applied).toHaveLength(1);
    expect(applied[0].body).toContain('0.9');
    expect(editor.preview && (await blobText(editor.preview))).toContain('0.9');
  });
});

describe('debounce', () => {
  it('coalesces rapid slider movement into one request within 300 ms', async () => {
    const backend = new FakeBackend();
    const editor = newEditor(backend);
    expect(EditorCore.DEBOUNCE_MS).toBeLessThanOrEqual(300);
    for (let i = 0; i < 20; i += 1) editor.setScalar('exposure', i / 20);
    expect(backend.requests).toHaveLength(0);
    await new Promise((resolve) => setTimeout(resolve, EditorCore.DEBOUNCE_MS + 60));
    expect(backend.requests).toHaveLength(1);
    expect(backend.requests[0].params).toEqual({ exposure: 0.95 });
  });
});

describe('fit polling', () => {
  it('reports progress then resolves on done', async () => {
    const backend = new FakeBackend();
    backend.fitViews = [
      { id: 'job-1', state: 'running', progress: { iteration: 1, loss: 0.5 }, result: null, error: null },
      { id: 'job-1', state: 'running', progress: { iteration: 2, loss: 0.2 }, result: null, error: null },
      { id: 'job-1', state: 'done', progress: { iteration: 3, loss: 0.1 }, result: null, error: null },
    ];
    const seen: number[] = [];
    const view = await watchFit(backend, 'job-1', (iteration) => seen.push(iteration), 1);
    expect(view.state).toBe('done');
    expect(seen).toEqual([1, 2, 3]);
  });
});
