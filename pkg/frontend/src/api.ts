import {
  ConceptName,
  FitJobView,
  PresetDocument,
  PresetListEntry,
  RenderMode,
} from './types';

export interface RenderRequest {
  content: Blob;
  presetName?: string;
  params?: Record<string, unknown>;
  overrides?: Record<string, unknown>;
  mode: RenderMode;
  concepts: ConceptName[];
  full?: boolean;
}

/** Transport boundary: everything the editor needs from the server. */
export interface Backend {
  render(request: RenderRequest): Promise<Blob>;
  uploadReference(file: Blob, name: string): Promise<string>;
  startFit(referenceIds: string[], config: Record<string, unknown>, name: string): Promise<string>;
  fitStatus(jobId: string): Promise<FitJobView>;
  listPresets(): Promise<PresetListEntry[]>;
  getPreset(name: string): Promise<PresetDocument>;
  putPreset(name: string, doc: PresetDocument): Promise<void>;
  deletePreset(name: string): Promise<void>;
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && body.detail) detail = `${response.status}: ${body.detail}`;
    } catch {
      /* non-JSON error body */
    }
    throw new Error(`request failed (${detail})`);
  }
  return response;
}

export class HttpBackend implements Backend {
  constructor(private readonly base: string = '') {}

  async render(request: RenderRequest): Promise<Blob> {
    const form = new FormData();
    form.append('file', request.content, 'content.png');
    if (request.presetName) form.append('preset_name', request.presetName);
    if (request.params) form.append('params', JSON.stringify(request.params));
    if (request.overrides) form.append('overrides', JSON.stringify(request.overrides));
    form.append('mode', request.mode);
    form.append('concepts', request.concepts.join(','));
    if (request.full) form.append('full', 'true');
    const response = await expectOk(
      await fetch(`${this.base}/api/render`, { method: 'POST', body: form }),
    );
    return response.blob();
  }

  async uploadReference(file: Blob, name: string): Promise<string> {
    const form = new FormData();
    form.append('file', file, name);
    const response = await expectOk(
      await fetch(`${this.base}/api/references`, { method: 'POST', body: form }),
    );
    return (await response.json()).reference_id;
  }

  async startFit(
    referenceIds: string[],
    config: Record<string, unknown>,
    name: string,
  ): Promise<string> {
    const response = await expectOk(
      await fetch(`${this.base}/api/fit`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify({ reference_ids: referenceIds, config, name }),
      }),
    );
    return (await response.json()).job_id;
  }

  async fitStatus(jobId: string): Promise<FitJobView> {
    const response = await expectOk(await fetch(`${this.base}/api/fit/${jobId}`));
    return response.json();
  }

  async listPresets(): Promise<PresetListEntry[]> {
    const response = await expectOk(await fetch(`${this.base}/api/presets`));
    return response.json();
  }

  async getPreset(name: string): Promise<PresetDocument> {
    const response = await expectOk(
      await fetch(`${this.base}/api/presets/${encodeURIComponent(name)}`),
    );
    return response.json();
  }

  async putPreset(name: string, doc: PresetDocument): Promise<void> {
    await expectOk(
      await fetch(`${this.base}/api/presets/${encodeURIComponent(name)}`, {
        method: 'PUT',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(doc),
      }),
    );
  }

  async deletePreset(name: string): Promise<void> {
    await expectOk(
      await fetch(`${this.base}/api/presets/${encodeURIComponent(name)}`, {
        method: 'DELETE',
      }),
    );
  }
}
