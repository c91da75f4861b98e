import { Backend, HttpBackend } from './api';
import { el, slider, download } from './dom';
import { EditorCore, watchFit } from './editor';
import {
  ALL_CONCEPTS,
  PAIR_CONCEPTS,
  PairConcept,
  ScalarConcept,
  isPairConcept,
} from './types';

const backend: Backend = new HttpBackend('');
const editor = new EditorCore(backend);

const referenceIds: string[] = [];

// --- library: references + presets -----------------------------------------

function libraryView(): HTMLElement {
  const refList = el('ul', { class: 'items' });
  const presetList = el('ul', { class: 'items' });

  const refInput = el('input', { type: 'file', accept: 'image/png,image/jpeg', multiple: '' });
  refInput.addEventListener('change', async () => {
    for (const file of Array.from(refInput.files ?? [])) {
      const id = await backend.uploadReference(file, file.name);
      referenceIds.push(id);
      refList.append(el('li', {}, [`${file.name} -> ${id}`]));
    }
  });

  async function refreshPresets(): Promise<void> {
    presetList.replaceChildren();
    for (const entry of await backend.listPresets()) {
      const use = el('button', {}, ['use']);
      use.addEventListener('click', () => editor.selectPreset(entry.name));
      const exportBtn = el('button', {}, ['export']);
      exportBtn.addEventListener('click', async () => {
        const doc = await backend.getPreset(entry.name);
        download(`${entry.name}.json`, JSON.stringify(doc));
      });
      const del = el('button', {}, ['delete']);
      del.addEventListener('click', async () => {
        await backend.deletePreset(entry.name);
        await refreshPresets();
      });
      presetList.append(
        el('li', {}, [`${entry.name} (${entry.fitted ? 'fitted' : 'manual'}) `, use, exportBtn, del]),
      );
    }
  }
  void refreshPresets();
  (window as unknown as { refreshPresets: () => Promise<void> }).refreshPresets = refreshPresets;

  return el('section', { class: 'panel' }, [
    el('h2', {}, ['Library']),
    el('h3', {}, ['References']),
    refInput,
    refList,
    el('h3', {}, ['Presets']),
    presetList,
  ]);
}

// --- fit wizard ---------------------------------------------------------------

function fitView(): HTMLElement {
  const nameInput = el('input', { type: 'text', value: 'my-style' });
  const seedInput = el('input', { type: 'number', value: '0' });
  const itersInput = el('input', { type: 'number', value: '200' });
  const status = el('p', { class: 'status' }, ['idle']);
  const curve = el('canvas', { width: '320', height: '80', class: 'loss-curve' });

  const losses: number[] = [];
  function drawCurve(): void {
    const ctx = (curve as HTMLCanvasElement).getContext('2d');
    if (!ctx || losses.length === 0) return;
    ctx.clearRect(0, 0, 320, 80);
    const top = Math.max(...losses);
    ctx.beginPath();
    losses.forEach((loss, index) => {
      const x = (index / Math.max(losses.length - 1, 1)) * 318 + 1;
      const y = 78 - (loss / Math.max(top, 1e-12)) * 76;
      if (index === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }

  const startBtn = el('button', {}, ['Start fit']);
  startBtn.addEventListener('click', async () => {
    if (referenceIds.length === 0) {
      status.textContent = 'upload references first';
      return;
    }
    losses.length = 0;
    status.textContent = 'fitting...';
    const jobId = await backend.startFit(
      referenceIds,
      { seed: Number(seedInput.value), max_outer_iterations: Number(itersInput.value) },
      nameInput.value,
    );
    const view = await watchFit(backend, jobId, (iteration, loss) => {
      losses.push(loss);
      drawCurve();
      status.textContent = `iteration ${iteration}, loss ${loss.toFixed(5)}`;
    });
    if (view.state === 'done' && view.result) {
      await backend.putPreset(nameInput.value, view.result);
      status.textContent = `done: preset "${nameInput.value}" saved`;
      editor.selectPreset(nameInput.value);
      await (window as unknown as { refreshPresets: () => Promise<void> }).refreshPresets();
    } else {
      status.textContent = `failed: ${view.error}`;
    }
  });

  return el('section', { class: 'panel' }, [
    el('h2', {}, ['Fit']),
    el('label', {}, ['name ', nameInput]),
    el('label', {}, ['seed ', seedInput]),
    el('label', {}, ['iterations ', itersInput]),
    startBtn,
    status,
    curve,
  ]);
}

// --- editor ---------------------------------------------------------------------

function editorView(): HTMLElement {
  const before = el('img', { class: 'before' });
  const after = el('img', { class: 'after' });
  const wipeWrap = el('div', { class: 'wipe' }, [before, after]);
  const wipe = el('input', { type: 'range', min: '0', max: '100', value: '50' });
  wipe.addEventListener('input', () => {
    after.style.clipPath = `inset(0 0 0 ${wipe.value}%)`;
  });
  after.style.clipPath = 'inset(0 0 0 50%)';

  editor.onPreview = ({ blob }) => {
    after.src = URL.createObjectURL(blob);
  };
  editor.onError = (message) => {
    statusLine.textContent = `render error: ${message}`;
  };
  const statusLine = el('p', { class: 'status' });

  const contentInput = el('input', { type: 'file', accept: 'image/png,image/jpeg' });
  contentInput.addEventListener('change', () => {
    const file = contentInput.files?.[0];
    if (!file) return;
    before.src = URL.createObjectURL(file);
    editor.setContent(file);
  });

  const modeSelect = el('select', {}, [
    el('option', { value: 'absolute' }, ['absolute (anchor on average)']),
    el('option', { value: 'relative' }, ['relative (edit in place)']),
  ]);
  modeSelect.addEventListener('change', () => {
    editor.setMode((modeSelect as HTMLSelectElement).value as 'absolute' | 'relative');
  });

  const rows = ALL_CONCEPTS.map((concept) => {
    const toggle = el('input', { type: 'checkbox', checked: '' });
    toggle.addEventListener('change', () =>
      editor.toggle(concept, (toggle as HTMLInputElement).checked),
    );
    const controls: HTMLElement[] = [];
    if (isPairConcept(concept)) {
      const pair = concept as PairConcept;
      let strength = 0;
      let hue = 0;
      controls.push(
        slider('strength', 0, 1, 0, (v) => {
          strength = v;
          editor.setPair(pair, strength, hue);
        }),
        slider('hue', 0, 0.99, 0, (v) => {
          hue = v;
          editor.setPair(pair, strength, hue);
        }),
      );
    } else {
      controls.push(
        slider('value', -1, 1, 0, (v) => editor.setScalar(concept as ScalarConcept, v)),
      );
    }
    return el('div', { class: 'concept-row' }, [
      el('label', {}, [toggle, ` ${concept}`]),
      ...controls,
    ]);
  });

  const saveName = el('input', { type: 'text', value: 'edited' });
  const saveBtn = el('button', {}, ['Save as preset']);
  saveBtn.addEventListener('click', async () => {
    const base = editor.presetName ? await backend.getPreset(editor.presetName) : null;
    const params = { ...(base ? base.params : null), ...buildParams() };
    const doc = {
      version: 1,
      name: (saveName as HTMLInputElement).value,
      created_at: new Date().toISOString().replace(/\.\d+Z$/, '+00:00'),
      params: params as never,
      thresholds: base?.thresholds ?? {
        tau_highlight: 0.7,
        tau_shadow: 0.3,
        sharpness_kernel: 11,
      },
      fit_meta: null,
    };
    await backend.putPreset((saveName as HTMLInputElement).value, doc);
    await (window as unknown as { refreshPresets: () => Promise<void> }).refreshPresets();
    statusLine.textContent = `saved "${(saveName as HTMLInputElement).value}"`;
  });

  function buildParams(): Record<string, unknown> {
    const payload: Record<string, unknown> = {};
    for (const concept of ALL_CONCEPTS) {
      payload[concept] = editor.overrides[concept];
    }
    for (const pairName of PAIR_CONCEPTS) {
      payload[pairName] = { ...editor.overrides[pairName] };
    }
    return payload;
  }

  return el('section', { class: 'panel' }, [
    el('h2', {}, ['Editor']),
    el('label', {}, ['content ', contentInput]),
    el('label', {}, ['mode ', modeSelect]),
    ...rows,
    el('div', {}, [saveName, saveBtn]),
    statusLine,
    wipeWrap,
    el('label', {}, ['before/after ', wipe]),
  ]);
}

document.addEventListener('DOMContentLoaded', () => {
  const root = document.getElementById('app');
  if (!root) return;
  root.append(libraryView(), fitView(), editorView());
});
