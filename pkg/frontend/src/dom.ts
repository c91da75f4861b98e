/** Tiny DOM builders, enough for this app. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function slider(
  label: string,
  min: number,
  max: number,
  value: number,
  onInput: (value: number) => void,
): HTMLElement {
  const input = el('input', {
    type: 'range',
    min: String(min),
    max: String(max),
    step: '0.01',
    value: String(value),
  });
  const readout = el('span', { class: 'readout' }, [value.toFixed(2)]);
  input.addEventListener('input', () => {
    const v = Number(input.value);
    readout.textContent = v.toFixed(2);
    onInput(v);
  });
  return el('label', { class: 'slider' }, [el('span', {}, [label]), input, readout]);
}

export function download(filename: string, payload: string): void {
  const blob = new Blob([payload], { type: 'application/json' });
  const url = URL.createObjectURL(blob);
  const link = el('a', { href: url, download: filename });
  link.click();
  URL.revokeObjectURL(url);
}
