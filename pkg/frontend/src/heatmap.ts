/** Similarity matrix as a colored grid.
 *
 * Fixed diverging scale anchored at cosine 0 (neutral white) and
 * cosine 1 (full blue); negative similarity runs toward red.  Hovering
 * a cell shows the label pair and the value via the title tooltip.
 */

import { t } from "./i18n";
import type { Catalog } from "./types";

const POSITIVE = [37, 99, 235];
const NEGATIVE = [220, 38, 38];
const NEUTRAL = [255, 255, 255];

export function colorFor(value: number): string {
  const v = Math.max(-1, Math.min(1, value));
  const anchor = v >= 0 ? POSITIVE : NEGATIVE;
  const weight = Math.abs(v);
  const mix = NEUTRAL.map((n, i) => Math.round(n + (anchor[i] - n) * weight));
  return `rgb(${mix[0]}, ${mix[1]}, ${mix[2]})`;
}

export function renderHeatmap(
  container: HTMLElement,
  labels: string[],
  matrix: number[][],
  catalog: Catalog,
): void {
  container.textContent = "";
  const n = matrix.length;
  if (n === 0 || labels.length === 0) {
    const empty = document.createElement("p");
    empty.className = "heatmap-empty";
    empty.textContent = t(catalog, "ui.similarity.empty");
    container.appendChild(empty);
    return;
  }

  const grid = document.createElement("div");
  grid.className = "heatmap-grid";
  grid.style.gridTemplateColumns = `auto repeat(${n}, 1fr)`;

  grid.appendChild(document.createElement("span"));
  for (const label of labels) {
    const head = document.createElement("span");
    head.className = "heatmap-label";
    head.textContent = label;
    grid.appendChild(head);
  }
  matrix.forEach((row, i) => {
    const head = document.createElement("span");
    head.className = "heatmap-label";
    head.textContent = labels[i];
    grid.appendChild(head);
    row.forEach((value, j) => {
      const cell = document.createElement("div");
      cell.className = "heatmap-cell";
      cell.style.backgroundColor = colorFor(value);
      cell.title = `${labels[i]} × ${labels[j]}: ${value.toFixed(3)}`;
      cell.textContent = value.toFixed(3);
      grid.appendChild(cell);
    });
  });
  container.appendChild(grid);
}
