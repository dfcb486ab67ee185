/** Center and right panel rendering for one inspected entity. */

import { renderHeatmap } from "./heatmap";
import { t } from "./i18n";
import type {
  Catalog,
  EntitySummary,
  ErrorEnvelope,
  RedundancyReport,
  RiskBlock,
  SimilarityReport,
} from "./types";

// dimension slug -> field in the risk block, in published order
const DIMENSIONS: [string, keyof RiskBlock][] = [
  ["connection", "dim_connection"],
  ["coherence", "dim_coherence"],
  ["depth_variance", "dim_depth_var"],
  ["alignment", "dim_alignment"],
];

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function heading(key: string, catalog: Catalog): HTMLElement {
  const h = el("h3", undefined, t(catalog, key));
  h.dataset.i18n = key;
  return h;
}

export function renderError(alertRegion: HTMLElement, envelope: ErrorEnvelope): void {
  const line = el("div", "error-line", `${envelope.error.code}: ${envelope.error.message}`);
  line.dataset.code = envelope.error.code;
  alertRegion.appendChild(line);
  alertRegion.hidden = false;
}

export function clearAlerts(alertRegion: HTMLElement): void {
  alertRegion.textContent = "";
  alertRegion.hidden = true;
}

/** Center panel: identity, overall score, narrations, dimension bars. */
export function renderSummary(
  panel: HTMLElement,
  summary: EntitySummary,
  catalog: Catalog,
): void {
  panel.textContent = "";
  const name = summary.label ?? summary.qid;
  panel.appendChild(el("h2", "entity-name", name));
  panel.appendChild(el("p", "entity-qid", `${summary.qid} · ${summary.source}`));
  if (summary.description) {
    panel.appendChild(el("p", "entity-description", summary.description));
  }

  const overall = el("div", "risk-overall");
  const overallLabel = el("span", undefined, t(catalog, "ui.risk.aggregate"));
  overallLabel.dataset.i18n = "ui.risk.aggregate";
  overall.appendChild(overallLabel);
  overall.appendChild(
    el("strong", "risk-overall-value", summary.risk ? summary.risk.aggregate.toFixed(3) : "–"),
  );
  panel.appendChild(overall);

  for (const severity of ["strength", "issue"] as const) {
    const items = summary.narrations.filter((n) => n.severity === severity);
    if (!items.length) continue;
    panel.appendChild(heading(severity === "strength" ? "ui.strengths" : "ui.issues", catalog));
    const list = el("ul", `narrations narrations-${severity}`);
    for (const item of items) {
      list.appendChild(el("li", "narration", item.text));
    }
    panel.appendChild(list);
  }

  if (summary.risk) {
    const bars = el("div", "dim-bars");
    for (const [slug, field] of DIMENSIONS) {
      const score = summary.risk[field];
      const row = el("div", "dim-bar");
      row.dataset.dim = slug;
      const label = el("span", "dim-label", t(catalog, `dim.${slug}`));
      label.dataset.i18n = `dim.${slug}`;
      const track = el("div", "dim-track");
      const fill = el("div", "dim-fill");
      fill.style.width = `${(score * 100).toFixed(1)}%`;
      track.appendChild(fill);
      row.appendChild(label);
      row.appendChild(track);
      row.appendChild(el("span", "dim-value", score.toFixed(3)));
      bars.appendChild(row);
    }
    panel.appendChild(bars);
  }

  panel.appendChild(heading("ui.flags", catalog));
  if (summary.flags.length) {
    const list = el("ul", "flags");
    for (const flag of summary.flags) {
      list.appendChild(el("li", "flag", `${flag.tag}: ${flag.detail}`));
    }
    panel.appendChild(list);
  } else {
    const none = el("p", "flags-empty", t(catalog, "ui.flags.empty"));
    none.dataset.i18n = "ui.flags.empty";
    panel.appendChild(none);
  }
}

function parentsBlock(summary: EntitySummary, catalog: Catalog): HTMLElement {
  const block = el("div", "parents");
  block.appendChild(heading("ui.panel.neighborhood", catalog));
  for (const [key, values] of [
    ["ui.parents.p31", summary.parents.P31],
    ["ui.parents.p279", summary.parents.P279],
  ] as const) {
    block.appendChild(heading(key, catalog));
    block.appendChild(el("p", "parent-list", values.length ? values.join(", ") : "–"));
  }
  return block;
}

function metricsBlock(summary: EntitySummary, catalog: Catalog): HTMLElement {
  const block = el("div", "metrics");
  block.appendChild(heading("ui.panel.metrics", catalog));
  const table = el("table", "metric-table");
  const rows: [string, string][] = [];
  if (summary.risk) {
    rows.push(["P31", String(summary.risk.p31_cnt)], ["P279", String(summary.risk.p279_cnt)]);
  }
  if (summary.drift) {
    const d = summary.drift;
    rows.push(
      ["n", String(d.parent_cnt)],
      ["depth", d.min_depth === null ? "–" : String(d.min_depth)],
      ["segment", d.segment],
      ["raw", d.drift_raw.toFixed(3)],
      ["adj", d.drift_adj.toFixed(3)],
    );
  }
  for (const [label, value] of rows) {
    const tr = el("tr");
    tr.appendChild(el("td", "metric-name", label));
    tr.appendChild(el("td", "metric-value", value));
    table.appendChild(tr);
  }
  block.appendChild(table);
  if (summary.drift) {
    const key = summary.drift.flagged ? "ui.drift.flagged" : "ui.drift.clean";
    const status = el("p", "drift-status", t(catalog, key));
    status.dataset.i18n = key;
    block.appendChild(status);
  }
  return block;
}

/** Right panel: metric tables, redundancy findings, similarity heatmap. */
export function renderDiagnostics(
  panel: HTMLElement,
  summary: EntitySummary | null,
  redundancy: RedundancyReport | null,
  similarity: SimilarityReport | null,
  catalog: Catalog,
): void {
  panel.textContent = "";
  if (summary) {
    panel.appendChild(metricsBlock(summary, catalog));
    panel.appendChild(parentsBlock(summary, catalog));
  }

  const redBlock = el("div", "redundancy");
  redBlock.appendChild(heading("ui.redundancy.heading", catalog));
  if (redundancy && redundancy.findings.length) {
    const list = el("ul", "redundancy-findings");
    for (const finding of redundancy.findings) {
      for (const witness of finding.witnesses) {
        list.appendChild(
          el("li", "redundancy-finding", `→ ${finding.target}: ${witness.join(" › ")}`),
        );
      }
    }
    redBlock.appendChild(list);
  } else {
    const none = el("p", "redundancy-empty", t(catalog, "ui.redundancy.empty"));
    none.dataset.i18n = "ui.redundancy.empty";
    redBlock.appendChild(none);
  }
  panel.appendChild(redBlock);

  const simBlock = el("div", "similarity");
  simBlock.appendChild(heading("ui.similarity.heading", catalog));
  const target = el("div", "similarity-grid");
  renderHeatmap(
    target as HTMLElement,
    similarity ? similarity.labels : [],
    similarity ? similarity.matrix : [],
    catalog,
  );
  simBlock.appendChild(target);
  panel.appendChild(simBlock);
}
