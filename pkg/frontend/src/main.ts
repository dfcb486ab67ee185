/** Console shell: three panels, locale handling, entity loading. */

import { ApiClient, clampMaxPaths } from "./api";
import { clearAlerts, renderDiagnostics, renderError, renderSummary } from "./entityView";
import { LOCALES, applyCatalog, t, type Locale } from "./i18n";
import type { Catalog, EntitySummary, RedundancyReport, SimilarityReport } from "./types";
import { isErrorEnvelope } from "./types";

export interface ConsoleState {
  locale: Locale;
  qid: string;
  maxPaths: number;
  lastSummary: EntitySummary | null;
  lastRedundancy: RedundancyReport | null;
  lastSimilarity: SimilarityReport | null;
}

interface ConsoleElements {
  alert: HTMLElement;
  qidInput: HTMLInputElement;
  inspectButton: HTMLButtonElement;
  maxPathsInput: HTMLInputElement;
  localeSelect: HTMLSelectElement;
  summaryPanel: HTMLElement;
  diagnosticsPanel: HTMLElement;
}

export interface ConsoleHandle {
  state: ConsoleState;
  elements: ConsoleElements;
  catalog: Catalog;
  load(qid: string): Promise<void>;
  setLocale(locale: Locale): Promise<void>;
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function buildShell(root: HTMLElement): ConsoleElements {
  root.textContent = "";
  root.className = "console";

  const header = el("header", "console-header");
  const title = el("h1");
  title.dataset.i18n = "ui.title";
  header.appendChild(title);
  const alert = el("div", "alert-region");
  alert.setAttribute("role", "alert");
  alert.hidden = true;
  header.appendChild(alert);
  root.appendChild(header);

  const layout = el("div", "console-layout");

  const controls = el("aside", "panel panel-controls");
  const searchLabel = el("label", "control");
  const searchSpan = document.createElement("span");
  searchSpan.dataset.i18n = "ui.search.placeholder";
  const qidInput = document.createElement("input");
  qidInput.type = "text";
  qidInput.name = "qid";
  qidInput.dataset.i18nPlaceholder = "ui.search.placeholder";
  searchLabel.appendChild(searchSpan);
  searchLabel.appendChild(qidInput);
  controls.appendChild(searchLabel);

  const inspectButton = document.createElement("button");
  inspectButton.type = "button";
  inspectButton.dataset.i18n = "ui.search.button";
  controls.appendChild(inspectButton);

  const maxPathsLabel = el("label", "control");
  const maxPathsSpan = document.createElement("span");
  maxPathsSpan.dataset.i18n = "ui.maxpaths.label";
  const maxPathsInput = document.createElement("input");
  maxPathsInput.type = "number";
  maxPathsInput.name = "max-paths";
  maxPathsInput.min = "1";
  maxPathsInput.max = "64";
  maxPathsInput.value = "8";
  maxPathsLabel.appendChild(maxPathsSpan);
  maxPathsLabel.appendChild(maxPathsInput);
  controls.appendChild(maxPathsLabel);

  const localeLabel = el("label", "control");
  const localeSpan = document.createElement("span");
  localeSpan.dataset.i18n = "ui.locale.label";
  const localeSelect = document.createElement("select");
  localeSelect.name = "locale";
  for (const code of LOCALES) {
    const option = document.createElement("option");
    option.value = code;
    option.textContent = code;
    localeSelect.appendChild(option);
  }
  localeLabel.appendChild(localeSpan);
  localeLabel.appendChild(localeSelect);
  controls.appendChild(localeLabel);
  layout.appendChild(controls);

  const summaryPanel = el("section", "panel panel-entity");
  const summaryHeading = el("h3");
  summaryHeading.dataset.i18n = "ui.panel.entity";
  summaryPanel.appendChild(summaryHeading);
  layout.appendChild(summaryPanel);

  const diagnosticsPanel = el("section", "panel panel-diagnostics");
  const diagnosticsHeading = el("h3");
  diagnosticsHeading.dataset.i18n = "ui.panel.metrics";
  diagnosticsPanel.appendChild(diagnosticsHeading);
  layout.appendChild(diagnosticsPanel);

  root.appendChild(layout);
  return {
    alert,
    qidInput,
    inspectButton,
    maxPathsInput,
    localeSelect,
    summaryPanel,
    diagnosticsPanel,
  };
}

function renderAll(handle: ConsoleHandle): void {
  const { state, elements, catalog } = handle;
  if (state.lastSummary) {
    renderSummary(elements.summaryPanel, state.lastSummary, catalog);
  }
  renderDiagnostics(
    elements.diagnosticsPanel,
    state.lastSummary,
    state.lastRedundancy,
    state.lastSimilarity,
    catalog,
  );
}

export async function initConsole(root: HTMLElement, client: ApiClient): Promise<ConsoleHandle> {
  const elements = buildShell(root);
  const state: ConsoleState = {
    locale: "en",
    qid: "",
    maxPaths: 8,
    lastSummary: null,
    lastRedundancy: null,
    lastSimilarity: null,
  };
  const handle: ConsoleHandle = {
    state,
    elements,
    catalog: {},
    async load(qid: string): Promise<void> {
      state.qid = qid;
      clearAlerts(elements.alert);
      const [summary, redundancy, similarity] = await Promise.all([
        client.entity(qid, state.locale),
        client.redundancy(qid, state.maxPaths),
        client.similarity(qid),
      ]);
      // null means a newer request for the same endpoint superseded this one
      if (summary !== null) {
        if (isErrorEnvelope(summary)) {
          renderError(elements.alert, summary);
          state.lastSummary = null;
        } else {
          state.lastSummary = summary;
        }
      }
      if (redundancy !== null) {
        if (isErrorEnvelope(redundancy)) {
          renderError(elements.alert, redundancy);
          state.lastRedundancy = null;
        } else {
          state.lastRedundancy = redundancy;
        }
      }
      if (similarity !== null) {
        if (isErrorEnvelope(similarity)) {
          renderError(elements.alert, similarity);
          state.lastSimilarity = null;
        } else {
          state.lastSimilarity = similarity;
        }
      }
      renderAll(handle);
    },
    async setLocale(locale: Locale): Promise<void> {
      state.locale = locale;
      // language switch reloads the catalog only; entity data stays cached
      const catalog = await client.catalog(locale);
      if (catalog === null) return;
      if (isErrorEnvelope(catalog)) {
        renderError(elements.alert, catalog);
        return;
      }
      handle.catalog = catalog.messages;
      applyCatalog(root, handle.catalog);
      document.title = t(handle.catalog, "ui.title");
      renderAll(handle);
    },
  };

  elements.inspectButton.addEventListener("click", () => {
    const qid = elements.qidInput.value.trim();
    if (qid) void handle.load(qid);
  });
  elements.qidInput.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") elements.inspectButton.click();
  });
  elements.maxPathsInput.addEventListener("change", () => {
    const clamped = clampMaxPaths(Number(elements.maxPathsInput.value));
    elements.maxPathsInput.value = String(clamped);
    state.maxPaths = clamped;
  });
  elements.localeSelect.addEventListener("change", () => {
    void handle.setLocale(elements.localeSelect.value as Locale);
  });

  await handle.setLocale("en");
  return handle;
}
