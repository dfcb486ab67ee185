/** Shared fixtures: real locale catalogs plus captured API bodies. */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import type { FetchLike } from "../src/api";
import type {
  Catalog,
  CatalogReport,
  EntitySummary,
  ErrorEnvelope,
  RedundancyReport,
  SimilarityReport,
} from "../src/types";

// vitest runs with frontend/ as the working directory
export function loadCatalog(locale: string): Catalog {
  const path = resolve(process.cwd(), "..", "src", "taxolint", "locales", `${locale}.json`);
  return JSON.parse(readFileSync(path, "utf-8")) as Catalog;
}

export function catalogReport(locale: string): CatalogReport {
  return { api: 1, locale, messages: loadCatalog(locale) };
}

export const Q6_SUMMARY: EntitySummary = {
  api: 1,
  qid: "Q6",
  source: "snapshot",
  label: "Shinjuku Station",
  description: "railway station in Shinjuku, Tokyo",
  language: "en",
  parents: { P31: ["Q2"], P279: ["Q4"] },
  risk: {
    p31_cnt: 0,
    p279_cnt: 0,
    dim_connection: 0.0,
    dim_coherence: 0.1,
    dim_depth_var: 0.027778,
    dim_alignment: 0.1,
    aggregate: 0.056944,
  },
  drift: {
    parent_cnt: 2,
    min_depth: 2,
    segment: "A",
    drift_raw: 0.529297,
    drift_adj: 0.581492,
    flagged: false,
  },
  narrations: [
    {
      severity: "strength",
      key: "risk.coherence.strength",
      text: "Structural Coherence is strong: parent classes sit close together (score 0.10)",
    },
    {
      severity: "strength",
      key: "risk.alignment.strength",
      text: "Instance-Class Alignment is tight: P31 and P279 targets are near each other (score 0.10)",
    },
    {
      severity: "strength",
      key: "risk.depth_variance.strength",
      text: "Depth Variance is low: parents share a similar depth (score 0.03)",
    },
    {
      severity: "strength",
      key: "risk.connection.strength",
      text: "Connection Count is healthy: link counts sit near the norm (score 0.00)",
    },
  ],
  flags: [{ tag: "DualRole", detail: "p31:Q2" }],
};

export const Q9_REDUNDANCY: RedundancyReport = {
  api: 1,
  qid: "Q9",
  findings: [{ target: "Q1", witnesses: [["Q9", "Q2", "Q1"]] }],
};

export const Q4_SIMILARITY: SimilarityReport = {
  api: 1,
  qid: "Q4",
  provider: "offline:token-hash-v1:d768",
  labels: ["Q4", "Q2", "Q3"],
  matrix: [
    [0.9999999975638149, 0.11259023145951942, 0.3056747601766854],
    [0.11259023145951942, 0.9999999993614787, 0.03254047857687505],
    [0.3056747601766854, 0.03254047857687505, 0.999999993750925],
  ],
};

export const UNKNOWN_ENTITY_ERROR: ErrorEnvelope = {
  error: { code: "UnknownEntity", message: "Q404 is not in the loaded snapshot" },
};

export interface FakeServer {
  fetchFn: FetchLike;
  log: string[];
}

type Route = [RegExp, (match: RegExpMatchArray) => unknown];

export function fakeServer(routes: Route[]): FakeServer {
  const log: string[] = [];
  const fetchFn: FetchLike = (url) => {
    log.push(url);
    for (const [pattern, handler] of routes) {
      const match = url.match(pattern);
      if (match) {
        return Promise.resolve({ json: () => Promise.resolve(handler(match)) });
      }
    }
    const miss: ErrorEnvelope = { error: { code: "UnknownRoute", message: url } };
    return Promise.resolve({ json: () => Promise.resolve(miss) });
  };
  return { fetchFn, log };
}

/** Routes answering like a small snapshot server; order matters. */
export function snapshotRoutes(): Route[] {
  return [
    [/^\/api\/i18n\/([a-z-]+)$/, (m) => catalogReport(m[1])],
    [/^\/api\/entity\/Q404\?/, () => UNKNOWN_ENTITY_ERROR],
    [/^\/api\/entity\/([^/?]+)\/redundancy\?max_paths=\d+$/, () => Q9_REDUNDANCY],
    [/^\/api\/entity\/([^/?]+)\/similarity$/, () => Q4_SIMILARITY],
    [/^\/api\/entity\/([^/?]+)\?locale=[a-z-]+$/, () => Q6_SUMMARY],
  ];
}
