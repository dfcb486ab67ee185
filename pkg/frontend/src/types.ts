/** Response documents served by the analysis API. */

export interface ErrorEnvelope {
  error: { code: string; message: string };
}

export interface RiskBlock {
  p31_cnt: number;
  p279_cnt: number;
  dim_connection: number;
  dim_coherence: number;
  dim_depth_var: number;
  dim_alignment: number;
  aggregate: number;
}

export interface DriftBlock {
  parent_cnt: number;
  min_depth: number | null;
  segment: string;
  drift_raw: number;
  drift_adj: number;
  flagged: boolean;
}

export interface Narration {
  severity: "strength" | "issue";
  key: string;
  text: string;
}

export interface EntitySummary {
  api: number;
  qid: string;
  source: "snapshot" | "live";
  label: string | null;
  description: string | null;
  language: string | null;
  parents: { P31: string[]; P279: string[] };
  risk: RiskBlock | null;
  drift: DriftBlock | null;
  narrations: Narration[];
  flags: { tag: string; detail: string }[];
}

export interface RedundancyReport {
  api: number;
  qid: string;
  findings: { target: string; witnesses: string[][] }[];
}

export interface SimilarityReport {
  api: number;
  qid: string;
  provider: string;
  labels: string[];
  matrix: number[][];
}

export interface CatalogReport {
  api: number;
  locale: string;
  messages: Record<string, string>;
}

export type Catalog = Record<string, string>;

export function isErrorEnvelope(body: unknown): body is ErrorEnvelope {
  return (
    typeof body === "object" &&
    body !== null &&
    typeof (body as ErrorEnvelope).error === "object"
  );
}
