/** Thin typed client over the analysis API.
 *
 * Each logical endpoint keeps a request sequence number; a response
 * that comes back after a newer request for the same endpoint was
 * issued resolves to null and must be discarded by the caller
 * (latest wins).  Non-2xx responses resolve to the error envelope
 * the server sent.
 */

import type {
  CatalogReport,
  EntitySummary,
  ErrorEnvelope,
  RedundancyReport,
  SimilarityReport,
} from "./types";

export type FetchLike = (url: string) => Promise<{ json(): Promise<unknown> }>;

export class ApiClient {
  private seq = new Map<string, number>();

  constructor(
    private base = "",
    private fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(endpoint: string, url: string): Promise<T | ErrorEnvelope | null> {
    const mine = (this.seq.get(endpoint) ?? 0) + 1;
    this.seq.set(endpoint, mine);
    let body: unknown;
    try {
      const resp = await this.fetchFn(this.base + url);
      body = await resp.json();
    } catch (err) {
      body = { error: { code: "NetworkError", message: String(err) } };
    }
    if (this.seq.get(endpoint) !== mine) {
      return null; // a newer request for this endpoint superseded us
    }
    return body as T | ErrorEnvelope;
  }

  entity(qid: string, locale: string) {
    const q = encodeURIComponent(qid);
    return this.get<EntitySummary>(
      "entity",
      `/api/entity/${q}?locale=${encodeURIComponent(locale)}`,
    );
  }

  redundancy(qid: string, maxPaths: number) {
    const q = encodeURIComponent(qid);
    return this.get<RedundancyReport>(
      "redundancy",
      `/api/entity/${q}/redundancy?max_paths=${maxPaths}`,
    );
  }

  similarity(qid: string) {
    const q = encodeURIComponent(qid);
    return this.get<SimilarityReport>("similarity", `/api/entity/${q}/similarity`);
  }

  catalog(locale: string) {
    return this.get<CatalogReport>("i18n", `/api/i18n/${encodeURIComponent(locale)}`);
  }
}

/** Server-accepted range for the redundancy search width. */
export function clampMaxPaths(value: number): number {
  if (!Number.isFinite(value)) {
    return 8;
  }
  return Math.min(64, Math.max(1, Math.trunc(value)));
}
