/** Typed client for the review-service HTTP API.
 *
 * Mutations carry the version they were computed against; on a 409 stale
 * response the client refetches the current version and replays the edit
 * once. The UI never mutates spans except through POST /corrections.
 */

import type {
  AnnotationsJson,
  CorpusInfo,
  CorrectionEdit,
  DisagreementsJson,
  ObservationJson,
  SentencePage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  version = -1;

  constructor(
    public baseUrl: string,
    public corpusId: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/corpora/${encodeURIComponent(this.corpusId)}${path}`;
  }

  private async getJson<T>(url: string): Promise<T> {
    const response = await this.fetchImpl(url);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  async corpora(): Promise<CorpusInfo[]> {
    return this.getJson<CorpusInfo[]>(`${this.baseUrl}/corpora`);
  }

  async sentences(offset = 0, limit = 50): Promise<SentencePage> {
    return this.getJson<SentencePage>(this.url(`/sentences?offset=${offset}&limit=${limit}`));
  }

  async annotations(sentenceId: string, source?: string): Promise<AnnotationsJson> {
    const query = source ? `?source=${encodeURIComponent(source)}` : "";
    const body = await this.getJson<AnnotationsJson>(
      this.url(`/sentences/${encodeURIComponent(sentenceId)}/annotations${query}`),
    );
    this.version = body.version;
    return body;
  }

  async observations(): Promise<ObservationJson[]> {
    const body = await this.getJson<{ version: number; items: ObservationJson[] }>(
      this.url(`/observations`),
    );
    this.version = body.version;
    return body.items;
  }

  async disagreements(): Promise<DisagreementsJson> {
    const body = await this.getJson<DisagreementsJson>(this.url(`/disagreements`));
    this.version = body.version;
    return body;
  }

  async refreshVersion(): Promise<number> {
    await this.disagreements();
    return this.version;
  }

  private async post(path: string, payload: Record<string, unknown>): Promise<number> {
    const response = await this.fetchImpl(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    const body = (await response.json()) as { version: number };
    this.version = body.version;
    return body.version;
  }

  /** POST a correction, replaying once after a stale-version conflict. */
  async correction(edit: CorrectionEdit): Promise<number> {
    if (this.version < 0) await this.refreshVersion();
    try {
      return await this.post(`/corrections`, { ...edit, base_version: this.version });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409 && /version/.test(error.message)) {
        await this.refreshVersion();
        return await this.post(`/corrections`, { ...edit, base_version: this.version });
      }
      throw error;
    }
  }

  async select(observationId: string, selected: boolean, reviewer: string): Promise<number> {
    if (this.version < 0) await this.refreshVersion();
    try {
      return await this.post(`/selections`, {
        observation_id: observationId,
        selected,
        reviewer,
        base_version: this.version,
      });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409 && /version/.test(error.message)) {
        await this.refreshVersion();
        return await this.post(`/selections`, {
          observation_id: observationId,
          selected,
          reviewer,
          base_version: this.version,
        });
      }
      throw error;
    }
  }

  async exportView(view: string): Promise<string> {
    const response = await this.fetchImpl(this.url(`/export?view=${encodeURIComponent(view)}`));
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return await response.text();
  }
}
