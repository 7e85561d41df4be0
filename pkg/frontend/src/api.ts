// Thin client over the documented HTTP endpoints. The UI never computes a
// decision itself: every verdict it shows came out of one of these calls.

import type {
  DocumentRecord,
  FeedbackPayload,
  PredictResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`HTTP ${status}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = await response.json();
      } catch {
        detail = await response.text().catch(() => null);
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  predict(document: DocumentRecord): Promise<PredictResponse> {
    return this.request("POST", "/v1/predict", document);
  }

  decide(document: DocumentRecord): Promise<PredictResponse> {
    return this.request("POST", "/v1/decide", document);
  }

  submitFeedback(documentId: string, feedback: FeedbackPayload): Promise<unknown> {
    return this.request(
      "POST",
      `/v1/documents/${encodeURIComponent(documentId)}/feedback`,
      feedback,
    );
  }

  getDocument(documentId: string): Promise<DocumentRecord> {
    return this.request("GET", `/v1/documents/${encodeURIComponent(documentId)}`);
  }
}
