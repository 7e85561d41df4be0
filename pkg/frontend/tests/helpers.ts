// Shared fixtures: the committed corpus and golden responses from the
// repository, plus a canned fake server for the HTTP contract.

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import type { FetchLike } from "../src/api";
import type { DocumentRecord, PredictResponse } from "../src/types";

// vitest runs with cwd = frontend/; the fixtures live one level up
function repoPath(relative: string): string {
  return resolve(process.cwd(), "..", relative);
}

export function loadFixtureDocument(id = "prospectus-001-000"): DocumentRecord {
  return JSON.parse(readFileSync(repoPath(`fixtures/corpus/${id}.json`), "utf-8"));
}

export function loadGoldenResponse(id = "prospectus-001-000"): PredictResponse {
  return JSON.parse(readFileSync(repoPath(`fixtures/golden/${id}.predict.json`), "utf-8"));
}

export type RecordedCall = {
  method: string;
  path: string;
  body?: unknown;
};

export type FakeServerOptions = {
  decide?: (body: DocumentRecord) => PredictResponse;
  decideStatus?: number;
  feedbackStatus?: number;
  document?: DocumentRecord;
  predict?: PredictResponse;
};

export function fakeServer(options: FakeServerOptions = {}) {
  const calls: RecordedCall[] = [];

  const json = (status: number, payload: unknown) =>
    new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });

  const fetchImpl: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ method, path: input, body });

    if (input.endsWith("/feedback")) {
      const status = options.feedbackStatus ?? 200;
      if (status >= 400) return json(status, { detail: "feedback rejected" });
      return json(200, { status: "ok", feedback_count: 1 });
    }
    if (input.endsWith("/v1/decide")) {
      const status = options.decideStatus ?? 200;
      if (status >= 400) return json(status, { detail: "decide rejected" });
      if (!options.decide) throw new Error("fake server has no decide handler");
      return json(200, options.decide(body as DocumentRecord));
    }
    if (input.endsWith("/v1/predict")) {
      if (!options.predict) throw new Error("fake server has no predict response");
      return json(200, options.predict);
    }
    if (input.includes("/v1/documents/")) {
      if (!options.document) return json(404, { detail: "unknown document" });
      return json(200, options.document);
    }
    throw new Error(`unexpected request: ${method} ${input}`);
  };

  return {
    calls,
    fetchImpl,
    decideCalls: () => calls.filter((c) => c.path.endsWith("/v1/decide")),
    feedbackCalls: () => calls.filter((c) => c.path.endsWith("/feedback")),
  };
}

/** A decide response the "server" would send back after annotation edits:
 * the golden verdict with the currency criterion flipped to review. */
export function reviewVerdictResponse(base: PredictResponse): PredictResponse {
  const response: PredictResponse = JSON.parse(JSON.stringify(base));
  response.verdict.overall = "review";
  for (const decision of response.verdict.decisions) {
    if (decision.criterion === "Currency") {
      decision.outcome = "review";
      decision.chosen_value = null;
      decision.alternatives = [];
      decision.explanation = "no Currency evidence found; marked for human review";
    }
  }
  return response;
}
