import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { fakeServer, loadFixtureDocument, loadGoldenResponse } from "./helpers";

const doc = loadFixtureDocument();
const golden = loadGoldenResponse();

describe("ApiClient", () => {
  it("posts documents to the decide endpoint", async () => {
    const server = fakeServer({ decide: () => golden });
    const api = new ApiClient("http://svc", server.fetchImpl);
    const response = await api.decide(doc);
    expect(response.verdict.overall).toBe("eligible");
    expect(server.calls).toHaveLength(1);
    expect(server.calls[0].path).toBe("http://svc/v1/decide");
    expect(server.calls[0].method).toBe("POST");
    expect((server.calls[0].body as { id: string }).id).toBe(doc.id);
  });

  it("posts feedback under the document id", async () => {
    const server = fakeServer({});
    const api = new ApiClient("", server.fetchImpl);
    await api.submitFeedback(doc.id, {
      reviewer_id: "rev",
      actions: [],
      annotations: doc.annotations,
    });
    expect(server.calls[0].path).toBe(`/v1/documents/${encodeURIComponent(doc.id)}/feedback`);
  });

  it("fetches documents", async () => {
    const server = fakeServer({ document: doc });
    const api = new ApiClient("", server.fetchImpl);
    const fetched = await api.getDocument(doc.id);
    expect(fetched.text).toBe(doc.text);
  });

  it("raises ApiError with status and detail on rejection", async () => {
    const server = fakeServer({ decideStatus: 422, decide: () => golden });
    const api = new ApiClient("", server.fetchImpl);
    await expect(api.decide(doc)).rejects.toMatchObject({ status: 422 });
    await expect(api.decide(doc)).rejects.toBeInstanceOf(ApiError);
  });
});
