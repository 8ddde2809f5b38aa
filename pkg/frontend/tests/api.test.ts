import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api";

function jsonResponse(body: unknown, status = 200) {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function mockFetch(impl: (url: string, init?: RequestInit) => Response) {
  const spy = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) =>
    impl(String(url), init),
  );
  vi.stubGlobal("fetch", spy);
  return spy;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

async function loggedInClient() {
  mockFetch(() => jsonResponse({ token: "tok123", expires_at: 1 }));
  const api = new ApiClient();
  await api.login("doc", "longenough");
  return api;
}

describe("authentication", () => {
  it("login posts credentials and stores the token", async () => {
    const spy = mockFetch(() => jsonResponse({ token: "tok123", expires_at: 99 }));
    const api = new ApiClient();
    const session = await api.login("doc", "longenough");
    expect(session.token).toBe("tok123");
    expect(api.loggedIn).toBe(true);
    const [url, init] = spy.mock.calls[0];
    expect(String(url)).toBe("/auth/login");
    expect(init?.method).toBe("POST");
    expect(JSON.parse(init?.body as string)).toEqual({
      username: "doc",
      password: "longenough",
    });
  });

  it("subsequent requests carry the bearer token", async () => {
    const api = await loggedInClient();
    const spy = mockFetch(() => jsonResponse({ name: "A" }));
    await api.getRecord("P1", "2024-01-01", "patient");
    const headers = spy.mock.calls[0][1]?.headers as Record<string, string>;
    expect(headers["Authorization"]).toBe("Bearer tok123");
  });

  it("logout drops the token", async () => {
    const api = await loggedInClient();
    api.logout();
    expect(api.loggedIn).toBe(false);
  });
});

describe("error handling", () => {
  it("raises ApiError with the service's code/message/details body", async () => {
    mockFetch(() =>
      jsonResponse(
        { code: "not-found", message: "no such exam", details: {} },
        404,
      ),
    );
    const api = new ApiClient();
    try {
      await api.getExam("P1", "2024-01-01");
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(404);
      expect((err as ApiError).body.code).toBe("not-found");
    }
  });

  it("copes with non-JSON error bodies", async () => {
    mockFetch(() => new Response("boom", { status: 500, statusText: "Server Error" }));
    const api = new ApiClient();
    await expect(api.getExam("P1", "2024-01-01")).rejects.toMatchObject({
      status: 500,
      body: { code: "http-error" },
    });
  });
});

describe("record endpoints", () => {
  it("putRecord serializes the record to the category URL", async () => {
    const api = await loggedInClient();
    const record = { key: { patient_id: "P1", exam_date: "2024-01-01" }, name: "A" };
    const spy = mockFetch(() => jsonResponse(record));
    await api.putRecord("P1", "2024-01-01", "patient", record);
    const [url, init] = spy.mock.calls[0];
    expect(String(url)).toBe("/patients/P1/exams/2024-01-01/patient");
    expect(init?.method).toBe("PUT");
    expect(JSON.parse(init?.body as string)).toEqual(record);
  });

  it("URL-encodes path segments", async () => {
    const api = await loggedInClient();
    const spy = mockFetch(() => jsonResponse({}));
    await api.getExam("P 1/x", "2024-01-01");
    expect(String(spy.mock.calls[0][0])).toBe("/patients/P%201%2Fx/exams/2024-01-01");
  });

  it("deleteExam returns the rows_removed count", async () => {
    const api = await loggedInClient();
    mockFetch(() => jsonResponse({ rows_removed: 17 }));
    expect(await api.deleteExam("P1", "2024-01-01")).toEqual({ rows_removed: 17 });
  });
});

describe("search", () => {
  it("builds the query string from only the set fields", async () => {
    const api = await loggedInClient();
    const spy = mockFetch(() => jsonResponse({ results: [] }));
    await api.search({ name: "john", date_from: "2024-01-01" });
    expect(String(spy.mock.calls[0][0])).toBe("/search?name=john&date_from=2024-01-01");
  });

  it("unwraps the results array", async () => {
    const api = await loggedInClient();
    const hit = { patient_id: "P1", exam_date: "2024-01-01", name: "A", diagnosis: "" };
    mockFetch(() => jsonResponse({ results: [hit] }));
    expect(await api.search({ patient_id: "P1" })).toEqual([hit]);
  });
});

describe("charts and reports", () => {
  it("fetchChart returns SVG text and passes filters", async () => {
    const api = await loggedInClient();
    const spy = mockFetch(() => new Response("<svg></svg>", { status: 200 }));
    const svg = await api.fetchChart("P1", "2024-01-01", "audiogram", {
      ear: "right",
      categories: ["ac_unmasked", "bc_unmasked"],
    });
    expect(svg).toBe("<svg></svg>");
    expect(String(spy.mock.calls[0][0])).toBe(
      "/patients/P1/exams/2024-01-01/charts/audiogram.svg?ear=right&categories=ac_unmasked%2Cbc_unmasked",
    );
  });

  it("fetchChart surfaces domain errors", async () => {
    const api = await loggedInClient();
    mockFetch(() =>
      jsonResponse({ code: "empty-chart", message: "nothing to draw", details: {} }, 422),
    );
    await expect(api.fetchChart("P1", "2024-01-01", "laddergram")).rejects.toMatchObject({
      body: { code: "empty-chart" },
    });
  });

  it("fetchReportPdf returns a blob", async () => {
    const api = await loggedInClient();
    mockFetch(() => new Response(new Uint8Array([37, 80, 68, 70]), { status: 200 }));
    const blob = await api.fetchReportPdf("P1", "2024-01-01");
    expect(blob.size).toBe(4);
  });
});
