import { afterEach, describe, expect, it, vi } from "vitest"

import { ApiError, LawdeskClient, clampK } from "../src/api"

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  })
}

afterEach(() => {
  vi.unstubAllGlobals()
})

describe("LawdeskClient.chat", () => {
  it("posts the message and returns the body unchanged", async () => {
    const payload = {
      session_id: "abc",
      turn_id: 1,
      intent: "General",
      answer: "hello",
      citations: [],
      latency_ms: 2.5,
    }
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(payload))
    vi.stubGlobal("fetch", fetchMock)
    const client = new LawdeskClient("http://api")
    const resp = await client.chat("hi")
    expect(resp).toEqual(payload)
    expect(fetchMock).toHaveBeenCalledWith("http://api/v1/chat", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ message: "hi" }),
    })
  })

  it("includes the session id when present", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ citations: [] }))
    vi.stubGlobal("fetch", fetchMock)
    await new LawdeskClient().chat("hi", "sess-9")
    const body = JSON.parse(fetchMock.mock.calls[0][1].body)
    expect(body.session_id).toBe("sess-9")
  })

  it("raises ApiError with the server's code on 4xx", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(
        jsonResponse({ code: "bad_request", message: "message must be non-empty", request_id: "r" }, 400),
      ),
    )
    const err = await new LawdeskClient().chat("x").catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.status).toBe(400)
    expect(err.code).toBe("bad_request")
  })
})

describe("search endpoints", () => {
  it("builds the law search query string", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ hits: [] }))
    vi.stubGlobal("fetch", fetchMock)
    await new LawdeskClient("http://api").searchLaw("民法 第一条", 5)
    const url = fetchMock.mock.calls[0][0] as string
    expect(url.startsWith("http://api/v1/law/search?")).toBe(true)
    const params = new URLSearchParams(url.split("?")[1])
    expect(params.get("q")).toBe("民法 第一条")
    expect(params.get("k")).toBe("5")
  })

  it("returns hits arrays untouched", async () => {
    const hits = [
      { id: "C1", court: "法院", cause_of_action: "合同", text: "body", score: 1.25, rank: 1 },
    ]
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(jsonResponse({ hits })))
    expect(await new LawdeskClient().searchCases("合同")).toEqual(hits)
  })
})

describe("clampK", () => {
  it("mirrors the server's 1..50 bound", () => {
    expect(clampK(0, 3)).toBe(1)
    expect(clampK(51, 3)).toBe(50)
    expect(clampK(7, 3)).toBe(7)
    expect(clampK(Number.NaN, 3)).toBe(3)
    expect(clampK(2.6, 3)).toBe(3)
  })
})
