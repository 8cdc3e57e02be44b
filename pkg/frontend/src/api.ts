// Typed client for the consultation service. Every method maps onto one
// endpoint and returns the parsed JSON body unchanged: the UI must never
// reshape citation or hit payloads.

export type IntentName = "LawQuestion" | "LawSearch" | "CaseSearch" | "General"

export interface Citation {
  id: string
  law_name: string
  article_no: string
  snippet: string
  score: number
}

export interface ChatResponse {
  session_id: string
  turn_id: number
  intent: IntentName
  answer: string
  citations: Citation[]
  latency_ms: number
}

export interface LawHit {
  id: string
  law_name: string
  article_no: string
  text: string
  score: number
  rank: number
}

export interface CaseHit {
  id: string
  court: string
  cause_of_action: string
  text: string
  score: number
  rank: number
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message)
    this.name = "ApiError"
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "unknown"
  let message = `HTTP ${resp.status}`
  try {
    const body = await resp.json()
    if (body && typeof body.code === "string") code = body.code
    if (body && typeof body.message === "string") message = body.message
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ApiError(resp.status, code, message)
}

export class LawdeskClient {
  constructor(private baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path)
    if (!resp.ok) throw await parseError(resp)
    return (await resp.json()) as T
  }

  async chat(message: string, sessionId?: string): Promise<ChatResponse> {
    const body: Record<string, string> = { message }
    if (sessionId) body.session_id = sessionId
    const resp = await fetch(this.baseUrl + "/v1/chat", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    })
    if (!resp.ok) throw await parseError(resp)
    return (await resp.json()) as ChatResponse
  }

  async searchLaw(q: string, k = 3): Promise<LawHit[]> {
    const params = new URLSearchParams({ q, k: String(k) })
    const body = await this.get<{ hits: LawHit[] }>(`/v1/law/search?${params}`)
    return body.hits
  }

  async searchCases(q: string, k = 10): Promise<CaseHit[]> {
    const params = new URLSearchParams({ q, k: String(k) })
    const body = await this.get<{ hits: CaseHit[] }>(`/v1/case/search?${params}`)
    return body.hits
  }
}

// The server rejects k outside 1..50; mirror that bound client-side so the
// selector can never produce a 400.
export function clampK(value: number, fallback: number): number {
  if (!Number.isFinite(value)) return fallback
  return Math.min(50, Math.max(1, Math.round(value)))
}
