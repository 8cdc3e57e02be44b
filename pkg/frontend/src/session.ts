import type { Citation, IntentName } from "./api"

export interface UiMessage {
  role: "user" | "assistant"
  text: string
  intentBadge: IntentName | null
  citations: Citation[]
}

const STORAGE_KEY = "lawdesk.session_id"

// Conversation state for one browser tab. Assistant messages are appended
// only from successful chat responses and carry the citation list exactly
// as the server sent it.
export class ChatSession {
  messages: UiMessage[] = []
  pending = false
  private sessionId: string | null

  constructor(private storage: Pick<Storage, "getItem" | "setItem"> | null = null) {
    this.sessionId = storage?.getItem(STORAGE_KEY) ?? null
  }

  get id(): string | null {
    return this.sessionId
  }

  adopt(sessionId: string): void {
    this.sessionId = sessionId
    this.storage?.setItem(STORAGE_KEY, sessionId)
  }

  addUser(text: string): UiMessage {
    const message: UiMessage = { role: "user", text, intentBadge: null, citations: [] }
    this.messages.push(message)
    return message
  }

  addAssistant(text: string, intent: IntentName, citations: Citation[]): UiMessage {
    const message: UiMessage = { role: "assistant", text, intentBadge: intent, citations }
    this.messages.push(message)
    return message
  }
}
