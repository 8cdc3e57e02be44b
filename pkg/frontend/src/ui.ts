import {
  ApiError,
  CaseHit,
  ChatResponse,
  LawHit,
  LawdeskClient,
  clampK,
} from "./api"
import { LABELS, Lang } from "./labels"
import { ChatSession, UiMessage } from "./session"

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

// Citation fields are written with textContent only: the panel must show
// the API payload byte for byte, never markup-interpreted or reformatted.
export function renderCitations(message: UiMessage, label: string): HTMLElement {
  const panel = el("details", "citations")
  const summary = el("summary", undefined, `${label} (${message.citations.length})`)
  panel.appendChild(summary)
  const list = el("ul", "citation-list")
  for (const citation of message.citations) {
    const item = el("li", "citation")
    item.dataset.id = citation.id
    item.appendChild(el("span", "citation-id", citation.id))
    item.appendChild(el("span", "citation-title", citation.law_name))
    item.appendChild(el("span", "citation-article", citation.article_no))
    item.appendChild(el("span", "citation-snippet", citation.snippet))
    list.appendChild(item)
  }
  panel.appendChild(list)
  return panel
}

export function renderMessage(message: UiMessage, lang: Lang): HTMLElement {
  const node = el("li", `message ${message.role}`)
  if (message.intentBadge) {
    node.appendChild(el("span", "intent-badge", message.intentBadge))
  }
  node.appendChild(el("p", "text", message.text))
  if (message.role === "assistant") {
    node.appendChild(renderCitations(message, LABELS[lang].citations))
  }
  return node
}

export class ChatView {
  readonly root: HTMLElement
  readonly list: HTMLUListElement
  readonly input: HTMLInputElement
  readonly sendButton: HTMLButtonElement
  private errorBubble: HTMLElement | null = null

  constructor(
    private client: LawdeskClient,
    private session: ChatSession,
    private lang: () => Lang,
  ) {
    this.root = el("section", "chat-view")
    this.list = el("ul", "message-list")
    this.input = el("input", "chat-input")
    this.input.type = "text"
    this.sendButton = el("button", "send")
    this.sendButton.type = "button"
    const form = el("div", "chat-form")
    form.append(this.input, this.sendButton)
    this.root.append(this.list, form)

    this.input.addEventListener("input", () => this.syncControls())
    this.sendButton.addEventListener("click", () => void this.send())
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.send()
    })
    this.applyLabels()
    this.syncControls()
  }

  applyLabels(): void {
    const labels = LABELS[this.lang()]
    this.input.placeholder = labels.inputPlaceholder
    this.sendButton.textContent = labels.send
  }

  syncControls(): void {
    this.sendButton.disabled = this.session.pending || this.input.value.trim() === ""
    this.input.disabled = this.session.pending
  }

  insertReference(text: string): void {
    const current = this.input.value
    this.input.value = current ? `${current} ${text}` : text
    this.syncControls()
    this.input.focus()
  }

  private renderAll(): void {
    this.list.replaceChildren(
      ...this.session.messages.map((m) => renderMessage(m, this.lang())),
    )
  }

  private showError(text: string, retry: () => void): void {
    this.clearError()
    const bubble = el("li", "message error")
    bubble.appendChild(el("p", "text", text))
    const retryButton = el("button", "retry", LABELS[this.lang()].retry)
    retryButton.addEventListener("click", retry)
    bubble.appendChild(retryButton)
    this.list.appendChild(bubble)
    this.errorBubble = bubble
  }

  private clearError(): void {
    this.errorBubble?.remove()
    this.errorBubble = null
  }

  async send(textOverride?: string): Promise<ChatResponse | null> {
    const text = (textOverride ?? this.input.value).trim()
    if (!text || this.session.pending) return null
    this.clearError()
    this.session.pending = true
    if (textOverride === undefined) {
      this.session.addUser(text)
      this.input.value = ""
    }
    this.syncControls()
    this.renderAll()
    try {
      const resp = await this.client.chat(text, this.session.id ?? undefined)
      this.session.adopt(resp.session_id)
      this.session.addAssistant(resp.answer, resp.intent, resp.citations)
      this.renderAll()
      return resp
    } catch (err) {
      if (err instanceof ApiError && err.status < 500) {
        this.showError(err.message, () => this.clearError())
      } else {
        this.showError(LABELS[this.lang()].networkError, () => void this.send(text))
      }
      return null
    } finally {
      this.session.pending = false
      this.syncControls()
    }
  }
}

interface SearchConfig<H> {
  defaultK: number
  fetcher: (q: string, k: number) => Promise<H[]>
  renderHit: (hit: H) => HTMLElement
}

export class SearchView<H extends { rank: number }> {
  readonly root: HTMLElement
  readonly input: HTMLInputElement
  readonly kInput: HTMLInputElement
  readonly button: HTMLButtonElement
  readonly results: HTMLOListElement
  readonly status: HTMLElement

  constructor(
    private config: SearchConfig<H>,
    private lang: () => Lang,
  ) {
    this.root = el("section", "search-view")
    this.input = el("input", "search-input")
    this.input.type = "text"
    this.kInput = el("input", "k-input")
    this.kInput.type = "number"
    this.kInput.min = "1"
    this.kInput.max = "50"
    this.kInput.value = String(config.defaultK)
    this.button = el("button", "search")
    this.button.type = "button"
    this.results = el("ol", "results")
    this.status = el("p", "status")
    const bar = el("div", "search-bar")
    bar.append(this.input, this.kInput, this.button)
    this.root.append(bar, this.results, this.status)
    this.button.addEventListener("click", () => void this.search())
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.search()
    })
    this.kInput.addEventListener("change", () => {
      this.kInput.value = String(clampK(Number(this.kInput.value), config.defaultK))
    })
    this.applyLabels()
  }

  applyLabels(): void {
    const labels = LABELS[this.lang()]
    this.input.placeholder = labels.searchPlaceholder
    this.button.textContent = labels.search
    this.kInput.title = labels.kLabel
  }

  async search(): Promise<H[] | null> {
    const q = this.input.value.trim()
    if (!q) return null
    const k = clampK(Number(this.kInput.value), this.config.defaultK)
    this.kInput.value = String(k)
    this.status.textContent = ""
    try {
      const hits = await this.config.fetcher(q, k)
      this.results.replaceChildren(...hits.map((h) => this.config.renderHit(h)))
      if (hits.length === 0) {
        this.status.textContent = LABELS[this.lang()].noResults
      }
      return hits
    } catch (err) {
      this.results.replaceChildren()
      this.status.textContent =
        err instanceof ApiError ? err.message : LABELS[this.lang()].networkError
      return null
    }
  }
}

export function renderLawHit(hit: LawHit, onPick?: (ref: string) => void): HTMLElement {
  const item = el("li", "hit law-hit")
  item.dataset.id = hit.id
  item.dataset.rank = String(hit.rank)
  const title = el("a", "hit-title", `${hit.law_name} ${hit.article_no}`)
  title.href = "#"
  title.addEventListener("click", (event) => {
    event.preventDefault()
    onPick?.(`${hit.law_name} ${hit.article_no}`)
  })
  item.appendChild(title)
  item.appendChild(el("span", "hit-score", hit.score.toFixed(4)))
  item.appendChild(el("p", "hit-text", hit.text))
  return item
}

export function renderCaseHit(hit: CaseHit): HTMLElement {
  const item = el("li", "hit case-hit")
  item.dataset.id = hit.id
  item.dataset.rank = String(hit.rank)
  item.appendChild(el("span", "hit-title", `${hit.court} · ${hit.cause_of_action}`))
  item.appendChild(el("span", "hit-score", hit.score.toFixed(4)))
  item.appendChild(el("p", "hit-text", hit.text))
  return item
}

export interface App {
  chat: ChatView
  lawSearch: SearchView<LawHit>
  caseSearch: SearchView<CaseHit>
  setLang: (lang: Lang) => void
  root: HTMLElement
}

export function createApp(
  client: LawdeskClient,
  storage: Pick<Storage, "getItem" | "setItem"> | null = null,
): App {
  let lang: Lang = "en"
  const getLang = () => lang

  const session = new ChatSession(storage)
  const chat = new ChatView(client, session, getLang)
  const lawSearch = new SearchView<LawHit>(
    {
      defaultK: 3,
      fetcher: (q, k) => client.searchLaw(q, k),
      renderHit: (hit) => renderLawHit(hit, (ref) => chat.insertReference(ref)),
    },
    getLang,
  )
  const caseSearch = new SearchView<CaseHit>(
    {
      defaultK: 10,
      fetcher: (q, k) => client.searchCases(q, k),
      renderHit: renderCaseHit,
    },
    getLang,
  )

  const root = el("main", "app")
  const nav = el("nav", "tabs")
  const panes: Record<string, HTMLElement> = {
    chatTab: chat.root,
    lawTab: lawSearch.root,
    caseTab: caseSearch.root,
  }
  const tabButtons = new Map<string, HTMLButtonElement>()
  for (const key of Object.keys(panes)) {
    const button = el("button", "tab")
    button.dataset.tab = key
    button.addEventListener("click", () => {
      for (const [k, pane] of Object.entries(panes)) {
        pane.hidden = k !== key
        tabButtons.get(k)?.classList.toggle("active", k === key)
      }
    })
    tabButtons.set(key, button)
    nav.appendChild(button)
  }
  const langButton = el("button", "lang-toggle")
  nav.appendChild(langButton)

  const applyLabels = () => {
    const labels = LABELS[lang]
    for (const [key, button] of tabButtons) button.textContent = labels[key]
    langButton.textContent = labels.languageToggle
    chat.applyLabels()
    lawSearch.applyLabels()
    caseSearch.applyLabels()
  }
  const setLang = (next: Lang) => {
    lang = next
    applyLabels()
  }
  langButton.addEventListener("click", () => setLang(lang === "en" ? "zh" : "en"))

  applyLabels()
  root.append(nav, chat.root, lawSearch.root, caseSearch.root)
  lawSearch.root.hidden = true
  caseSearch.root.hidden = true
  tabButtons.get("chatTab")?.classList.add("active")
  return { chat, lawSearch, caseSearch, setLang, root }
}
