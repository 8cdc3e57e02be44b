import { LawdeskClient } from "./api"
import { createApp } from "./ui"

// Same-origin by default; set window.LAWDESK_API_BASE before this script
// loads to point the UI at a remote service.
declare global {
  interface Window {
    LAWDESK_API_BASE?: string
  }
}

const client = new LawdeskClient(window.LAWDESK_API_BASE ?? "")
const app = createApp(client, window.localStorage)
document.getElementById("root")!.appendChild(app.root)
