export type Lang = "en" | "zh"

export const LABELS: Record<Lang, Record<string, string>> = {
  en: {
    chatTab: "Consult",
    lawTab: "Law search",
    caseTab: "Case search",
    send: "Send",
    retry: "Retry",
    inputPlaceholder: "Describe your legal question...",
    searchPlaceholder: "Search terms...",
    search: "Search",
    citations: "Cited provisions",
    noResults: "No results",
    networkError: "Request failed. Check the connection and retry.",
    kLabel: "Results",
    languageToggle: "中文",
  },
  zh: {
    chatTab: "法律咨询",
    lawTab: "法条检索",
    caseTab: "案例检索",
    send: "发送",
    retry: "重试",
    inputPlaceholder: "请描述您的法律问题…",
    searchPlaceholder: "输入检索词…",
    search: "检索",
    citations: "引用法条",
    noResults: "没有结果",
    networkError: "请求失败，请检查连接后重试。",
    kLabel: "结果数",
    languageToggle: "English",
  },
}
