import { AnnotationApi, type FetchLike } from "./api.js";
import { ReviewController } from "./controller.js";
import { renderApp } from "./render.js";

const POLL_INTERVAL_MS = 3000;

function config(): { baseUrl: string; annotatorId: string } {
  const params = new URLSearchParams(window.location.search);
  return {
    baseUrl: params.get("service") ?? "http://127.0.0.1:8000",
    annotatorId: params.get("annotator") ?? "anonymous",
  };
}

export function bootstrap(root: HTMLElement): ReviewController {
  const { baseUrl, annotatorId } = config();
  const api = new AnnotationApi(baseUrl, fetch.bind(window) as FetchLike, annotatorId);
  const controller = new ReviewController(api);

  controller.onChange(() => {
    root.innerHTML = renderApp(controller.state);
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const tab = target.closest<HTMLElement>("[data-tab]");
    if (tab) controller.setActiveTab(Number(tab.dataset.tab));
  });

  document.addEventListener("keydown", (event) => {
    if ((event.target as HTMLElement)?.tagName === "TEXTAREA") return;
    if (event.key === "f") {
      const current = controller.state.candidates[controller.state.activeTab];
      if (current) {
        const issue = window.prompt("Describe the issue:") ?? "";
        void controller.flagCandidate(current.id, issue);
      }
      return;
    }
    void controller.handleKey(event.key);
  });

  void controller.loadQueries().then(() => {
    const first = controller.state.queries[0];
    if (first) void controller.openQuery(first.id);
  });
  window.setInterval(() => void controller.refreshQueue(), POLL_INTERVAL_MS);
  return controller;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) bootstrap(root);
}
