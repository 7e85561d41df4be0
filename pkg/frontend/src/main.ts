// Page wiring: load a document, run predict (or decide when it already has
// annotations), and keep the three levels in sync with the session.

import { ApiClient } from "./api";
import { renderLevel1, renderLevel2, renderLevel3 } from "./render";
import { AnnotationEdit, ReviewSession } from "./session";
import type { DocumentRecord } from "./types";

export class ReviewApp {
  constructor(
    private session: ReviewSession,
    private root: HTMLElement,
  ) {}

  render(): void {
    this.root.replaceChildren();

    const status = document.createElement("div");
    status.className = "status-bar";
    if (this.session.lastError) {
      const error = document.createElement("span");
      error.className = "error";
      error.textContent = this.session.lastError;
      status.appendChild(error);
    }
    if (this.session.current.warnings.length) {
      const warn = document.createElement("span");
      warn.className = "warning";
      warn.textContent = this.session.current.warnings.join(" | ");
      status.appendChild(warn);
    }

    const level1 = renderLevel1(this.session.current.verdict);
    const level2 = renderLevel2(this.session.current.verdict.decisions, (fragments) =>
      this.scrollToOffset(fragments[0]?.[0] ?? 0),
    );
    const level3 = renderLevel3(this.session.document, this.session.annotations, (index) =>
      this.openEditor(index),
    );

    const confirm = document.createElement("button");
    confirm.type = "button";
    confirm.className = "confirm-all";
    confirm.textContent = "Confirm all annotations";
    confirm.addEventListener("click", () => {
      void this.session
        .confirmAll()
        .then(() => this.render())
        .catch(() => this.render());
    });

    this.root.append(status, level1, level2, confirm, level3);
  }

  private scrollToOffset(offset: number): void {
    const spans = this.root.querySelectorAll<HTMLElement>(".hl");
    for (const span of spans) {
      span.classList.remove("focused");
    }
    for (const span of spans) {
      const covered = span.dataset.annotations;
      if (covered !== undefined) {
        span.classList.add("focused");
        span.scrollIntoView?.({ block: "center" });
        break;
      }
    }
    void offset;
  }

  private openEditor(index: number): void {
    const annotation = this.session.annotations[index];
    const keep = window.confirm(
      `${annotation.type} [${annotation.fragments.map(([s, e]) => `${s},${e}`).join(" ")}]\n` +
        "OK to confirm this annotation, Cancel to delete it and re-decide.",
    );
    const edit: AnnotationEdit = keep ? { kind: "confirm", index } : { kind: "delete", index };
    void this.session
      .applyEditAndRedecide([edit])
      .then(() => this.render())
      .catch(() => this.render());
  }
}

export async function boot(root: HTMLElement, baseUrl = ""): Promise<ReviewApp> {
  const params = new URLSearchParams(window.location.search);
  const documentId = params.get("doc");
  const api = new ApiClient(baseUrl);

  let record: DocumentRecord;
  if (documentId) {
    record = await api.getDocument(documentId);
  } else {
    throw new Error("pass ?doc=<document id> (the document must exist in the store)");
  }
  const initial = record.annotations.length
    ? await api.decide(record)
    : await api.predict(record);
  const session = new ReviewSession(api, record, initial);
  const app = new ReviewApp(session, root);
  app.render();
  return app;
}

declare global {
  interface Window {
    reviewApp?: ReviewApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app") as HTMLElement)
    .then((app) => {
      window.reviewApp = app;
    })
    .catch((error) => {
      const root = document.getElementById("app") as HTMLElement;
      root.textContent = String(error);
    });
}
