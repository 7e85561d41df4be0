// The three explanation levels.
//
// Level 1: the document verdict as one prominent state.
// Level 2: per-criterion decisions, grouped by whether they argue for or
//          against eligibility, with chosen value, confidence, alternatives
//          (kept in server order) and evidence locations.
// Level 3: the document text with type-colored highlights for every
//          annotation; overlapping annotations layer; click opens an edit
//          affordance.

import type {
  AnnotationRecord,
  Decision,
  DocumentRecord,
  Fragment,
  Verdict,
} from "./types";
import { TARGET_TYPES } from "./types";

const TYPE_COLORS: Record<string, string> = {};
TARGET_TYPES.forEach((type, i) => {
  TYPE_COLORS[type] = `hsl(${Math.round((i * 360) / TARGET_TYPES.length)}, 70%, 82%)`;
});

export function typeColor(type: string): string {
  return TYPE_COLORS[type] ?? "hsl(0, 0%, 85%)";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

// -- level 1 -----------------------------------------------------------------

export function renderLevel1(verdict: Verdict): HTMLElement {
  const root = el("div", `level1 level1-${verdict.overall}`);
  const label = el("span", "level1-state", verdict.overall.toUpperCase());
  root.appendChild(label);
  if (verdict.overall === "review") {
    const open = verdict.decisions.filter((d) => d.outcome !== "eligible").length;
    root.appendChild(el("span", "level1-reasons", `${open} criterion(s) need attention`));
  }
  return root;
}

// -- level 2 -----------------------------------------------------------------

export type NavigateHandler = (fragments: Fragment[]) => void;

function renderLocation(fragments: Fragment[], onNavigate?: NavigateHandler): HTMLElement {
  const button = el(
    "button",
    "location",
    fragments.map(([s, e]) => `[${s},${e})`).join(" "),
  );
  button.type = "button";
  button.addEventListener("click", () => onNavigate?.(fragments));
  return button;
}

function renderDecision(decision: Decision, onNavigate?: NavigateHandler): HTMLElement {
  const row = el("div", `decision decision-${decision.outcome}`);
  row.dataset.criterion = decision.criterion;

  const head = el("div", "decision-head");
  head.appendChild(el("span", "criterion", decision.criterion));
  head.appendChild(el("span", `outcome outcome-${decision.outcome}`, decision.outcome));
  row.appendChild(head);

  if (decision.outcome === "review" && decision.chosen_value === null) {
    head.appendChild(el("span", "needs-review", "needs review"));
  }

  const body = el("div", "decision-body");
  if (decision.chosen_value !== null) {
    const chosen = el("div", "chosen");
    chosen.appendChild(el("span", "value", decision.chosen_value));
    chosen.appendChild(el("span", "confidence", decision.confidence.toFixed(2)));
    if (decision.supporting_fragments.length) {
      chosen.appendChild(renderLocation(decision.supporting_fragments, onNavigate));
    }
    body.appendChild(chosen);
  }

  if (decision.alternatives.length) {
    const list = el("ul", "alternatives");
    // server order is authoritative: no client-side re-sorting
    for (const alternative of decision.alternatives) {
      const item = el("li", "alternative");
      item.appendChild(el("span", "value", alternative.value));
      item.appendChild(el("span", "confidence", alternative.confidence.toFixed(2)));
      if (alternative.fragments.length) {
        item.appendChild(renderLocation(alternative.fragments, onNavigate));
      }
      list.appendChild(item);
    }
    body.appendChild(list);
  }

  const explanation = el("div", "explanation", decision.explanation);
  const trace = decision.explanation.match(/\[path: (.*)\]$/);
  if (trace) {
    explanation.textContent = decision.explanation.slice(0, trace.index).trim();
    const steps = el("ol", "trace");
    for (const step of trace[1].split("; ")) {
      steps.appendChild(el("li", "trace-step", step));
    }
    body.appendChild(steps);
  }
  body.insertBefore(explanation, body.firstChild);

  row.appendChild(body);
  return row;
}

export function renderLevel2(decisions: Decision[], onNavigate?: NavigateHandler): HTMLElement {
  const root = el("div", "level2");
  const groups: [string, string, (d: Decision) => boolean][] = [
    ["for", "Argues for eligibility", (d) => d.outcome === "eligible"],
    ["against", "Argues against eligibility", (d) => d.outcome === "ineligible"],
    ["open", "Needs review", (d) => d.outcome === "review"],
  ];
  for (const [key, title, match] of groups) {
    const matching = decisions.filter(match);
    if (!matching.length) continue;
    const section = el("section", `group group-${key}`);
    section.appendChild(el("h3", "group-title", title));
    for (const decision of matching) {
      section.appendChild(renderDecision(decision, onNavigate));
    }
    root.appendChild(section);
  }
  return root;
}

// -- level 3 -----------------------------------------------------------------

export type EditHandler = (annotationIndex: number) => void;

type Segment = {
  start: number;
  end: number;
  covering: number[]; // indexes into the annotation list
};

/** Split [0, text.length) at every fragment boundary and record coverage. */
export function computeSegments(textLength: number, annotations: AnnotationRecord[]): Segment[] {
  const boundaries = new Set<number>([0, textLength]);
  annotations.forEach((annotation) => {
    for (const [start, end] of annotation.fragments) {
      boundaries.add(Math.max(0, start));
      boundaries.add(Math.min(textLength, end));
    }
  });
  const sorted = [...boundaries].sort((a, b) => a - b);
  const segments: Segment[] = [];
  for (let i = 0; i + 1 < sorted.length; i++) {
    const [start, end] = [sorted[i], sorted[i + 1]];
    if (start >= end) continue;
    const covering: number[] = [];
    annotations.forEach((annotation, index) => {
      if (annotation.fragments.some(([s, e]) => s <= start && end <= e)) {
        covering.push(index);
      }
    });
    segments.push({ start, end, covering });
  }
  return segments;
}

export function renderLevel3(
  documentRecord: DocumentRecord,
  annotations: AnnotationRecord[],
  onEdit?: EditHandler,
): HTMLElement {
  const root = el("div", "level3");
  const pre = el("pre", "document-text");
  for (const segment of computeSegments(documentRecord.text.length, annotations)) {
    const textSlice = documentRecord.text.slice(segment.start, segment.end);
    if (!segment.covering.length) {
      pre.appendChild(document.createTextNode(textSlice));
      continue;
    }
    const span = el("span", "hl", textSlice);
    const types = segment.covering.map((i) => annotations[i].type);
    span.dataset.types = types.join("+");
    span.dataset.annotations = segment.covering.join(",");
    span.style.backgroundColor = typeColor(types[0]);
    if (segment.covering.length > 1) {
      // layered overlap: second color as an underline edge
      span.classList.add("hl-multi");
      span.style.boxShadow = `inset 0 -3px 0 0 ${typeColor(types[1])}`;
    }
    span.title = segment.covering
      .map((i) => `${annotations[i].type} (${annotations[i].confidence.toFixed(2)})`)
      .join("\n");
    span.addEventListener("click", () => onEdit?.(segment.covering[0]));
    pre.appendChild(span);
  }
  root.appendChild(pre);
  return root;
}
