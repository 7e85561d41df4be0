// Review session state: the current server response, draft annotation edits,
// and the edit -> feedback -> decide loop. Verdicts are never computed here;
// the session only swaps in what the decide endpoint returned.

import { ApiClient } from "./api";
import {
  AnnotationRecord,
  DocumentRecord,
  FeedbackAction,
  PredictResponse,
  TARGET_TYPES,
} from "./types";

export type AnnotationEdit =
  | { kind: "edit"; index: number; annotation: AnnotationRecord }
  | { kind: "add"; annotation: AnnotationRecord }
  | { kind: "delete"; index: number }
  | { kind: "confirm"; index: number };

export function validateAnnotation(
  annotation: AnnotationRecord,
  textLength: number,
): string[] {
  const problems: string[] = [];
  if (!(TARGET_TYPES as readonly string[]).includes(annotation.type)) {
    problems.push(`unknown type ${annotation.type}`);
  }
  if (!annotation.fragments.length) {
    problems.push("no fragments");
  }
  let previousEnd = -1;
  for (const [start, end] of annotation.fragments) {
    if (start >= end) problems.push(`empty fragment [${start},${end})`);
    if (start < 0 || end > textLength) {
      problems.push(`fragment [${start},${end}) outside text of length ${textLength}`);
    }
    if (start < previousEnd) {
      problems.push(`fragment [${start},${end}) overlaps or is unsorted`);
    }
    previousEnd = Math.max(previousEnd, end);
  }
  if (annotation.confidence < 0 || annotation.confidence > 1) {
    problems.push(`confidence ${annotation.confidence} outside [0,1]`);
  }
  return problems;
}

export class ReviewSession {
  current: PredictResponse;
  draftEdits: AnnotationEdit[] = [];
  dirty = false;
  lastError: string | null = null;
  reviewerId: string;

  private inflight: Promise<void> = Promise.resolve();
  private decideInFlight = false;

  constructor(
    private api: ApiClient,
    public document: DocumentRecord,
    initial: PredictResponse,
    reviewerId = "reviewer",
  ) {
    this.current = initial;
    this.reviewerId = reviewerId;
  }

  get annotations(): AnnotationRecord[] {
    return this.current.annotations;
  }

  get isDeciding(): boolean {
    return this.decideInFlight;
  }

  /** The annotation set after applying edits to the current server set. */
  resultingAnnotations(edits: AnnotationEdit[]): AnnotationRecord[] {
    const result: AnnotationRecord[] = this.current.annotations.map((a) => ({
      ...a,
      fragments: a.fragments.map((f) => [...f] as [number, number]),
    }));
    const deleted = new Set<number>();
    for (const edit of edits) {
      if (edit.kind === "edit") {
        result[edit.index] = { ...edit.annotation, source: "human" };
      } else if (edit.kind === "confirm") {
        result[edit.index] = { ...result[edit.index], source: "human" };
      } else if (edit.kind === "delete") {
        deleted.add(edit.index);
      } else {
        result.push({ ...edit.annotation, source: "human" });
      }
    }
    return result.filter((_, i) => !deleted.has(i));
  }

  stageEdit(edit: AnnotationEdit): void {
    this.draftEdits.push(edit);
    this.dirty = true;
  }

  /**
   * Submit the staged (or given) edits: validate locally, send feedback,
   * re-run the decide endpoint, and replace the verdict with the server's.
   * Only one decide call is ever in flight; later submissions queue.
   */
  applyEditAndRedecide(edits?: AnnotationEdit[]): Promise<void> {
    const batch = edits ?? [...this.draftEdits];
    const run = () => this.submitBatch(batch);
    this.inflight = this.inflight.then(run, run);
    return this.inflight;
  }

  private async submitBatch(edits: AnnotationEdit[]): Promise<void> {
    const resulting = this.resultingAnnotations(edits);
    const textLength = this.document.text.length;
    const problems = resulting.flatMap((a) => validateAnnotation(a, textLength));
    if (problems.length) {
      this.lastError = `invalid annotations: ${problems.join("; ")}`;
      throw new Error(this.lastError);
    }

    const actions: FeedbackAction[] = edits.map((edit) => {
      switch (edit.kind) {
        case "edit":
          return { action: "edited", annotation: edit.annotation };
        case "add":
          return { action: "added", annotation: edit.annotation };
        case "confirm":
          return { action: "confirmed", annotation: this.current.annotations[edit.index] };
        case "delete":
          return { action: "deleted", annotation: this.current.annotations[edit.index] };
      }
    });

    this.decideInFlight = true;
    try {
      await this.api.submitFeedback(this.document.id, {
        reviewer_id: this.reviewerId,
        actions,
        annotations: resulting,
      });
      const response = await this.api.decide({
        ...this.document,
        annotations: resulting,
      });
      this.current = response;
      this.draftEdits = this.draftEdits.filter((edit) => !edits.includes(edit));
      this.dirty = this.draftEdits.length > 0;
      this.lastError = null;
    } catch (error) {
      // server rejection: edits stay staged, the error is surfaced
      this.lastError = error instanceof Error ? error.message : String(error);
      throw error;
    } finally {
      this.decideInFlight = false;
    }
  }

  confirmAll(): Promise<void> {
    return this.applyEditAndRedecide(
      this.current.annotations.map((_, index) => ({ kind: "confirm" as const, index })),
    );
  }
}
