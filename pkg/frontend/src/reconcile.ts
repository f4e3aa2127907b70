/** Disagreement worklist controller.
 *
 * Each queue item shows both annotators' readings; resolving applies the
 * chosen spans through the corrections endpoint (keep A is a confirm,
 * keep B adds B's extra spans and reclasses conflicts) and the item
 * flips to resolved. The queue drains to an "all reconciled" state.
 */

import type { ReviewApi } from "./api.js";
import type { DisagreementItem, SpanJson } from "./types.js";

export type Resolution = "keep_a" | "keep_b";

export class Worklist {
  items: DisagreementItem[] = [];
  sources: string[] = [];

  constructor(
    private api: ReviewApi,
    private reviewer: string,
  ) {}

  async load(): Promise<void> {
    const body = await this.api.disagreements();
    this.items = body.items;
    this.sources = body.sources;
  }

  get pending(): DisagreementItem[] {
    return this.items.filter((i) => i.status === "pending");
  }

  get allReconciled(): boolean {
    return this.pending.length === 0;
  }

  /** Resolve one sentence toward annotator A's or B's reading. */
  async resolve(sentenceId: string, choice: Resolution): Promise<void> {
    const item = this.items.find((i) => i.sentence_id === sentenceId);
    if (!item) throw new Error(`no worklist item for ${sentenceId}`);
    const edits = planResolution(item, choice, this.reviewer);
    for (const edit of edits) {
      await this.api.correction(edit);
    }
    await this.load();
  }

  async resolveAll(choice: Resolution): Promise<void> {
    for (const item of [...this.pending]) {
      await this.resolve(item.sentence_id, choice);
    }
  }
}

/** The correction edits that realize a keep-A/keep-B decision.
 *
 * The reconciled set starts from the base source (annotator A), so keeping
 * A only confirms; keeping B removes A-only spans, adds B-only spans, and
 * reclasses same-offset conflicts.
 */
export function planResolution(
  item: DisagreementItem,
  choice: Resolution,
  reviewer: string,
): import("./types.js").CorrectionEdit[] {
  const sid = item.sentence_id;
  const author = reviewer;
  if (choice === "keep_a") {
    return [{ sentence_id: sid, action: "confirm", author }];
  }
  const edits: import("./types.js").CorrectionEdit[] = [];
  for (const conflict of item.conflicts) {
    edits.push({
      sentence_id: sid,
      action: "reclass",
      start: conflict.a.start,
      end: conflict.a.end,
      new_class: conflict.b.class,
      author,
    });
  }
  for (const span of item.only_a) {
    edits.push({
      sentence_id: sid,
      action: "remove",
      start: span.start,
      end: span.end,
      class: span.class,
      author,
    });
  }
  for (const span of item.only_b) {
    edits.push(addEdit(sid, span, author));
  }
  if (edits.length === 0) {
    edits.push({ sentence_id: sid, action: "confirm", author });
  }
  return edits;
}

export function addEdit(
  sentenceId: string,
  span: SpanJson,
  author: string,
): import("./types.js").CorrectionEdit {
  return {
    sentence_id: sentenceId,
    action: "add",
    start: span.start,
    end: span.end,
    class: span.class,
    author,
  };
}
