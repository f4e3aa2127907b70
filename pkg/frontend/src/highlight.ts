/** Segment model for layered span highlighting.
 *
 * The server's character offsets are authoritative: segments are produced
 * by cutting the sentence at span boundaries, never by re-tokenizing, so
 * what the reviewer sees is exactly what the server stored.
 */

import type { SpanJson } from "./types.js";

export interface LayeredSpan extends SpanJson {
  source: string;
}

export interface Segment {
  start: number;
  end: number;
  text: string;
  /** spans covering this segment, one entry per (source, class) layer */
  layers: { source: string; class: string }[];
}

/** Cut text into segments at every span boundary of every source. */
export function segment(text: string, layers: Record<string, SpanJson[]>): Segment[] {
  const cuts = new Set<number>([0, text.length]);
  const flattened: LayeredSpan[] = [];
  for (const [source, spans] of Object.entries(layers)) {
    for (const span of spans) {
      if (span.start < 0 || span.end > text.length || span.start >= span.end) {
        throw new RangeError(
          `span (${span.start}, ${span.end}) out of bounds for sentence of length ${text.length}`,
        );
      }
      cuts.add(span.start);
      cuts.add(span.end);
      flattened.push({ ...span, source });
    }
  }
  const points = [...cuts].sort((a, b) => a - b);
  const segments: Segment[] = [];
  for (let i = 0; i + 1 < points.length; i++) {
    const [start, end] = [points[i], points[i + 1]];
    if (start === end) continue;
    const covering = flattened
      .filter((s) => s.start <= start && end <= s.end)
      .map((s) => ({ source: s.source, class: s.class }))
      .sort((a, b) => a.source.localeCompare(b.source) || a.class.localeCompare(b.class));
    segments.push({ start, end, text: text.slice(start, end), layers: covering });
  }
  return segments;
}

/** Concatenating segment texts must reproduce the sentence exactly. */
export function reassemble(segments: Segment[]): string {
  return segments.map((s) => s.text).join("");
}

export interface DiffMark {
  start: number;
  end: number;
  kind: "only_a" | "only_b" | "conflict";
}

/** Diff markers for side-by-side disagreement rendering. */
export function diffMarks(
  onlyA: SpanJson[],
  onlyB: SpanJson[],
  conflicts: { a: SpanJson; b: SpanJson }[],
): DiffMark[] {
  const marks: DiffMark[] = [];
  const conflictOffsets = new Set(conflicts.map((c) => `${c.a.start}:${c.a.end}`));
  for (const c of conflicts) {
    marks.push({ start: c.a.start, end: c.a.end, kind: "conflict" });
  }
  for (const s of onlyA) {
    if (!conflictOffsets.has(`${s.start}:${s.end}`)) {
      marks.push({ start: s.start, end: s.end, kind: "only_a" });
    }
  }
  for (const s of onlyB) {
    if (!conflictOffsets.has(`${s.start}:${s.end}`)) {
      marks.push({ start: s.start, end: s.end, kind: "only_b" });
    }
  }
  return marks.sort((a, b) => a.start - b.start || a.end - b.end);
}

/** Snap a user text selection to the nearest covered character range.
 *
 * Trims surrounding whitespace and rejects empty or out-of-bounds drags;
 * no tokenization happens client-side.
 */
export function snapSelection(
  text: string,
  start: number,
  end: number,
): { start: number; end: number } | null {
  let lo = Math.max(0, Math.min(start, end));
  let hi = Math.min(text.length, Math.max(start, end));
  while (lo < hi && text[lo] === " ") lo++;
  while (hi > lo && text[hi - 1] === " ") hi--;
  return lo < hi ? { start: lo, end: hi } : null;
}
