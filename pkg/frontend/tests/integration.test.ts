/** Full review round trip against the real review service.
 *
 * Spawns the Python server with a two-annotator corpus, drains the
 * disagreement worklist through the UI controllers, exports, and checks
 * that the export matches the server state and that replaying the
 * correction log over the base source reproduces the reconciled set.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { Worklist } from "../src/reconcile.js";
import type { CorrectionEdit, SpanJson } from "../src/types.js";

const PORT = 8600 + Math.floor(Math.random() * 400);
const BASE = `http://127.0.0.1:${PORT}`;

const S1 = "Median OS was 14.1 months (95% CI 13.2-16.2) in arm A.";
const S2 = "The ORR was 45% in the treatment group.";
const S3 = "The 5-year PFS rate was 70%.";

let server: ChildProcess;
let corpusId: string;

function jsonl(rows: object[]): string {
  return rows.map((r) => JSON.stringify(r)).join("\n") + "\n";
}

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 20000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("review service did not come up");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "review-ui-"));
  const corpusPath = join(dir, "study.jsonl");
  writeFileSync(
    corpusPath,
    jsonl([
      { pmid: "P1", sentence_id: "P1:0", text: S1 },
      { pmid: "P2", sentence_id: "P2:0", text: S2 },
      { pmid: "P3", sentence_id: "P3:0", text: S3 },
    ]),
  );
  writeFileSync(
    join(dir, "labeller1.jsonl"),
    jsonl([
      { sentence_id: "P1:0", spans: [{ start: 14, end: 25, class: "OS" }] },
      { sentence_id: "P2:0", spans: [{ start: 12, end: 15, class: "ORR" }] },
      {
        sentence_id: "P3:0",
        spans: [
          { start: 4, end: 10, class: "time_point" },
          { start: 24, end: 27, class: "PFS_percent" },
        ],
      },
    ]),
  );
  writeFileSync(
    join(dir, "labeller2.jsonl"),
    jsonl([
      {
        sentence_id: "P1:0",
        spans: [
          { start: 14, end: 25, class: "OS" },
          { start: 34, end: 38, class: "OS_CIL" },
          { start: 39, end: 43, class: "OS_CIH" },
        ],
      },
      { sentence_id: "P2:0", spans: [] },
      {
        sentence_id: "P3:0",
        spans: [
          { start: 4, end: 10, class: "time_point" },
          { start: 24, end: 27, class: "OS_percent" },
        ],
      },
    ]),
  );
  corpusId = "study";
  server = spawn(
    "python3",
    [
      "-m",
      "oncoendpoints.cli",
      "serve",
      "--corpus",
      corpusPath,
      "--annotations",
      join(dir, "labeller1.jsonl"),
      join(dir, "labeller2.jsonl"),
      "--port",
      String(PORT),
      "--state-dir",
      join(dir, "state"),
    ],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 30000);

afterAll(() => {
  server?.kill();
});

function spanKey(s: SpanJson): string {
  return `${s.start}:${s.end}:${s.class}`;
}

/** Client-side fold of the correction log over a base annotation map. */
function replay(
  base: Record<string, SpanJson[]>,
  log: { kind: string; edit?: CorrectionEdit }[],
): Record<string, SpanJson[]> {
  const state: Record<string, SpanJson[]> = structuredClone(base);
  for (const event of log) {
    if (event.kind !== "correction" || !event.edit) continue;
    const edit = event.edit;
    const spans = state[edit.sentence_id] ?? (state[edit.sentence_id] = []);
    if (edit.action === "add") {
      spans.push({ start: edit.start!, end: edit.end!, class: edit.class! });
    } else if (edit.action === "remove") {
      const index = spans.findIndex((s) => s.start === edit.start && s.end === edit.end);
      if (index >= 0) spans.splice(index, 1);
    } else if (edit.action === "reclass") {
      const target = spans.find((s) => s.start === edit.start && s.end === edit.end);
      if (target) target.class = edit.new_class!;
    }
    spans.sort((a, b) => a.start - b.start);
  }
  return state;
}

describe("review round trip", () => {
  it("resolves every disagreement, exports, and replay reproduces the state", async () => {
    const api = new ReviewApi(BASE, corpusId);

    const corpora = await api.corpora();
    expect(corpora.map((c) => c.id)).toContain(corpusId);
    expect(corpora[0].sources).toEqual(["labeller1", "labeller2"]);

    // capture the base source before any edits
    const base: Record<string, SpanJson[]> = {};
    for (const sid of ["P1:0", "P2:0", "P3:0"]) {
      const body = await api.annotations(sid, "labeller1");
      base[sid] = body.annotations["labeller1"].map(({ start, end, class: cls }) => ({
        start,
        end,
        class: cls,
      }));
    }

    const worklist = new Worklist(api, "sme");
    await worklist.load();
    expect(worklist.pending.map((i) => i.sentence_id).sort()).toEqual([
      "P1:0",
      "P2:0",
      "P3:0",
    ]);

    await worklist.resolve("P1:0", "keep_b"); // take labeller2's CI bounds
    await worklist.resolve("P2:0", "keep_a"); // keep labeller1's ORR span
    await worklist.resolve("P3:0", "keep_b"); // accept the reclass to OS_percent
    expect(worklist.allReconciled).toBe(true);

    // exported reconciled set equals the server's reconciled state
    const exported = await api.exportView("reconciled_annotations");
    const again = await api.exportView("reconciled_annotations");
    expect(again).toBe(exported); // byte-for-byte stable
    const exportedSpans: Record<string, SpanJson[]> = {};
    for (const line of exported.trim().split("\n")) {
      const row = JSON.parse(line) as { sentence_id: string; spans: SpanJson[] };
      exportedSpans[row.sentence_id] = row.spans;
    }
    const full = JSON.parse(await api.exportView("full")) as {
      version: number;
      log: { kind: string; edit?: CorrectionEdit }[];
      reconciled: Record<string, SpanJson[]>;
    };
    for (const sid of Object.keys(full.reconciled)) {
      expect(exportedSpans[sid].map(spanKey)).toEqual(full.reconciled[sid].map(spanKey));
    }

    // the reconciled content is what the resolutions meant
    expect(exportedSpans["P1:0"].map(spanKey)).toEqual([
      "14:25:OS",
      "34:38:OS_CIL",
      "39:43:OS_CIH",
    ]);
    expect(exportedSpans["P2:0"].map(spanKey)).toEqual(["12:15:ORR"]);
    expect(exportedSpans["P3:0"].map(spanKey)).toEqual([
      "4:10:time_point",
      "24:27:OS_percent",
    ]);

    // replaying the correction log over the base source reproduces it
    const replayed = replay(base, full.log);
    for (const sid of ["P1:0", "P2:0", "P3:0"]) {
      expect(replayed[sid].map(spanKey).sort()).toEqual(
        exportedSpans[sid].map(spanKey).sort(),
      );
    }

    // observation selection flows through to the selected export
    const observations = await api.observations();
    expect(observations.length).toBeGreaterThan(0);
    const target = observations.find((o) => o.endpoint === "OS" && o.ci_low === "13.2");
    expect(target).toBeDefined();
    await api.select(target!.id, true, "sme");
    const selectedCsv = await api.exportView("selected_observations");
    const rows = selectedCsv.trim().split("\n");
    expect(rows).toHaveLength(2);
    expect(rows[1]).toContain("OS");
    expect(rows[1]).toContain("13.2");
  }, 30000);
});
