/** Browser entry: wires the API client to a minimal review screen. */

import { ReviewApi } from "./api.js";
import { colorFor, legend } from "./colors.js";
import { segment } from "./highlight.js";
import { Worklist } from "./reconcile.js";
import type { SentenceJson } from "./types.js";

const SERVER = (window as { REVIEW_SERVER?: string }).REVIEW_SERVER ?? "";
const REVIEWER = "sme";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderLegend(target: HTMLElement): void {
  for (const group of legend()) {
    const box = el("div", "legend-group");
    box.appendChild(el("strong", undefined, group.base));
    for (const cls of group.classes) {
      const chip = el("span", "chip", cls.name);
      chip.style.background = cls.color;
      box.appendChild(chip);
    }
    target.appendChild(box);
  }
}

function renderSentence(
  target: HTMLElement,
  sentence: SentenceJson,
  layers: Record<string, { start: number; end: number; class: string }[]>,
): void {
  const row = el("div", "sentence");
  row.appendChild(el("div", "sid", `${sentence.sentence_id} (${sentence.pmid})`));
  for (const [source, spans] of Object.entries(layers)) {
    const line = el("div", "layer");
    line.appendChild(el("span", "source", source));
    for (const piece of segment(sentence.text, { [source]: spans })) {
      const chunk = el("span", piece.layers.length ? "hl" : "plain", piece.text);
      if (piece.layers.length) {
        chunk.style.background = colorFor(piece.layers[0].class);
        chunk.title = piece.layers.map((l) => l.class).join(", ");
      }
      line.appendChild(chunk);
    }
    row.appendChild(line);
  }
  target.appendChild(row);
}

async function renderObservations(api: ReviewApi, target: HTMLElement): Promise<void> {
  target.textContent = "";
  const observations = await api.observations();
  for (const obs of observations) {
    const row = el("div", "observation");
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.checked = obs.selected;
    checkbox.addEventListener("change", async () => {
      await api.select(obs.id, checkbox.checked, REVIEWER);
      await renderObservations(api, target);
    });
    row.appendChild(checkbox);
    const ci = obs.ci_low ? ` CI ${obs.ci_low}-${obs.ci_high}` : "";
    const tp = obs.time_point ? ` @${obs.time_point.value} ${obs.time_point.unit}` : "";
    row.appendChild(
      el(
        "span",
        undefined,
        ` ${obs.endpoint} ${obs.value} ${obs.unit}${ci}${tp} [${obs.construction}] (${obs.sentence_id})`,
      ),
    );
    target.appendChild(row);
  }
}

async function renderWorklist(worklist: Worklist, target: HTMLElement): Promise<void> {
  target.textContent = "";
  await worklist.load();
  if (worklist.allReconciled) {
    target.appendChild(el("div", "done", "all reconciled"));
    return;
  }
  for (const item of worklist.pending) {
    const row = el("div", "conflict");
    row.appendChild(el("div", undefined, item.text));
    const detail =
      `${item.only_a.length} only-${worklist.sources[0]}, ` +
      `${item.only_b.length} only-${worklist.sources[1]}, ` +
      `${item.conflicts.length} class conflicts`;
    row.appendChild(el("div", "detail", detail));
    for (const choice of ["keep_a", "keep_b"] as const) {
      const button = el("button", undefined, choice === "keep_a" ? "keep A" : "keep B");
      button.addEventListener("click", async () => {
        await worklist.resolve(item.sentence_id, choice);
        await renderWorklist(worklist, target);
      });
      row.appendChild(button);
    }
    target.appendChild(row);
  }
}

export async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new ReviewApi(SERVER, "");
  const corpora = await api.corpora();
  if (!corpora.length) {
    root.appendChild(el("div", "error", "no corpora served"));
    return;
  }
  api.corpusId = corpora[0].id;

  renderLegend(root.appendChild(el("div", "legend")));
  const worklistBox = root.appendChild(el("div", "worklist"));
  const sentenceBox = root.appendChild(el("div", "sentences"));
  const observationBox = root.appendChild(el("div", "observations"));

  const exportButton = el("button", undefined, "export reconciled");
  exportButton.addEventListener("click", async () => {
    const text = await api.exportView("reconciled_annotations");
    const blob = new Blob([text], { type: "application/x-ndjson" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${api.corpusId}-reconciled.jsonl`;
    link.click();
  });
  root.appendChild(exportButton);

  const worklist = new Worklist(api, REVIEWER);
  await renderWorklist(worklist, worklistBox);

  const page = await api.sentences(0, 20);
  for (const sentence of page.items) {
    const body = await api.annotations(sentence.sentence_id);
    renderSentence(sentenceBox, sentence, body.annotations);
  }
  await renderObservations(api, observationBox);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start();
}
