/** Wire types for the review-service HTTP API. */

export interface SpanJson {
  start: number;
  end: number;
  class: string;
  surface?: string;
}

export interface SentenceJson {
  sentence_id: string;
  pmid: string;
  text: string;
  section: string | null;
  reviewed: boolean;
}

export interface SentencePage {
  total: number;
  offset: number;
  items: SentenceJson[];
}

export interface AnnotationsJson {
  sentence_id: string;
  version: number;
  annotations: Record<string, SpanJson[]>;
}

export interface ObservationJson {
  id: string;
  sentence_id: string;
  pmid: string;
  endpoint: string;
  measure: string;
  value: string;
  unit: string;
  ci_low: string | null;
  ci_high: string | null;
  time_point: { value: string; unit: string } | null;
  construction: string;
  spans: SpanJson[];
  selected: boolean;
  reviewer: string | null;
}

export interface DisagreementItem {
  sentence_id: string;
  text: string;
  only_a: SpanJson[];
  only_b: SpanJson[];
  conflicts: { a: SpanJson; b: SpanJson }[];
  status: "pending" | "resolved";
}

export interface DisagreementsJson {
  version: number;
  sources: string[];
  items: DisagreementItem[];
}

export interface CorpusInfo {
  id: string;
  sentences: number;
  sources: string[];
  base_source: string;
  version: number;
}

export type CorrectionAction = "add" | "remove" | "reclass" | "confirm";

export interface CorrectionEdit {
  sentence_id: string;
  action: CorrectionAction;
  start?: number;
  end?: number;
  class?: string;
  new_class?: string;
  author?: string;
}
