"""Review service: event-sourced reconciliation state behind a local HTTP API.

State is a pure fold of an append-only correction/selection log over a base
annotation source; replaying the log always reproduces the current state, and
crash recovery is just a replay. Writers are serialized per corpus; edits
carry the version they were based on, and a mismatch is rejected as stale
(optimistic concurrency, no locking between reviewers).
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse

from .dataset import Corpus
from .metrics import disagreements
from .resolve import (
    OBSERVATION_COLUMNS,
    EndpointObservation,
    observation_row,
    resolve_corpus,
)
from .schema import AnnotationSet, EntitySpan, make_span, parse_class, UnknownClass


class ReviewError(Exception):
    status = 400


class StaleVersion(ReviewError):
    status = 409


class OverlapConflict(ReviewError):
    status = 409


class NotFound(ReviewError):
    status = 404


_ACTIONS = {"add", "remove", "reclass", "confirm"}


@dataclass
class ReviewState:
    """Reconciliation state for one corpus."""

    corpus: Corpus
    sources: dict[str, AnnotationSet]
    base_source: str
    version: int = 0
    log: list[dict] = field(default_factory=list)
    reconciled: AnnotationSet = field(init=False)
    selections: dict[str, dict] = field(default_factory=dict)
    reviewed_sentences: set[str] = field(default_factory=set)

    def __post_init__(self):
        if self.base_source not in self.sources:
            raise NotFound(f"unknown base source {self.base_source!r}")
        self.reconciled = self._copy_of(self.sources[self.base_source])
        self._sentences = self.corpus.sentence_map()
        self._observations: Optional[list[EndpointObservation]] = None

    @staticmethod
    def _copy_of(annotations: AnnotationSet) -> AnnotationSet:
        out = AnnotationSet(source="reconciled")
        out.entries = dict(annotations.entries)
        return out

    # -- observations -------------------------------------------------------

    def observations(self) -> list[tuple[str, EndpointObservation]]:
        if self._observations is None:
            obs, _ = resolve_corpus(self.corpus.sentences(), self.reconciled)
            self._observations = obs
        counters: dict[str, int] = {}
        out = []
        for obs in self._observations:
            i = counters.get(obs.sentence_id, 0)
            counters[obs.sentence_id] = i + 1
            out.append((f"{obs.sentence_id}#{i}", obs))
        return out

    # -- mutations ----------------------------------------------------------

    def _check_version(self, base_version: int) -> None:
        if base_version != self.version:
            raise StaleVersion(
                f"edit based on version {base_version}, state is at {self.version}"
            )

    def apply_correction(self, edit: dict, base_version: int, replaying: bool = False) -> int:
        if not replaying:
            self._check_version(base_version)
        sid = edit.get("sentence_id", "")
        action = edit.get("action", "")
        if action not in _ACTIONS:
            raise ReviewError(f"unknown action {action!r}")
        record = self._sentences.get(sid)
        if record is None:
            raise NotFound(f"unknown sentence {sid!r}")
        spans = list(self.reconciled.spans_for(sid))

        if action == "add":
            span = self._edit_span(edit, record.text)
            if any(span.overlaps(s) for s in spans):
                raise OverlapConflict(f"span ({span.start}, {span.end}) overlaps an existing span")
            spans.append(span)
        elif action == "remove":
            target = self._find(spans, edit)
            spans.remove(target)
        elif action == "reclass":
            target = self._find(spans, edit)
            try:
                new_cls = parse_class(edit.get("new_class", ""))
            except UnknownClass as exc:
                raise ReviewError(str(exc)) from None
            spans.remove(target)
            spans.append(make_span(record.text, target.start, target.end, new_cls))
        # "confirm" records review of the sentence without changing spans.

        self.reconciled.add(sid, spans)
        self.reviewed_sentences.add(sid)
        self._observations = None
        self.version += 1
        if not replaying:
            self.log.append(
                {
                    "version": self.version,
                    "kind": "correction",
                    "edit": dict(edit),
                    "author": edit.get("author", ""),
                    "timestamp": time.time(),
                }
            )
        return self.version

    @staticmethod
    def _edit_span(edit: dict, text: str) -> EntitySpan:
        try:
            cls = parse_class(edit.get("class", ""))
        except UnknownClass as exc:
            raise ReviewError(str(exc)) from None
        start, end = int(edit["start"]), int(edit["end"])
        if not (0 <= start < end <= len(text)):
            raise ReviewError(f"span ({start}, {end}) out of bounds")
        return make_span(text, start, end, cls)

    @staticmethod
    def _find(spans: list[EntitySpan], edit: dict) -> EntitySpan:
        start, end = int(edit["start"]), int(edit["end"])
        for s in spans:
            if s.start == start and s.end == end:
                if "class" in edit and edit["class"] and s.label.value != edit["class"]:
                    continue
                return s
        raise NotFound(f"no span at ({start}, {end})")

    def mark_selection(
        self, observation_id: str, selected: bool, reviewer: str, base_version: int,
        replaying: bool = False,
    ) -> int:
        if not replaying:
            self._check_version(base_version)
        valid = {oid for oid, _ in self.observations()}
        if observation_id not in valid:
            raise NotFound(f"unknown observation {observation_id!r}")
        self.selections[observation_id] = {"selected": selected, "reviewer": reviewer}
        self.version += 1
        if not replaying:
            self.log.append(
                {
                    "version": self.version,
                    "kind": "selection",
                    "observation_id": observation_id,
                    "selected": selected,
                    "reviewer": reviewer,
                    "timestamp": time.time(),
                }
            )
        return self.version

    # -- event sourcing -----------------------------------------------------

    def replay(self, events: list[dict]) -> None:
        for event in events:
            if event["kind"] == "correction":
                self.apply_correction(event["edit"], base_version=-1, replaying=True)
            elif event["kind"] == "selection":
                self.mark_selection(
                    event["observation_id"],
                    event["selected"],
                    event.get("reviewer", ""),
                    base_version=-1,
                    replaying=True,
                )
            self.log.append(event)

    def rebuilt(self) -> "ReviewState":
        """Fresh state with the same log replayed; must equal self."""
        clean = ReviewState(self.corpus, self.sources, self.base_source)
        clean.replay(list(self.log))
        return clean

    # -- exports ------------------------------------------------------------

    def export(self, view: str) -> str:
        if view == "reconciled_annotations":
            lines = []
            for sid, spans in self.reconciled:
                lines.append(
                    json.dumps(
                        {
                            "sentence_id": sid,
                            "spans": [
                                {"start": s.start, "end": s.end, "class": s.label.value}
                                for s in spans
                            ],
                        },
                        ensure_ascii=False,
                    )
                )
            return "\n".join(lines) + ("\n" if lines else "")
        if view == "selected_observations":
            rows = [",".join(OBSERVATION_COLUMNS)]
            for oid, obs in self.observations():
                state = self.selections.get(oid)
                if state and state["selected"]:
                    rows.append(",".join(observation_row(obs)))
            return "\n".join(rows) + "\n"
        if view == "full":
            return json.dumps(
                {
                    "version": self.version,
                    "base_source": self.base_source,
                    "sources": sorted(self.sources),
                    "selections": self.selections,
                    "log": self.log,
                    "reconciled": {
                        sid: [
                            {"start": s.start, "end": s.end, "class": s.label.value}
                            for s in spans
                        ]
                        for sid, spans in self.reconciled
                    },
                },
                ensure_ascii=False,
                indent=2,
            )
        raise ReviewError(f"unknown view {view!r}")


class ReviewStore:
    """Single-writer wrapper with append-only persistence."""

    def __init__(self, state: ReviewState, state_dir: Optional[Path] = None,
                 snapshot_every: int = 100):
        self.state = state
        self.lock = threading.Lock()
        self.state_dir = Path(state_dir) if state_dir else None
        self.snapshot_every = snapshot_every
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            self._recover()

    @property
    def _log_path(self) -> Path:
        return self.state_dir / "events.jsonl"

    def _recover(self) -> None:
        if self._log_path.exists():
            events = []
            with open(self._log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        events.append(json.loads(line))
            self.state.replay(events)

    def _persist(self, event: dict) -> None:
        if not self.state_dir:
            return
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
        if self.state.version % self.snapshot_every == 0:
            (self.state_dir / "snapshot.json").write_text(
                self.state.export("full"), encoding="utf-8"
            )

    def correction(self, edit: dict, base_version: int) -> int:
        with self.lock:
            version = self.state.apply_correction(edit, base_version)
            self._persist(self.state.log[-1])
            return version

    def selection(self, observation_id: str, selected: bool, reviewer: str, base_version: int) -> int:
        with self.lock:
            version = self.state.mark_selection(observation_id, selected, reviewer, base_version)
            self._persist(self.state.log[-1])
            return version


# ---------------------------------------------------------------------------
# HTTP API


def _span_json(s: EntitySpan) -> dict:
    return {"start": s.start, "end": s.end, "class": s.label.value, "surface": s.surface}


def _observation_json(oid: str, obs: EndpointObservation, selection: Optional[dict]) -> dict:
    return {
        "id": oid,
        "sentence_id": obs.sentence_id,
        "pmid": obs.pmid,
        "endpoint": obs.base.value,
        "measure": obs.measure.value,
        "value": str(obs.value),
        "unit": obs.unit.value,
        "ci_low": None if obs.ci_low is None else str(obs.ci_low),
        "ci_high": None if obs.ci_high is None else str(obs.ci_high),
        "time_point": None
        if obs.time_point is None
        else {"value": str(obs.time_point[0]), "unit": obs.time_point[1].value},
        "construction": obs.construction,
        "spans": [_span_json(s) for s in obs.spans],
        "selected": bool(selection and selection.get("selected")),
        "reviewer": (selection or {}).get("reviewer"),
    }


def create_app(stores: dict[str, ReviewStore]) -> FastAPI:
    app = FastAPI(title="oncoendpoints review service")

    def store_of(corpus_id: str) -> ReviewStore:
        store = stores.get(corpus_id)
        if store is None:
            raise HTTPException(404, f"unknown corpus {corpus_id!r}")
        return store

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/corpora")
    def corpora():
        return [
            {
                "id": cid,
                "sentences": len(store.state.corpus),
                "sources": sorted(store.state.sources),
                "base_source": store.state.base_source,
                "version": store.state.version,
            }
            for cid, store in sorted(stores.items())
        ]

    @app.get("/corpora/{corpus_id}/sentences")
    def sentences(corpus_id: str, offset: int = 0, limit: int = Query(50, le=500)):
        state = store_of(corpus_id).state
        records = state.corpus.sentences()
        window = records[offset : offset + limit]
        return {
            "total": len(records),
            "offset": offset,
            "items": [
                {
                    "sentence_id": r.sentence_id,
                    "pmid": r.pmid,
                    "text": r.text,
                    "section": r.section,
                    "reviewed": r.sentence_id in state.reviewed_sentences,
                }
                for r in window
            ],
        }

    @app.get("/corpora/{corpus_id}/sentences/{sentence_id}/annotations")
    def annotations(corpus_id: str, sentence_id: str, source: Optional[str] = None):
        state = store_of(corpus_id).state
        if sentence_id not in state.corpus.sentence_map():
            raise HTTPException(404, f"unknown sentence {sentence_id!r}")
        named = dict(state.sources)
        named["reconciled"] = state.reconciled
        if source is not None:
            if source not in named:
                raise HTTPException(404, f"unknown source {source!r}")
            named = {source: named[source]}
        return {
            "sentence_id": sentence_id,
            "version": state.version,
            "annotations": {
                name: [_span_json(s) for s in annotations.spans_for(sentence_id)]
                for name, annotations in sorted(named.items())
            },
        }

    @app.get("/corpora/{corpus_id}/observations")
    def observations(corpus_id: str):
        state = store_of(corpus_id).state
        return {
            "version": state.version,
            "items": [
                _observation_json(oid, obs, state.selections.get(oid))
                for oid, obs in state.observations()
            ],
        }

    @app.get("/corpora/{corpus_id}/disagreements")
    def disagreement_worklist(corpus_id: str):
        state = store_of(corpus_id).state
        names = sorted(state.sources)
        items = []
        if len(names) >= 2:
            a, b = state.sources[names[0]], state.sources[names[1]]
            for diff in disagreements(a, b, state.corpus.sentence_map()):
                items.append(
                    {
                        "sentence_id": diff.sentence_id,
                        "text": state.corpus.sentence_map()[diff.sentence_id].text,
                        "only_a": [_span_json(s) for s in diff.only_a],
                        "only_b": [_span_json(s) for s in diff.only_b],
                        "conflicts": [
                            {"a": _span_json(x), "b": _span_json(y)}
                            for x, y in diff.conflicts
                        ],
                        "status": "resolved"
                        if diff.sentence_id in state.reviewed_sentences
                        else "pending",
                    }
                )
        return {"version": state.version, "sources": names[:2], "items": items}

    @app.post("/corpora/{corpus_id}/corrections")
    def corrections(corpus_id: str, payload: dict):
        store = store_of(corpus_id)
        try:
            version = store.correction(payload, int(payload.get("base_version", -1)))
        except ReviewError as exc:
            raise HTTPException(exc.status, str(exc)) from None
        return {"version": version}

    @app.post("/corpora/{corpus_id}/selections")
    def selections(corpus_id: str, payload: dict):
        store = store_of(corpus_id)
        try:
            version = store.selection(
                payload.get("observation_id", ""),
                bool(payload.get("selected", True)),
                payload.get("reviewer", ""),
                int(payload.get("base_version", -1)),
            )
        except ReviewError as exc:
            raise HTTPException(exc.status, str(exc)) from None
        return {"version": version}

    @app.get("/corpora/{corpus_id}/export")
    def export(corpus_id: str, view: str = "reconciled_annotations"):
        state = store_of(corpus_id).state
        try:
            body = state.export(view)
        except ReviewError as exc:
            raise HTTPException(400, str(exc)) from None
        return PlainTextResponse(body)

    return app
