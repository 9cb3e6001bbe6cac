// Browser entry point: wires the pure span/draft/api modules to the DOM.
// One active item per tab; the server's lease keeps tabs from colliding.

import { WorkbenchClient, ApiError, NoEligibleItems } from "./api.js";
import { clearDraft, loadDraft, saveDraft, MemoryStorage, type StorageLike } from "./draft.js";
import { captureSpan, mergeSpans, segmentsFor, type SelectionEndpoint } from "./spans.js";
import { SchemaError, type GroundSpan, type ItemPayload, type DocKind } from "./types.js";

type UiState = {
  payload: ItemPayload | null;
  spans: GroundSpan[];
  spanErrors: Map<string, string>; // key: doc_id:start:end
};

const state: UiState = { payload: null, spans: [], spanErrors: new Map() };

const qs = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el as T;
};

const storage: StorageLike =
  typeof localStorage !== "undefined" ? localStorage : new MemoryStorage();

const spanKey = (s: GroundSpan) => `${s.doc_id}:${s.start}:${s.end}`;

function banner(message: string, kind: "error" | "info") {
  const el = qs<HTMLDivElement>("#banner");
  el.textContent = message;
  el.className = `banner ${kind}`;
  el.hidden = false;
}

function hideBanner() {
  qs<HTMLDivElement>("#banner").hidden = true;
}

function renderDocuments() {
  const payload = state.payload;
  if (!payload) return;
  const host = qs<HTMLDivElement>("#documents");
  host.replaceChildren();
  for (const doc of payload.documents) {
    const panel = document.createElement("section");
    panel.className = `doc-panel kind-${doc.doc_kind}`;
    panel.dataset.docId = doc.doc_id;
    panel.dataset.docKind = doc.doc_kind;

    const title = document.createElement("h3");
    title.textContent = doc.title;
    panel.appendChild(title);

    const body = document.createElement("div");
    body.className = "doc-text";
    const docSpans = state.spans.filter((s) => s.doc_id === doc.doc_id);
    for (const segment of segmentsFor(doc.text, docSpans)) {
      const node = document.createElement(segment.highlighted ? "mark" : "span");
      node.textContent = segment.text;
      node.dataset.start = String(segment.start);
      body.appendChild(node);
    }
    panel.appendChild(body);
    host.appendChild(panel);
  }
}

function renderSpanChips() {
  const host = qs<HTMLDivElement>("#span-chips");
  host.replaceChildren();
  for (const span of state.spans) {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.textContent = `${span.doc_kind} ${span.start}–${span.end}`;
    const error = state.spanErrors.get(spanKey(span));
    if (error) {
      chip.classList.add("chip-error");
      const note = document.createElement("small");
      note.textContent = ` ${error}`;
      chip.appendChild(note);
    }
    const remove = document.createElement("button");
    remove.textContent = "×";
    remove.addEventListener("click", () => {
      state.spans = state.spans.filter((s) => s !== span);
      state.spanErrors.delete(spanKey(span));
      persistDraft();
      renderDocuments();
      renderSpanChips();
    });
    chip.appendChild(remove);
    host.appendChild(chip);
  }
}

function renderItem() {
  const payload = state.payload;
  if (!payload) return;
  hideBanner();
  qs<HTMLDivElement>("#claim-text").textContent = payload.claim.text;
  qs<HTMLSpanElement>("#strategy-tag").textContent = payload.strategy;
  qs<HTMLPreElement>("#guidelines").textContent = payload.guidelines;
  qs<HTMLDivElement>("#generated").textContent = payload.generated_text;

  const draft = loadDraft(storage, payload.item_id);
  qs<HTMLTextAreaElement>("#editor").value = draft?.edited_text ?? payload.generated_text;
  qs<HTMLTextAreaElement>("#comment").value = draft?.comment ?? "";
  state.spans = draft?.spans ?? [];
  state.spanErrors.clear();

  renderDocuments();
  renderSpanChips();
  qs<HTMLDivElement>("#workspace").hidden = false;
}

function persistDraft() {
  if (!state.payload) return;
  saveDraft(storage, state.payload.item_id, {
    edited_text: qs<HTMLTextAreaElement>("#editor").value,
    spans: state.spans,
    comment: qs<HTMLTextAreaElement>("#comment").value,
  });
}

function endpointFrom(node: Node | null, offset: number): SelectionEndpoint {
  let el: HTMLElement | null = node instanceof HTMLElement ? node : node?.parentElement ?? null;
  const segmentStart = el?.dataset.start;
  const panel = el?.closest<HTMLElement>(".doc-panel") ?? null;
  if (!panel || segmentStart === undefined) {
    return { docId: null, docKind: null, offset: 0 };
  }
  return {
    docId: panel.dataset.docId ?? null,
    docKind: (panel.dataset.docKind as DocKind) ?? null,
    offset: Number(segmentStart) + offset,
  };
}

function onSelection() {
  const selection = window.getSelection();
  if (!selection || selection.isCollapsed || !state.payload) return;
  const anchor = endpointFrom(selection.anchorNode, selection.anchorOffset);
  const focus = endpointFrom(selection.focusNode, selection.focusOffset);
  const result = captureSpan(anchor, focus);
  if (!result.ok) {
    banner(result.reason, "error");
    return;
  }
  hideBanner();
  state.spans = mergeSpans([...state.spans, result.span]);
  selection.removeAllRanges();
  persistDraft();
  renderDocuments();
  renderSpanChips();
}

async function refreshProgress(client: WorkbenchClient) {
  try {
    const progress = await client.progress();
    const submitted = progress.cells.reduce((acc, c) => acc + c.submitted, 0);
    qs<HTMLSpanElement>("#progress").textContent = `${submitted}/${progress.total} submitted`;
  } catch {
    // progress display is best-effort
  }
}

async function loadNext(client: WorkbenchClient) {
  try {
    state.payload = await client.nextItem();
    renderItem();
  } catch (e) {
    qs<HTMLDivElement>("#workspace").hidden = true;
    if (e instanceof NoEligibleItems) {
      banner(`nothing to annotate: ${e.message}`, "info");
    } else if (e instanceof SchemaError) {
      banner(e.message, "error");
    } else {
      banner(e instanceof Error ? e.message : String(e), "error");
    }
  }
}

async function submit(client: WorkbenchClient) {
  const payload = state.payload;
  if (!payload) return;
  const editedText = qs<HTMLTextAreaElement>("#editor").value;
  try {
    const result = await client.submitEdit(
      payload.item_id,
      editedText,
      state.spans,
      qs<HTMLTextAreaElement>("#comment").value,
    );
    clearDraft(storage, payload.item_id);
    banner(`submitted; edit rate ${result.live_hter.toFixed(3)}`, "info");
    await refreshProgress(client);
    await loadNext(client);
  } catch (e) {
    if (e instanceof ApiError && e.spanError) {
      const d = e.spanError;
      for (const span of state.spans) {
        if (span.doc_id === d.doc_id && span.start === d.start && span.end === d.end) {
          state.spanErrors.set(spanKey(span), d.message);
        }
      }
      renderSpanChips();
    } else {
      banner(e instanceof Error ? e.message : String(e), "error");
    }
  }
}

export function mount(): void {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator") ?? window.prompt("annotator id?") ?? "";
  const client = new WorkbenchClient(annotator);

  qs<HTMLDivElement>("#documents").addEventListener("mouseup", onSelection);
  qs<HTMLTextAreaElement>("#editor").addEventListener("input", persistDraft);
  qs<HTMLTextAreaElement>("#comment").addEventListener("input", persistDraft);
  qs<HTMLButtonElement>("#submit").addEventListener("click", () => void submit(client));
  qs<HTMLButtonElement>("#skip-refresh").addEventListener("click", () => void loadNext(client));

  void refreshProgress(client);
  void loadNext(client);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  mount();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", mount);
}
