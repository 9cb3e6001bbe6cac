// Ground-span arithmetic in document character space. The DOM layer reports
// selection endpoints as (docId, offset already mapped into the document's
// normalized text); everything here is pure so offsets can be tested without
// a browser.

import type { DocKind, GroundSpan } from "./types.js";

export type SelectionEndpoint = {
  docId: string | null; // null when the endpoint is outside any document panel
  docKind: DocKind | null;
  offset: number;
};

export type CaptureRejection = { ok: false; reason: string };
export type CaptureSuccess = { ok: true; span: GroundSpan };
export type CaptureResult = CaptureSuccess | CaptureRejection;

export function captureSpan(anchor: SelectionEndpoint, focus: SelectionEndpoint): CaptureResult {
  if (anchor.docId === null || focus.docId === null) {
    return { ok: false, reason: "select inside a document panel" };
  }
  if (anchor.docId !== focus.docId) {
    return { ok: false, reason: "a ground-text span cannot cross two documents" };
  }
  const start = Math.min(anchor.offset, focus.offset);
  const end = Math.max(anchor.offset, focus.offset);
  if (start === end) {
    return { ok: false, reason: "selection is empty" };
  }
  return {
    ok: true,
    span: { doc_id: anchor.docId, doc_kind: anchor.docKind as DocKind, start, end },
  };
}

// Overlapping (or touching) spans in the same document collapse into one.
export function mergeSpans(spans: GroundSpan[]): GroundSpan[] {
  const byDoc = new Map<string, GroundSpan[]>();
  for (const s of spans) {
    const key = `${s.doc_kind}:${s.doc_id}`;
    byDoc.set(key, [...(byDoc.get(key) ?? []), s]);
  }
  const merged: GroundSpan[] = [];
  for (const group of byDoc.values()) {
    group.sort((a, b) => a.start - b.start || a.end - b.end);
    let current = { ...group[0] };
    for (const s of group.slice(1)) {
      if (s.start <= current.end) {
        current.end = Math.max(current.end, s.end);
      } else {
        merged.push(current);
        current = { ...s };
      }
    }
    merged.push(current);
  }
  merged.sort((a, b) => a.doc_id.localeCompare(b.doc_id) || a.start - b.start);
  return merged;
}

// A document panel renders as alternating plain/highlighted segments; the
// DOM layer keeps one text node per segment and uses `start` to map node
// offsets back into document space.
export type TextSegment = { text: string; highlighted: boolean; start: number };

export function segmentsFor(text: string, spans: GroundSpan[]): TextSegment[] {
  const sorted = mergeSpans(spans).filter((s) => s.start < text.length);
  const segments: TextSegment[] = [];
  let cursor = 0;
  for (const span of sorted) {
    if (span.start > cursor) {
      segments.push({ text: text.slice(cursor, span.start), highlighted: false, start: cursor });
    }
    const end = Math.min(span.end, text.length);
    segments.push({ text: text.slice(span.start, end), highlighted: true, start: span.start });
    cursor = end;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), highlighted: false, start: cursor });
  }
  return segments;
}

// Map an offset within the nth segment of a panel back to document space.
export function offsetInDocument(segments: TextSegment[], segmentIndex: number, offsetInSegment: number): number {
  const segment = segments[segmentIndex];
  if (!segment) throw new RangeError(`no segment ${segmentIndex}`);
  return segment.start + Math.min(offsetInSegment, segment.text.length);
}
