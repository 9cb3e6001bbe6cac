// Local draft persistence: an unsent edit survives a reload until the item
// is submitted. Storage is injected so tests run without a browser.

import type { GroundSpan } from "./types.js";

export type Draft = {
  edited_text: string;
  spans: GroundSpan[];
  comment: string;
};

export type StorageLike = {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
};

const keyFor = (itemId: string) => `cs-draft:${itemId}`;

export function saveDraft(storage: StorageLike, itemId: string, draft: Draft): void {
  storage.setItem(keyFor(itemId), JSON.stringify(draft));
}

export function loadDraft(storage: StorageLike, itemId: string): Draft | null {
  const raw = storage.getItem(keyFor(itemId));
  if (raw === null) return null;
  try {
    const parsed = JSON.parse(raw) as Partial<Draft>;
    if (typeof parsed.edited_text !== "string" || !Array.isArray(parsed.spans)) return null;
    return { edited_text: parsed.edited_text, spans: parsed.spans, comment: parsed.comment ?? "" };
  } catch {
    return null;
  }
}

export function clearDraft(storage: StorageLike, itemId: string): void {
  storage.removeItem(keyFor(itemId));
}

export class MemoryStorage implements StorageLike {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}
