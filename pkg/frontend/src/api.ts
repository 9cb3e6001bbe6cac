// Thin client over the workbench HTTP API. All HTER values shown in the UI
// come from the server's responses; nothing is recomputed client-side.

import type { GroundSpan, ItemPayload, Progress, SubmitResponse } from "./types.js";
import { validateItemPayload } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export type SpanErrorDetail = {
  message: string;
  doc_id: string;
  start: number;
  end: number;
};

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly spanError: SpanErrorDetail | null = null,
  ) {
    super(message);
  }
}

export class NoEligibleItems extends Error {}

async function errorFrom(resp: Response): Promise<ApiError> {
  let detail: unknown = null;
  try {
    detail = (await resp.json()).detail;
  } catch {
    // non-JSON body: fall through to a generic message
  }
  if (typeof detail === "string") return new ApiError(resp.status, detail);
  if (detail && typeof detail === "object" && "doc_id" in detail) {
    const d = detail as SpanErrorDetail;
    return new ApiError(resp.status, d.message, d);
  }
  return new ApiError(resp.status, `request failed with status ${resp.status}`);
}

export class WorkbenchClient {
  constructor(
    private readonly annotator: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  async nextItem(): Promise<ItemPayload> {
    const resp = await this.fetchImpl(
      `${this.base}/api/next?annotator=${encodeURIComponent(this.annotator)}`,
    );
    if (resp.status === 409) throw new NoEligibleItems((await resp.json()).detail);
    if (!resp.ok) throw await errorFrom(resp);
    return validateItemPayload(await resp.json());
  }

  async submitEdit(
    itemId: string,
    editedText: string,
    spans: GroundSpan[],
    comment: string,
  ): Promise<SubmitResponse> {
    const resp = await this.fetchImpl(`${this.base}/api/items/${encodeURIComponent(itemId)}/edit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        annotator: this.annotator,
        edited_text: editedText,
        spans,
        comment: comment || null,
      }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as SubmitResponse;
  }

  async progress(): Promise<Progress> {
    const resp = await this.fetchImpl(`${this.base}/api/progress`);
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as Progress;
  }
}
