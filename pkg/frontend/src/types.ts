// API payload shapes, mirroring the workbench server exactly, plus a runtime
// validator: a payload that fails validation must never be partially rendered.

export type DocKind = "fc" | "ngo";

export type KnowledgeDocument = {
  doc_id: string;
  doc_kind: DocKind;
  title: string;
  text: string;
};

export type ItemPayload = {
  item_id: string;
  strategy: "FC" | "NGO" | "MIX";
  claim: { id: string; text: string; target_group: string };
  generated_text: string;
  documents: KnowledgeDocument[];
  guidelines: string;
};

export type GroundSpan = {
  doc_id: string;
  doc_kind: DocKind;
  start: number;
  end: number;
};

export type SubmitResponse = {
  accepted: boolean;
  live_hter: number;
};

export type ProgressCell = {
  strategy: string;
  role: string;
  assigned: number;
  submitted: number;
  mean_live_hter: number | null;
};

export type Progress = {
  total: number;
  pending: Record<string, number>;
  cells: ProgressCell[];
};

export class SchemaError extends Error {
  constructor(public readonly field: string) {
    super(`payload schema mismatch: ${field}`);
  }
}

const isString = (v: unknown): v is string => typeof v === "string";

export function validateItemPayload(raw: unknown): ItemPayload {
  const obj = raw as Record<string, unknown>;
  if (typeof obj !== "object" || obj === null) throw new SchemaError("payload");
  if (!isString(obj.item_id)) throw new SchemaError("item_id");
  if (obj.strategy !== "FC" && obj.strategy !== "NGO" && obj.strategy !== "MIX") {
    throw new SchemaError("strategy");
  }
  const claim = obj.claim as Record<string, unknown> | undefined;
  if (!claim || !isString(claim.id) || !isString(claim.text)) throw new SchemaError("claim");
  if (!isString(obj.generated_text)) throw new SchemaError("generated_text");
  if (!isString(obj.guidelines)) throw new SchemaError("guidelines");
  if (!Array.isArray(obj.documents)) throw new SchemaError("documents");
  for (const doc of obj.documents) {
    const d = doc as Record<string, unknown>;
    if (!isString(d.doc_id) || !isString(d.text) || !isString(d.title)) {
      throw new SchemaError("documents");
    }
    if (d.doc_kind !== "fc" && d.doc_kind !== "ngo") throw new SchemaError("documents.doc_kind");
  }
  return raw as ItemPayload;
}
