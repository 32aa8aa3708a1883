/**
 * Wire types of the /api/v1 JSON API. Field names and casings mirror the
 * server responses exactly; this file defines no behavior.
 */

export type Band = "SCARIEST" | "SCARY" | "TROUBLING" | "OF_CONCERN";
export type ConfidenceLevel = "HIGH" | "NORMAL" | "LOW";
export type FpTreatment = "NONE" | "HIGHLIGHT" | "DIM";
export type FpMode = "HIGHLIGHT" | "DIM";
export type InclusionStage = "BASE" | "RELAXED_SEVERITY" | "RELAXED_CONFIDENCE";
export type EstimateStatus = "READY" | "IMPRECISE" | "INSUFFICIENT";
export type VoteDirection = "UP" | "DOWN";

export interface LocationDoc {
  filePath: string;
  className: string | null;
  methodSignature: string | null;
  startLine: number | null;
  endLine: number | null;
}

export interface FindingDoc {
  fingerprint: string;
  patternId: string;
  category: string;
  message: string;
  severity: number;
  confidence: ConfidenceLevel;
  location: LocationDoc;
}

export interface StyleDoc {
  colorBand: Band;
  alpha: number;
  fpTreatment: FpTreatment;
}

export interface ViewEntryDoc {
  finding: FindingDoc;
  style: StyleDoc;
  inclusionStage: InclusionStage;
}

export interface ViewDoc {
  levelApplied: number;
  entries: ViewEntryDoc[];
  pool: string[];
}

export interface TriageDoc {
  falsePositives: Record<string, string>;
  severityOverrides: Record<string, number>;
  dormantSince: Record<string, string>;
  version: number;
}

export interface CommentDoc {
  commentId: string;
  patternId: string;
  text: string;
  author: string | null;
  fingerprint: string | null;
  createdAt: string;
}

export interface SolutionDoc {
  solutionId: string;
  patternId: string;
  text: string;
  codeSnippet: string | null;
  upVotes: number;
  downVotes: number;
  netScore: number;
  createdAt: string;
}

export interface EstimateDoc {
  patternId: string;
  median: number | null;
  halfWidth: number | null;
  sampleCount: number;
  status: EstimateStatus;
}

export interface RunUploadDoc {
  runId: string;
  findingCount: number;
  triageVersion: number;
}

export interface FixRecordDoc {
  patternId: string;
  minutes: number;
  source: string;
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}
