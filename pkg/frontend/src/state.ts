import type { ViewParams } from "./api.js";
import type { ConfidenceLevel, FpMode } from "./types.js";

export type Tab = "DETAILS" | "COMMENTS" | "SOLUTIONS";

export interface ViewState {
  projectId: string;
  level: number;
  minConfidence: ConfidenceLevel;
  maxRank: number;
  fpMode: FpMode;
  selected: string | null;
  tab: Tab;
}

export function initialState(projectId: string): ViewState {
  return {
    projectId,
    level: 5,
    minConfidence: "NORMAL",
    maxRank: 9,
    fpMode: "HIGHLIGHT",
    selected: null,
    tab: "DETAILS",
  };
}

// Controls accept arbitrary slider/input values; everything funnels
// through these before a request is built, so no interaction can emit
// an out-of-range TriageConfig.
function clampInt(raw: number, lo: number, hi: number, fallback: number): number {
  if (!Number.isFinite(raw)) return fallback;
  return Math.min(hi, Math.max(lo, Math.round(raw)));
}

export function clampLevel(raw: number, current: number): number {
  return clampInt(raw, 0, 6, current);
}

export function clampRank(raw: number, current: number): number {
  return clampInt(raw, 1, 20, current);
}

export function coerceConfidence(raw: string, current: ConfidenceLevel): ConfidenceLevel {
  const upper = raw.toUpperCase();
  return upper === "HIGH" || upper === "NORMAL" || upper === "LOW" ? upper : current;
}

export function coerceFpMode(raw: string, current: FpMode): FpMode {
  const upper = raw.toUpperCase();
  return upper === "HIGHLIGHT" || upper === "DIM" ? upper : current;
}

export function viewParams(state: ViewState): ViewParams {
  return {
    level: clampLevel(state.level, 5),
    minConfidence: state.minConfidence,
    maxRank: clampRank(state.maxRank, 9),
    fpMode: state.fpMode,
  };
}
