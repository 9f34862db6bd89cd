/** Payload shapes of the qrefine HTTP API. */

export interface OfferedRefinement {
  name: string;
  answer_count: number;
}

export interface NodeView {
  type: string;
  answer_count: number;
  offered: OfferedRefinement[];
  covered_count: number;
  terminal: boolean;
  status?: string;
  entities?: string[];
}

export interface PathEntry {
  type: string;
  answer_count: number;
}

export interface SessionSnapshot {
  path: PathEntry[];
  node: NodeView;
}

export interface CreateSessionResponse {
  id: string;
  node: NodeView;
}

export interface TypeSummary {
  name: string;
  answer_count: number;
  subtype_count: number;
}

export interface RefinementRecord {
  query: string;
  method: string;
  refinements: string[];
  cost?: number;
  status?: string;
  candidates_all: number;
  candidates_kept: number;
  seed: number;
}

export const BUDGET_EXCEEDED = "budget-exceeded";
