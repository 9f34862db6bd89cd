/**
 * Application state as a pure reduction of server responses.
 *
 * The client never shadows answer sets; it only accumulates what the API
 * returned last (the current node, the breadcrumb trail of entered nodes,
 * the A/B records) plus pending/error flags.
 */

import type {
  NodeView,
  PathEntry,
  RefinementRecord,
  SessionSnapshot,
  TypeSummary,
} from "./types.js";

export interface SessionState {
  id: string;
  path: PathEntry[];
  node: NodeView;
}

export interface AbState {
  query: string;
  left?: RefinementRecord;
  right?: RefinementRecord;
}

export interface AppState {
  apiBase: string;
  pending: boolean;
  error?: string;
  matches: TypeSummary[];
  session?: SessionState;
  ab?: AbState;
}

export type AppEvent =
  | { kind: "request-started" }
  | { kind: "request-failed"; message: string }
  | { kind: "matches-loaded"; matches: TypeSummary[] }
  | { kind: "session-created"; id: string; node: NodeView }
  | { kind: "drilled"; node: NodeView }
  | { kind: "went-back"; node: NodeView }
  | { kind: "session-synced"; snapshot: SessionSnapshot }
  | { kind: "ab-loaded"; query: string; left: RefinementRecord; right: RefinementRecord }
  | { kind: "error-cleared" };

export function initialState(apiBase: string): AppState {
  return { apiBase, pending: false, matches: [] };
}

export function breadcrumbs(state: AppState): PathEntry[] {
  if (!state.session) return [];
  const { path, node } = state.session;
  return [...path, { type: node.type, answer_count: node.answer_count }];
}

export function reduce(state: AppState, event: AppEvent): AppState {
  switch (event.kind) {
    case "request-started":
      return { ...state, pending: true, error: undefined };
    case "request-failed":
      return { ...state, pending: false, error: event.message };
    case "matches-loaded":
      return { ...state, pending: false, matches: event.matches };
    case "session-created":
      return {
        ...state,
        pending: false,
        session: { id: event.id, path: [], node: event.node },
      };
    case "drilled": {
      if (!state.session) return { ...state, pending: false };
      const entered: PathEntry = {
        type: state.session.node.type,
        answer_count: state.session.node.answer_count,
      };
      return {
        ...state,
        pending: false,
        session: {
          ...state.session,
          path: [...state.session.path, entered],
          node: event.node,
        },
      };
    }
    case "went-back": {
      if (!state.session) return { ...state, pending: false };
      return {
        ...state,
        pending: false,
        session: {
          ...state.session,
          path: state.session.path.slice(0, -1),
          node: event.node,
        },
      };
    }
    case "session-synced": {
      if (!state.session) return { ...state, pending: false };
      return {
        ...state,
        pending: false,
        session: {
          ...state.session,
          path: event.snapshot.path,
          node: event.snapshot.node,
        },
      };
    }
    case "ab-loaded":
      return {
        ...state,
        pending: false,
        ab: { query: event.query, left: event.left, right: event.right },
      };
    case "error-cleared":
      return { ...state, error: undefined };
  }
}
