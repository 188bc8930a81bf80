/** Console state and its pure reducer.
 *
 * Every transition is a pure function of (state, event); responses arrive
 * embedded in events.  Replaying an event log therefore reproduces the
 * final state exactly, and the ordering guard lives in one place: a
 * reconstruction response only lands if its request id is newer than the
 * one currently displayed (last write wins, stale responses are dropped).
 */

import type { ReconResponse, SliceEntry } from "./types.js";

export interface SweepPoint {
  lambda: number;
  psnr: number | null; // null marks a failed grid point (plotted as a gap)
  ssim: number | null;
}

export interface SweepState {
  running: boolean;
  grid: number[];
  points: SweepPoint[];
  /** argmax-PSNR lambda over the successful points; a suggestion only */
  suggested: number | null;
  warning: string | null;
}

export interface ConsoleState {
  catalog: SliceEntry[];
  sliceId: string | null;
  sigma: number;
  lambda: number;
  seed: number;
  pinnedLambda: number | null;
  pinned: ReconResponse | null;
  current: ReconResponse | null;
  /** id of the request whose response is displayed */
  displayedRequestId: number;
  pending: boolean;
  error: string | null;
  sweep: SweepState;
  /** (slice, sigma, lambda) -> full response; also feeds the sparkline */
  cache: Record<string, ReconResponse>;
}

export type ConsoleEvent =
  | { kind: "catalog"; slices: SliceEntry[] }
  | { kind: "catalog-error"; message: string }
  | { kind: "select-slice"; sliceId: string }
  | { kind: "set-sigma"; sigma: number }
  | { kind: "set-lambda"; lambda: number }
  | { kind: "request-started"; requestId: number }
  | { kind: "recon-ok"; requestId: number; response: ReconResponse }
  | { kind: "recon-error"; requestId: number; message: string }
  | { kind: "pin"; lambda: number | null }
  | { kind: "pinned-ok"; response: ReconResponse }
  | { kind: "sweep-started"; grid: number[] }
  | { kind: "sweep-point"; lambda: number; response: ReconResponse | null }
  | { kind: "sweep-done" };

export const initialState: ConsoleState = {
  catalog: [],
  sliceId: null,
  sigma: 0,
  lambda: 0.1,
  seed: 0,
  pinnedLambda: null,
  pinned: null,
  current: null,
  displayedRequestId: 0,
  pending: false,
  error: null,
  sweep: { running: false, grid: [], points: [], suggested: null, warning: null },
  cache: {},
};

export function cacheKey(sliceId: string, sigma: number, lambda: number): string {
  return `${sliceId}|${sigma}|${lambda}`;
}

function argmaxPsnr(points: SweepPoint[]): number | null {
  let best: SweepPoint | null = null;
  for (const p of points) {
    if (p.psnr === null) continue;
    if (best === null || p.psnr > (best.psnr as number)) best = p;
  }
  return best ? best.lambda : null;
}

export function reduce(state: ConsoleState, event: ConsoleEvent): ConsoleState {
  switch (event.kind) {
    case "catalog":
      return { ...state, catalog: event.slices, error: null };

    case "catalog-error":
      return { ...state, error: event.message };

    case "select-slice":
      if (event.sliceId === state.sliceId) return state;
      return {
        ...state,
        sliceId: event.sliceId,
        current: null,
        pinned: null,
        pinnedLambda: null,
        sweep: initialState.sweep,
      };

    case "set-sigma":
      if (event.sigma === state.sigma) return state;
      return {
        ...state,
        sigma: event.sigma,
        current: null,
        pinned: null,
        sweep: initialState.sweep,
      };

    case "set-lambda":
      return { ...state, lambda: event.lambda };

    case "request-started":
      return { ...state, pending: true };

    case "recon-ok": {
      // ordering guard: never let an older response overwrite a newer one
      if (event.requestId <= state.displayedRequestId) return state;
      const key = cacheKey(
        event.response.slice_id,
        event.response.sigma,
        event.response.lambda
      );
      const cache = { ...state.cache, [key]: event.response };
      // a late response for a context the user already left is cached but
      // never displayed
      if (
        event.response.slice_id !== state.sliceId ||
        event.response.sigma !== state.sigma
      ) {
        return { ...state, cache };
      }
      return {
        ...state,
        current: event.response,
        displayedRequestId: event.requestId,
        pending: false,
        error: null,
        cache,
      };
    }

    case "recon-error":
      if (event.requestId <= state.displayedRequestId) return state;
      return {
        ...state,
        displayedRequestId: event.requestId,
        pending: false,
        error: event.message,
      };

    case "pin":
      if (event.lambda === null) return { ...state, pinnedLambda: null, pinned: null };
      return { ...state, pinnedLambda: event.lambda };

    case "pinned-ok":
      return { ...state, pinned: event.response };

    case "sweep-started":
      return {
        ...state,
        sweep: {
          running: true,
          grid: [...event.grid],
          points: [],
          suggested: null,
          warning: null,
        },
      };

    case "sweep-point": {
      const point: SweepPoint = event.response
        ? {
            lambda: event.lambda,
            psnr: event.response.psnr,
            ssim: event.response.ssim,
          }
        : { lambda: event.lambda, psnr: null, ssim: null };
      const cache = event.response
        ? {
            ...state.cache,
            [cacheKey(event.response.slice_id, event.response.sigma, event.lambda)]:
              event.response,
          }
        : state.cache;
      return {
        ...state,
        cache,
        sweep: { ...state.sweep, points: [...state.sweep.points, point] },
      };
    }

    case "sweep-done": {
      const failed = state.sweep.points.filter((p) => p.psnr === null).length;
      return {
        ...state,
        sweep: {
          ...state.sweep,
          running: false,
          suggested: argmaxPsnr(state.sweep.points),
          warning: failed > 0 ? `${failed} sweep point(s) failed` : null,
        },
      };
    }
  }
}

/** Sparkline data: every cached (lambda, psnr) for the active slice/sigma. */
export function qualityLandscape(state: ConsoleState): Array<{ lambda: number; psnr: number }> {
  if (state.sliceId === null) return [];
  const prefix = `${state.sliceId}|${state.sigma}|`;
  return Object.entries(state.cache)
    .filter(([key]) => key.startsWith(prefix))
    .map(([, resp]) => ({ lambda: resp.lambda, psnr: resp.psnr }))
    .sort((a, b) => a.lambda - b.lambda);
}
