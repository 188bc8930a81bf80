/** Effects layer: owns the single source of state, debounces slider
 * traffic, talks to the service, and keeps the (slice, sigma, seed)
 * triple fixed while lambda is explored so comparisons isolate lambda.
 *
 * Request discipline:
 *   - lambda changes are debounced (>= 150 ms); at most one request per
 *     debounce window;
 *   - every issued request gets a monotone id; the reducer drops any
 *     response older than the one displayed (last write wins);
 *   - a (slice, sigma, lambda) already in the cache is served from it
 *     without touching the network.
 */

import type { ServiceClient } from "./client.js";
import { createDebouncer, type Debouncer } from "./debounce.js";
import {
  cacheKey,
  initialState,
  reduce,
  type ConsoleEvent,
  type ConsoleState,
} from "./state.js";
import { DEFAULT_SWEEP_GRID } from "./types.js";

export const DEBOUNCE_MS = 150;

export type Listener = (state: ConsoleState) => void;

export interface ControllerOptions {
  debounceMs?: number;
  seed?: number;
}

export class LambdaConsole {
  private stateValue: ConsoleState;
  private listeners: Listener[] = [];
  private requestCounter = 0;
  private debouncer: Debouncer;

  constructor(
    private readonly client: ServiceClient,
    options: ControllerOptions = {}
  ) {
    this.stateValue = { ...initialState, seed: options.seed ?? 0 };
    this.debouncer = createDebouncer(options.debounceMs ?? DEBOUNCE_MS, () =>
      this.issueCurrent()
    );
  }

  get state(): ConsoleState {
    return this.stateValue;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  dispatch(event: ConsoleEvent): void {
    this.stateValue = reduce(this.stateValue, event);
    for (const listener of this.listeners) listener(this.stateValue);
  }

  async loadCatalog(): Promise<void> {
    try {
      const slices = await this.client.getSlices();
      this.dispatch({ kind: "catalog", slices });
    } catch (err) {
      this.dispatch({ kind: "catalog-error", message: String(err) });
    }
  }

  selectSlice(sliceId: string): void {
    this.debouncer.cancel();
    this.dispatch({ kind: "select-slice", sliceId });
    void this.issueCurrent();
  }

  setSigma(sigma: number): void {
    this.debouncer.cancel();
    this.dispatch({ kind: "set-sigma", sigma });
    void this.issueCurrent();
  }

  /** Slider movement: update the label immediately, fetch after the
   * debounce window. */
  onLambdaChange(lambda: number): void {
    this.dispatch({ kind: "set-lambda", lambda });
    this.debouncer.trigger();
  }

  /** Pin the current lambda for side-by-side comparison. */
  pinCurrent(): void {
    const { current } = this.stateValue;
    if (!current) return;
    this.dispatch({ kind: "pin", lambda: current.lambda });
    this.dispatch({ kind: "pinned-ok", response: current });
  }

  unpin(): void {
    this.dispatch({ kind: "pin", lambda: null });
  }

  retry(): void {
    void this.issueCurrent();
  }

  private async fetchPoint(
    lambda: number,
    ctx: { sliceId: string; sigma: number; seed: number }
  ) {
    const hit = this.stateValue.cache[cacheKey(ctx.sliceId, ctx.sigma, lambda)];
    if (hit) return hit;
    return this.client.reconstruct({
      slice_id: ctx.sliceId,
      lambda,
      sigma: ctx.sigma,
      seed: ctx.seed,
    });
  }

  private async issueCurrent(): Promise<void> {
    const { sliceId, sigma, seed, lambda, cache } = this.stateValue;
    if (sliceId === null) return;

    const key = cacheKey(sliceId, sigma, lambda);
    const hit = cache[key];
    const requestId = ++this.requestCounter;
    if (hit) {
      // a cached lambda re-selection costs no request
      this.dispatch({ kind: "recon-ok", requestId, response: hit });
      return;
    }
    this.dispatch({ kind: "request-started", requestId });
    try {
      const response = await this.client.reconstruct({
        slice_id: sliceId,
        lambda,
        sigma,
        seed,
      });
      this.dispatch({ kind: "recon-ok", requestId, response });
    } catch (err) {
      this.dispatch({ kind: "recon-error", requestId, message: String(err) });
    }
  }

  /** Sequentially sample a lambda grid; failed points become plot gaps.
   * The argmax is a suggestion; the slider stays wherever the user put
   * it.  Changing the slice or sigma mid-sweep abandons the rest. */
  async runSweep(grid: readonly number[] = DEFAULT_SWEEP_GRID): Promise<void> {
    const { sliceId, sigma, seed } = this.stateValue;
    if (sliceId === null || this.stateValue.sweep.running) return;
    const ctx = { sliceId, sigma, seed };
    const abandoned = () =>
      this.stateValue.sliceId !== ctx.sliceId || this.stateValue.sigma !== ctx.sigma;

    this.dispatch({ kind: "sweep-started", grid: [...grid] });
    for (const lambda of grid) {
      if (abandoned()) return;
      let response = null;
      try {
        response = await this.fetchPoint(lambda, ctx);
      } catch {
        response = null;
      }
      if (abandoned()) return;
      this.dispatch({ kind: "sweep-point", lambda, response });
    }
    if (!abandoned()) this.dispatch({ kind: "sweep-done" });
  }
}
