/** Thin fetch wrapper over the condmri inference service API. */

import type { ModelInfo, ReconRequest, ReconResponse, SliceEntry } from "./types.js";

export interface ServiceClient {
  getSlices(): Promise<SliceEntry[]>;
  getModelInfo(): Promise<ModelInfo>;
  reconstruct(req: ReconRequest): Promise<ReconResponse>;
}

export class ServiceError extends Error {
  constructor(
    message: string,
    public readonly status?: number
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (Array.isArray(body?.errors)) {
      detail = body.errors
        .map((e: { field?: string; message?: string }) => `${e.field}: ${e.message}`)
        .join("; ");
    }
  } catch {
    // keep the status text
  }
  throw new ServiceError(`service answered ${resp.status}: ${detail}`, resp.status);
}

export function createHttpClient(
  baseUrl: string,
  fetchImpl: typeof fetch = fetch
): ServiceClient {
  const base = baseUrl.replace(/\/$/, "");

  return {
    async getSlices(): Promise<SliceEntry[]> {
      const resp = await fetchImpl(`${base}/slices`);
      if (!resp.ok) await parseError(resp);
      const body = await resp.json();
      return body.slices as SliceEntry[];
    },

    async getModelInfo(): Promise<ModelInfo> {
      const resp = await fetchImpl(`${base}/model/info`);
      if (!resp.ok) await parseError(resp);
      return (await resp.json()) as ModelInfo;
    },

    async reconstruct(req: ReconRequest): Promise<ReconResponse> {
      const resp = await fetchImpl(`${base}/reconstruct`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(req),
      });
      if (!resp.ok) await parseError(resp);
      return (await resp.json()) as ReconResponse;
    },
  };
}
