import type { ServiceClient } from "../src/client.js";
import type { ReconRequest, ReconResponse, SliceEntry } from "../src/types.js";

export function makeResponse(req: ReconRequest, psnr: number, ssim = 0.8): ReconResponse {
  return {
    slice_id: req.slice_id,
    lambda: req.lambda,
    sigma: req.sigma,
    seed: req.seed,
    psnr,
    ssim,
    data_range: 1.0,
    runtime_s: 0.01,
    images: {
      recon: `png-recon-${req.lambda}`,
      zero_filled: "png-zf",
      gt: "png-gt",
      error_map: `png-err-${req.lambda}`,
    },
  };
}

export const CATALOG: SliceEntry[] = [
  { slice_id: "s0", split: "test", shape: [32, 32], thumbnail_png: "t0" },
  { slice_id: "s1", split: "test", shape: [32, 32], thumbnail_png: "t1" },
];

export interface MockService extends ServiceClient {
  requests: ReconRequest[];
  /** unresolved reconstruct calls, in arrival order */
  pending: Array<{
    req: ReconRequest;
    resolve: (resp: ReconResponse) => void;
    reject: (err: Error) => void;
  }>;
  /** resolve the i-th pending request with a canned PSNR */
  release(index: number, psnr: number): void;
}

/** Mock service whose responses are resolved manually (for ordering
 * tests) or automatically via `psnrOf`. */
export function makeMockService(psnrOf?: (req: ReconRequest) => number): MockService {
  const mock: MockService = {
    requests: [],
    pending: [],
    release(index, psnr) {
      const entry = mock.pending[index];
      if (!entry) throw new Error(`no pending request ${index}`);
      entry.resolve(makeResponse(entry.req, psnr));
    },
    async getSlices() {
      return CATALOG;
    },
    async getModelInfo() {
      return {
        model: "unrolled",
        config: {},
        config_hash: "abc",
        lambda_conditioned: true,
      };
    },
    reconstruct(req: ReconRequest) {
      mock.requests.push(req);
      if (psnrOf) {
        return Promise.resolve(makeResponse(req, psnrOf(req)));
      }
      return new Promise<ReconResponse>((resolve, reject) => {
        mock.pending.push({ req, resolve, reject });
      });
    },
  };
  return mock;
}

export async function flushMicrotasks(): Promise<void> {
  await Promise.resolve();
  await Promise.resolve();
  await Promise.resolve();
}
