/** Wire types of the condmri inference service. */

export interface SliceEntry {
  slice_id: string;
  split: string;
  shape: number[];
  thumbnail_png: string; // base64 PNG
}

export interface ReconRequest {
  slice_id: string;
  lambda: number;
  sigma: number;
  seed: number;
  return_maps?: string[];
}

export interface ReconResponse {
  slice_id: string;
  lambda: number;
  sigma: number;
  seed: number;
  psnr: number;
  ssim: number;
  data_range: number;
  runtime_s: number;
  images: Record<string, string>; // map name -> base64 PNG
}

export interface ModelInfo {
  model: string;
  config: unknown;
  config_hash: string;
  lambda_conditioned: boolean;
}

/** The sigma presets offered by the console; "custom" uses a free value. */
export const SIGMA_PRESETS = [0, 1e-5, 5e-5, 1e-4] as const;

export const DEFAULT_SWEEP_GRID = [0.1, 0.5, 0.9] as const;
