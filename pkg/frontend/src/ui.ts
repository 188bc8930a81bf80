/** DOM rendering for the tuning workspace.  All state lives in the
 * controller; this module only projects it into elements and forwards
 * user input back. */

import type { LambdaConsole } from "./controller.js";
import { qualityLandscape, type ConsoleState } from "./state.js";
import { SIGMA_PRESETS } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function pngSrc(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

function lambdaLabel(lambda: number): string {
  if (lambda === 0) return "0.00 - hard data consistency";
  if (lambda === 1) return "1.00 - measurement ignored";
  return lambda.toFixed(2);
}

function panel(title: string, png: string | null, badge?: string): HTMLElement {
  const box = el("div", "panel");
  box.appendChild(el("div", "panel-title", title));
  if (png) {
    const img = el("img");
    img.src = pngSrc(png);
    box.appendChild(img);
  } else {
    box.appendChild(el("div", "panel-empty", "no data yet"));
  }
  if (badge) box.appendChild(el("div", "badge", badge));
  return box;
}

function drawSparkline(
  canvas: HTMLCanvasElement,
  points: Array<{ lambda: number; psnr: number }>,
  suggested: number | null
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (points.length === 0) return;
  const psnrs = points.map((p) => p.psnr);
  const lo = Math.min(...psnrs);
  const hi = Math.max(...psnrs);
  const pad = 8;
  const x = (lam: number) => pad + lam * (width - 2 * pad);
  const y = (v: number) =>
    hi === lo ? height / 2 : height - pad - ((v - lo) / (hi - lo)) * (height - 2 * pad);

  ctx.strokeStyle = "#4a7";
  ctx.beginPath();
  points.forEach((p, i) => {
    if (i === 0) ctx.moveTo(x(p.lambda), y(p.psnr));
    else ctx.lineTo(x(p.lambda), y(p.psnr));
  });
  ctx.stroke();
  ctx.fillStyle = "#4a7";
  for (const p of points) {
    ctx.beginPath();
    ctx.arc(x(p.lambda), y(p.psnr), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (suggested !== null) {
    const match = points.find((p) => p.lambda === suggested);
    if (match) {
      ctx.strokeStyle = "#d33";
      ctx.beginPath();
      ctx.arc(x(match.lambda), y(match.psnr), 6, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

export function mountConsole(root: HTMLElement, controller: LambdaConsole): void {
  root.innerHTML = "";
  const banner = el("div", "banner hidden");
  const catalogBox = el("div", "catalog");
  const controls = el("div", "controls");
  const panels = el("div", "panels");
  const sweepBox = el("div", "sweep");
  root.append(banner, catalogBox, controls, panels, sweepBox);

  const render = (state: ConsoleState): void => {
    // error banner with retry; panels grey out while stale
    banner.innerHTML = "";
    if (state.error) {
      banner.className = "banner";
      banner.appendChild(el("span", undefined, `service error: ${state.error} `));
      const retry = el("button", undefined, "retry");
      retry.onclick = () => controller.retry();
      banner.appendChild(retry);
    } else {
      banner.className = "banner hidden";
    }

    catalogBox.innerHTML = "";
    for (const slice of state.catalog) {
      const thumb = el("button", slice.slice_id === state.sliceId ? "thumb active" : "thumb");
      const img = el("img");
      img.src = pngSrc(slice.thumbnail_png);
      img.title = `${slice.slice_id} (${slice.split})`;
      thumb.appendChild(img);
      thumb.appendChild(el("div", "thumb-label", slice.slice_id));
      thumb.onclick = () => controller.selectSlice(slice.slice_id);
      catalogBox.appendChild(thumb);
    }

    controls.innerHTML = "";
    const sigmaSel = el("select");
    for (const preset of SIGMA_PRESETS) {
      const opt = el("option", undefined, `sigma = ${preset}`);
      opt.value = String(preset);
      if (state.sigma === preset) opt.selected = true;
      sigmaSel.appendChild(opt);
    }
    const customOpt = el("option", undefined, "custom...");
    customOpt.value = "custom";
    if (!SIGMA_PRESETS.includes(state.sigma as (typeof SIGMA_PRESETS)[number])) {
      customOpt.selected = true;
      customOpt.textContent = `custom (${state.sigma})`;
    }
    sigmaSel.appendChild(customOpt);
    sigmaSel.onchange = () => {
      if (sigmaSel.value === "custom") {
        const raw = window.prompt("noise sigma", String(state.sigma));
        const parsed = raw === null ? NaN : Number(raw);
        if (Number.isFinite(parsed) && parsed >= 0) controller.setSigma(parsed);
      } else {
        controller.setSigma(Number(sigmaSel.value));
      }
    };
    controls.appendChild(sigmaSel);

    const slider = el("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.01";
    slider.value = String(state.lambda);
    slider.oninput = () => controller.onLambdaChange(Number(slider.value));
    controls.appendChild(slider);
    controls.appendChild(el("span", "lambda-label", `lambda = ${lambdaLabel(state.lambda)}`));

    const pinBtn = el(
      "button",
      undefined,
      state.pinnedLambda === null ? "pin current lambda" : `unpin (${state.pinnedLambda})`
    );
    pinBtn.onclick = () =>
      state.pinnedLambda === null ? controller.pinCurrent() : controller.unpin();
    controls.appendChild(pinBtn);

    const sweepBtn = el("button", undefined, "run sweep 0.1 / 0.5 / 0.9");
    sweepBtn.disabled = state.sweep.running || state.sliceId === null;
    sweepBtn.onclick = () => void controller.runSweep();
    controls.appendChild(sweepBtn);

    const errToggle = el("label", "toggle");
    const errBox = el("input");
    errBox.type = "checkbox";
    errBox.checked = showError;
    errBox.onchange = () => {
      showError = errBox.checked;
      render(controller.state);
    };
    errToggle.append(errBox, document.createTextNode(" error map"));
    controls.appendChild(errToggle);

    panels.innerHTML = "";
    panels.className = state.pending || state.error ? "panels stale" : "panels";
    const cur = state.current;
    panels.appendChild(panel("groundtruth", cur ? cur.images["gt"] ?? null : null));
    panels.appendChild(panel("zero-filled", cur ? cur.images["zero_filled"] ?? null : null));
    panels.appendChild(
      panel(
        `reconstruction (lambda=${cur ? cur.lambda.toFixed(2) : "-"})`,
        cur ? cur.images["recon"] ?? null : null,
        cur ? `PSNR ${cur.psnr.toFixed(2)} dB | SSIM ${cur.ssim.toFixed(4)}` : undefined
      )
    );
    if (showError && cur?.images["error_map"]) {
      panels.appendChild(panel("error map", cur.images["error_map"]));
    }
    if (state.pinned) {
      panels.appendChild(
        panel(
          `pinned (lambda=${state.pinned.lambda.toFixed(2)})`,
          state.pinned.images["recon"] ?? null,
          `PSNR ${state.pinned.psnr.toFixed(2)} dB | SSIM ${state.pinned.ssim.toFixed(4)}`
        )
      );
    }

    sweepBox.innerHTML = "";
    const landscape = qualityLandscape(state);
    if (landscape.length > 0) {
      sweepBox.appendChild(el("div", "panel-title", "quality landscape (PSNR vs lambda)"));
      const canvas = el("canvas");
      canvas.width = 420;
      canvas.height = 90;
      sweepBox.appendChild(canvas);
      drawSparkline(canvas, landscape, state.sweep.suggested);
    }
    if (state.sweep.suggested !== null) {
      sweepBox.appendChild(
        el(
          "div",
          "suggestion",
          `suggested lambda_opt = ${state.sweep.suggested} (you decide; the marker is only the sweep argmax)`
        )
      );
    }
    if (state.sweep.warning) {
      sweepBox.appendChild(el("div", "warning", state.sweep.warning));
    }
  };

  let showError = false;
  controller.subscribe(render);
  render(controller.state);
}
