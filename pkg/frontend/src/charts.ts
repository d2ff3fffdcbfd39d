// Chart generation: pure functions from results payloads to SVG strings,
// so the rendering is testable without a DOM and the server never needs
// to produce images.

import { SweepResults } from "./api.js";

const WIDTH = 520;
const HEIGHT = 300;
const MARGIN = { left: 48, right: 120, top: 20, bottom: 36 };
const COLORS = ["#123a63", "#1f77d0", "#e06c00", "#ffb000", "#6a2c91", "#2b8a3e"];
const BOLTZMANN_EV = 8.617e-5;

interface Scale {
  (value: number): number;
}

function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function polyline(xs: number[], ys: number[], sx: Scale, sy: Scale): string {
  return xs.map((x, i) => `${sx(x).toFixed(1)},${sy(ys[i]).toFixed(1)}`).join(" ");
}

function axes(xLabel: string, yLabel: string): string {
  const x0 = MARGIN.left;
  const y0 = HEIGHT - MARGIN.bottom;
  const x1 = WIDTH - MARGIN.right;
  const y1 = MARGIN.top;
  return (
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#444"/>` +
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#444"/>` +
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 6}" text-anchor="middle" class="axis">${xLabel}</text>` +
    `<text x="12" y="${(y0 + y1) / 2}" transform="rotate(-90 12 ${(y0 + y1) / 2})" text-anchor="middle" class="axis">${yLabel}</text>`
  );
}

export interface CurveInfo {
  label: string;
  color: string;
  points: number;
  suppressed: boolean;
}

/** Grain-count trajectories with 1/N fit overlays, one curve per case. */
export function kineticsChart(results: SweepResults): { svg: string; curves: CurveInfo[] } {
  const series = results.series ?? {};
  const cases = results.cases ?? {};
  const labels = Object.keys(series).sort();
  if (!labels.length) return { svg: "", curves: [] };
  let tMax = 0;
  let nMax = 0;
  for (const label of labels) {
    tMax = Math.max(tMax, ...series[label].time);
    nMax = Math.max(nMax, ...series[label].grain_count);
  }
  const sx = linearScale([0, tMax], [MARGIN.left, WIDTH - MARGIN.right]);
  const sy = linearScale([0, nMax * 1.05], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const curves: CurveInfo[] = [];
  let body = axes("time (ns)", "grain count N(t)");
  labels.forEach((label, i) => {
    const color = COLORS[i % COLORS.length];
    const data = series[label];
    body += `<polyline fill="none" stroke="${color}" stroke-width="1.5" ` +
      `points="${polyline(data.time, data.grain_count, sx, sy)}" data-curve="${label}"/>`;
    const info = cases[label];
    if (info && info.k && info.N0 && !info.suppressed) {
      const fitY = data.time.map((t) => 1 / (1 / info.N0! + info.k! * t));
      body += `<polyline fill="none" stroke="${color}" stroke-width="1" ` +
        `stroke-dasharray="5,3" points="${polyline(data.time, fitY, sx, sy)}" ` +
        `data-fit="${label}"/>`;
    }
    const legendY = MARGIN.top + 14 * (i + 1);
    body += `<text x="${WIDTH - MARGIN.right + 8}" y="${legendY}" fill="${color}" class="legend">` +
      `${label}${info?.suppressed ? " (suppressed)" : ""}</text>`;
    curves.push({
      label,
      color,
      points: data.time.length,
      suppressed: Boolean(info?.suppressed),
    });
  });
  const svg = `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" xmlns="http://www.w3.org/2000/svg">${body}</svg>`;
  return { svg, curves };
}

/** ln k vs 1/T with the fitted line and the recovered Q annotation. */
export function arrheniusChart(results: SweepResults): { svg: string; annotation: string } | null {
  const cases = results.cases ?? {};
  const pairs = Object.values(cases)
    .filter((c) => c.T && c.k && !c.suppressed)
    .map((c) => ({ x: 1 / (c.T as number), y: Math.log(c.k as number) }))
    .sort((a, b) => a.x - b.x);
  const arr = results.arrhenius;
  if (pairs.length < 2 || !arr) return null;
  const xs = pairs.map((p) => p.x);
  const ys = pairs.map((p) => p.y);
  const padX = (Math.max(...xs) - Math.min(...xs)) * 0.08 || 1e-5;
  const padY = (Math.max(...ys) - Math.min(...ys)) * 0.12 || 0.5;
  const sx = linearScale(
    [Math.min(...xs) - padX, Math.max(...xs) + padX],
    [MARGIN.left, WIDTH - MARGIN.right],
  );
  const sy = linearScale(
    [Math.min(...ys) - padY, Math.max(...ys) + padY],
    [HEIGHT - MARGIN.bottom, MARGIN.top],
  );
  let body = axes("1/T (1/K)", "ln k");
  for (const p of pairs) {
    body += `<rect x="${(sx(p.x) - 4).toFixed(1)}" y="${(sy(p.y) - 4).toFixed(1)}" ` +
      `width="8" height="8" fill="#1f77d0" data-point="1"/>`;
  }
  const lineY = (x: number) => Math.log(arr.k0) - (arr.Q_fit_eV / BOLTZMANN_EV) * x;
  const x0 = Math.min(...xs) - padX / 2;
  const x1 = Math.max(...xs) + padX / 2;
  body += `<line x1="${sx(x0).toFixed(1)}" y1="${sy(lineY(x0)).toFixed(1)}" ` +
    `x2="${sx(x1).toFixed(1)}" y2="${sy(lineY(x1)).toFixed(1)}" stroke="#e06c00"/>`;
  const annotation = `Q_fit = ${arr.Q_fit_eV.toFixed(3)} eV (R² = ${arr.R2.toFixed(3)})`;
  body += `<text x="${MARGIN.left + 10}" y="${MARGIN.top + 14}" class="annotation" data-qfit="1">${annotation}</text>`;
  const svg = `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" xmlns="http://www.w3.org/2000/svg">${body}</svg>`;
  return { svg, annotation };
}

/** Minimal block highlighting for the input-file viewer. */
export function highlightInput(text: string): string {
  return text
    .replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .split("\n")
    .map((line) => {
      const trimmed = line.trim();
      if (trimmed.startsWith("[") && trimmed.endsWith("]") && trimmed !== "[]") {
        return `<span class="hit-block">${line}</span>`;
      }
      if (trimmed.startsWith("#")) return `<span class="hit-comment">${line}</span>`;
      const eq = line.indexOf("=");
      if (eq > 0) {
        const comment = line.indexOf("#");
        const valueEnd = comment >= 0 ? comment : line.length;
        return (
          `<span class="hit-key">${line.slice(0, eq)}</span>=` +
          `<span class="hit-value">${line.slice(eq + 1, valueEnd)}</span>` +
          (comment >= 0 ? `<span class="hit-comment">${line.slice(comment)}</span>` : "")
        );
      }
      return line;
    })
    .join("\n");
}
