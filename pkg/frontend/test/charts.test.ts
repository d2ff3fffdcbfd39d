import { describe, expect, it } from "vitest";

import { SweepResults } from "../src/api.js";
import { arrheniusChart, highlightInput, kineticsChart } from "../src/charts.js";

const KB = 8.617e-5;

function payload(): SweepResults {
  const times = [0, 500, 1000, 1500, 2000];
  return {
    status: "done",
    cases: {
      T300: { k: null, R2: null, T: 300, N0: 15, N_final: 15, suppressed: true, run_id: "a" },
      T600: { k: 2e-5, R2: 0.93, T: 600, N0: 15, N_final: 9, suppressed: false, run_id: "b" },
      T750: { k: 6e-5, R2: 0.95, T: 750, N0: 15, N_final: 5, suppressed: false, run_id: "c" },
    },
    series: {
      T300: { time: times, grain_count: [15, 15, 15, 15, 15] },
      T600: { time: times, grain_count: [15, 13, 11, 10, 9] },
      T750: { time: times, grain_count: [15, 11, 8, 6, 5] },
    },
    Q_fit: 0.283,
    arrhenius: { slope_K: -0.283 / KB, Q_fit_eV: 0.283, k0: 1.2e-2, R2: 0.99 },
  };
}

describe("kineticsChart", () => {
  it("draws one curve per case with fit overlays for active ones", () => {
    const { svg, curves } = kineticsChart(payload());
    expect(curves.length).toBe(3);
    expect(svg).toContain('data-curve="T600"');
    expect(svg).toContain('data-fit="T750"');
    expect(svg).not.toContain('data-fit="T300"'); // no overlay when suppressed
  });

  it("labels suppressed series", () => {
    const { svg, curves } = kineticsChart(payload());
    expect(curves.find((c) => c.label === "T300")?.suppressed).toBe(true);
    expect(svg).toContain("T300 (suppressed)");
  });

  it("returns empty output without series", () => {
    expect(kineticsChart({ status: "done" }).curves).toEqual([]);
  });
});

describe("arrheniusChart", () => {
  it("annotates the recovered activation energy", () => {
    const chart = arrheniusChart(payload());
    expect(chart).not.toBeNull();
    expect(chart!.annotation).toContain("Q_fit = 0.283 eV");
    expect(chart!.svg).toContain('data-qfit="1"');
  });

  it("needs at least two active temperatures", () => {
    const single = payload();
    single.cases = { T600: single.cases!.T600 };
    expect(arrheniusChart(single)).toBeNull();
  });

  it("is omitted entirely for a single run payload", () => {
    expect(arrheniusChart({ status: "done" })).toBeNull();
  });
});

describe("highlightInput", () => {
  it("marks block headers, keys, and comments", () => {
    const html = highlightInput("[Mesh]\n  nx = 12 # from prompt\n[]");
    expect(html).toContain('<span class="hit-block">[Mesh]</span>');
    expect(html).toContain('<span class="hit-key">');
    expect(html).toContain('<span class="hit-comment"># from prompt</span>');
  });

  it("escapes markup in values", () => {
    const html = highlightInput("[X]\n  v = '<b>'\n[]");
    expect(html).not.toContain("<b>");
    expect(html).toContain("&lt;b&gt;");
  });
});
