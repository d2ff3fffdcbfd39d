// Console smoke test against a live tool server on the reference
// backend: submit the benchmark prompt, trim the time window in the plan
// form, launch the four-temperature sweep, stream all four logs, render
// the charts, and stop a separate long run mid-flight.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { arrheniusChart, kineticsChart } from "../src/charts.js";
import { ConsoleStore, planFormFields } from "../src/state.js";

const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;
const PROMPT =
  "Run a grain growth simulation at T = {300, 450, 600, 750} K with " +
  "sigma = 0.708 J/m^2, w_GB = 14 nm, M0 = 2.5e-6 m^4/(J s), Q = 0.23 eV. " +
  "Use 15 Voronoi grains on a 1000x1000 nm^2 domain with a 12x12 mesh " +
  "(uniform refinement level 3) and periodic boundary conditions.";

let server: ChildProcess;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 200; i++) {
    try {
      const reply = await fetch(`${BASE}/health`);
      if (reply.ok) return;
    } catch {
      // server still starting
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("tool server did not come up");
}

beforeAll(async () => {
  const runsDir = mkdtempSync(join(tmpdir(), "console-smoke-"));
  server = spawn(
    "automoose",
    ["--runs-dir", runsDir, "serve", "--http", String(PORT), "--execution"],
    { stdio: "ignore" },
  );
  await waitForHealth();
}, 60000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("console smoke", () => {
  const client = new Client(BASE, true);
  const store = new ConsoleStore(client);

  it("submits the benchmark prompt and renders the plan form", async () => {
    await store.submitPrompt(PROMPT);
    expect(store.state.rejection).toBeNull();
    const plan = store.state.plan!;
    expect(plan.sweep).toEqual({ param: "T", values: [300, 450, 600, 750] });
    const fields = new Map(planFormFields(plan));
    expect(fields.get("grain_num")).toBe(15);
    expect(fields.get("GBenergy")).toBe(0.708);
    expect(fields.size).toBeGreaterThan(10); // every field editable
  });

  it("rejects unsupported physics with the plugin list", async () => {
    const probe = new ConsoleStore(client);
    await probe.submitPrompt("Run a spinodal decomposition at 500 K");
    expect(probe.state.plan).toBeNull();
    expect(probe.state.rejection?.code).toBe("unsupported_physics");
    expect(probe.state.rejection?.available_plugins.length).toBe(4);
  });

  it("accepts overrides, launches the sweep, and streams all four logs", async () => {
    // operator trims the window to desk scale before launching
    store.setPlanField("end_time", 600);
    store.setPlanField("exodus", false);
    const runIds = await store.launch();
    expect(runIds.length).toBe(4);
    expect(store.state.sweepId).toMatch(/^sweep-/);
    expect(store.state.inputFileText).toContain("[Mesh]");

    const outcomes = await Promise.all(runIds.map((id) => store.watch(id)));
    expect(outcomes).toEqual(["done", "done", "done", "done"]);
    for (const runId of runIds) {
      const log = store.state.logs.get(runId) ?? "";
      expect(log).toContain("reference solver");
      expect(log).toContain("Run complete:");
    }
    const cards = store.state.runs.filter((r) => runIds.includes(r.runId));
    expect(cards.every((c) => c.status === "done")).toBe(true);
  }, 600000);

  it("renders four grain-count curves and the annotated Arrhenius panel", async () => {
    const results = await store.loadResults();
    expect(results?.status).toBe("done");
    const kinetics = kineticsChart(results!);
    expect(kinetics.curves.length).toBe(4);
    const t300 = kinetics.curves.find((c) => c.label.includes("T300"));
    expect(t300?.suppressed).toBe(true); // flat curve labeled suppressed
    const arrhenius = arrheniusChart(results!);
    expect(arrhenius).not.toBeNull();
    expect(arrhenius!.annotation).toMatch(/Q_fit = 0\.\d+ eV/);
  }, 120000);

  it("stops a long run mid-flight", async () => {
    const probe = new ConsoleStore(client);
    await probe.submitPrompt(
      "Run a grain growth simulation at T = 750 K. Use 15 Voronoi grains " +
      "on a 1000x1000 nm^2 domain with a 12x12 mesh (uniform refinement " +
      "level 3) and periodic boundary conditions.",
    );
    probe.setPlanField("exodus", false);
    const [runId] = await probe.launch();
    const watching = probe.watch(runId); // runs until the end event
    for (let i = 0; i < 100; i++) {
      if ((probe.state.logs.get(runId) ?? "").includes("Time Step")) break;
      await new Promise((r) => setTimeout(r, 100));
    }
    expect(probe.state.logs.get(runId) ?? "").toContain("Time Step");
    await probe.stop(runId);
    const status = await watching;
    expect(status).toBe("stopped");
    const card = probe.state.runs.find((r) => r.runId === runId);
    expect(card?.status).toBe("stopped");
  }, 180000);
});
