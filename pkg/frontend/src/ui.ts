// DOM wiring for the six console surfaces: chat prompt, plan form, run
// sidebar, live log, results charts, and the input-file viewer, plus the
// confirmation modal for low-confidence corrections.

import { Client } from "./api.js";
import { arrheniusChart, highlightInput, kineticsChart } from "./charts.js";
import { ConsoleStore, planFormFields } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function mountConsole(base: string): ConsoleStore {
  const client = new Client(base, true);
  const store = new ConsoleStore(client);

  const promptInput = el<HTMLTextAreaElement>("prompt-input");
  const promptSend = el<HTMLButtonElement>("prompt-send");
  const planForm = el<HTMLDivElement>("plan-form");
  const launchButton = el<HTMLButtonElement>("launch");
  const runList = el<HTMLUListElement>("run-list");
  const logView = el<HTMLPreElement>("log-view");
  const resultsPanel = el<HTMLDivElement>("results-panel");
  const inputViewer = el<HTMLPreElement>("input-viewer");
  const banner = el<HTMLDivElement>("banner");
  const modal = el<HTMLDivElement>("confirm-modal");

  function renderPlan(): void {
    planForm.innerHTML = "";
    const plan = store.state.plan;
    if (store.state.rejection) {
      const plugins = store.state.rejection.available_plugins
        .map((p) => `${p.name} (${p.status})`).join(", ");
      banner.textContent = `unsupported physics - available plugins: ${plugins}`;
      banner.className = "banner error";
      launchButton.disabled = true;
      return;
    }
    if (!plan) {
      launchButton.disabled = true;
      return;
    }
    banner.textContent = "";
    banner.className = "banner";
    for (const [key, value] of planFormFields(plan)) {
      const row = document.createElement("label");
      row.className = "field";
      const caption = document.createElement("span");
      caption.textContent = key;
      const input = document.createElement("input");
      input.value = String(value);
      input.name = key;
      input.addEventListener("change", () => {
        const text = input.value;
        const parsed: unknown =
          text === "true" ? true :
          text === "false" ? false :
          text !== "" && !Number.isNaN(Number(text)) ? Number(text) : text;
        store.setPlanField(key, parsed);
      });
      row.append(caption, input);
      planForm.append(row);
    }
    launchButton.disabled = false;
  }

  function renderRuns(): void {
    runList.innerHTML = "";
    for (const run of store.state.runs) {
      const item = document.createElement("li");
      item.className = `run-card status-${run.status}`;
      const title = document.createElement("span");
      title.textContent = `${run.label} - ${run.status}` +
        (run.retryCount ? ` (retry ${run.retryCount})` : "");
      const select = document.createElement("button");
      select.textContent = "logs";
      select.addEventListener("click", () => {
        store.state.selectedRun = run.runId;
        void store.watch(run.runId);
        renderLog();
      });
      const stop = document.createElement("button");
      stop.textContent = "stop";
      stop.disabled = run.status !== "running";
      stop.addEventListener("click", () => void store.stop(run.runId));
      item.append(title, select, stop);
      runList.append(item);
    }
    renderModal();
  }

  function renderLog(): void {
    const runId = store.state.selectedRun;
    logView.textContent = runId ? store.state.logs.get(runId) ?? "" : "";
    logView.scrollTop = logView.scrollHeight;
  }

  function renderResults(): void {
    const results = store.state.results;
    resultsPanel.innerHTML = "";
    if (!results || results.status !== "done") {
      resultsPanel.textContent = results ? `results: ${results.status}` : "";
      return;
    }
    const kinetics = kineticsChart(results);
    if (kinetics.svg) {
      const box = document.createElement("div");
      box.innerHTML = kinetics.svg;
      resultsPanel.append(box);
    }
    const arrhenius = arrheniusChart(results);
    if (arrhenius) {
      const box = document.createElement("div");
      box.innerHTML = arrhenius.svg;
      resultsPanel.append(box);
    }
    if (results.interpretation_text) {
      const narrative = document.createElement("p");
      narrative.className = "narrative";
      narrative.textContent = results.interpretation_text;
      resultsPanel.append(narrative);
    }
    if (store.state.inputFileText) {
      inputViewer.innerHTML = highlightInput(store.state.inputFileText);
    }
  }

  function renderModal(): void {
    const pending = store.state.pendingConfirmations[0];
    if (!pending || !pending.pending) {
      modal.classList.add("hidden");
      return;
    }
    modal.classList.remove("hidden");
    el<HTMLParagraphElement>("confirm-text").textContent =
      `${pending.label}: ${pending.pending.diagnosis} ` +
      `(confidence ${pending.pending.confidence}) - ${pending.pending.explanation}`;
    el<HTMLPreElement>("confirm-tail").textContent =
      store.state.logs.get(pending.runId) ?? "";
    el<HTMLButtonElement>("confirm-accept").onclick = () =>
      void store.confirmCorrection(pending.runId, true);
    el<HTMLButtonElement>("confirm-reject").onclick = () =>
      void store.confirmCorrection(pending.runId, false);
  }

  store.subscribe(() => {
    renderPlan();
    renderRuns();
    renderLog();
    renderResults();
  });

  promptSend.addEventListener("click", () => {
    void store.submitPrompt(promptInput.value);
  });
  launchButton.addEventListener("click", async () => {
    const runIds = await store.launch();
    for (const runId of runIds) void store.watch(runId);
    const poll = setInterval(async () => {
      await store.refreshRuns();
      const terminal = store.state.runs.every(
        (r) => !["queued", "running", "reviewing"].includes(r.status),
      );
      if (terminal) {
        clearInterval(poll);
        await store.loadResults();
      }
    }, 1000); // never poll faster than 1 Hz
  });

  void store.refreshRuns();
  return store;
}
