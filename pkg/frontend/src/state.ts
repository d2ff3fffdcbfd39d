// Console state: draft prompt, editable plan form, run cards, per-run log
// buffers, results payloads, and the pending-confirmation queue.  The
// server is the source of truth; reloading reconstructs everything from
// list_runs + get_results.

import {
  Client,
  PlanDocument,
  Rejection,
  RunRecord,
  SseEvent,
  SweepResults,
} from "./api.js";

export interface RunCard {
  runId: string;
  label: string;
  status: string;
  retryCount: number;
  pending: RunRecord["pending_confirmation"];
}

export interface ConsoleState {
  draftPrompt: string;
  plan: PlanDocument | null;
  rejection: Rejection | null;
  runs: RunCard[];
  selectedRun: string | null;
  logs: Map<string, string>; // append-only per run
  results: SweepResults | null;
  sweepId: string | null;
  inputFileText: string | null;
  pendingConfirmations: RunCard[];
  error: string | null;
}

export type Listener = (state: ConsoleState) => void;

export class ConsoleStore {
  readonly state: ConsoleState = {
    draftPrompt: "",
    plan: null,
    rejection: null,
    runs: [],
    selectedRun: null,
    logs: new Map(),
    results: null,
    sweepId: null,
    inputFileText: null,
    pendingConfirmations: [],
    error: null,
  };
  private listeners: Listener[] = [];
  private watching = new Set<string>();

  constructor(readonly client: Client) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Chat panel: parse the prompt into an editable plan form. */
  async submitPrompt(text: string): Promise<void> {
    this.state.draftPrompt = text;
    this.state.error = null;
    try {
      const reply = await this.client.parsePrompt(text);
      this.state.plan = reply.plan ?? null;
      this.state.rejection = reply.rejection ?? null;
    } catch (err) {
      this.state.error = String(err);
    }
    this.emit();
  }

  /** Configure panel: edit one plan field before launching. */
  setPlanField(key: string, value: unknown): void {
    if (!this.state.plan) return;
    if (key === "sweep" || key === "formulation" || key === "dim"
        || key === "periodic" || key === "adaptivity") {
      (this.state.plan as unknown as Record<string, unknown>)[key] = value;
    } else {
      this.state.plan.params[key] = value;
    }
    this.emit();
  }

  /** Launch the current plan; a snapshot is taken so later form edits
   *  never mutate an already-launched run. */
  async launch(): Promise<string[]> {
    const plan = this.state.plan;
    if (!plan) throw new Error("no plan to launch");
    const snapshot: PlanDocument = JSON.parse(JSON.stringify(plan));
    const base: Record<string, unknown> = {
      ...snapshot.params,
      formulation: snapshot.formulation,
      dim: snapshot.dim,
      periodic: snapshot.periodic,
      adaptivity: snapshot.adaptivity,
    };
    delete base.gamma;    // plan-level fields with no plugin counterpart
    delete base.backend;
    const generated = await this.client.generateInput(base);
    this.state.inputFileText = generated.input_file; // input-file viewer
    let runIds: string[];
    if (snapshot.sweep) {
      const reply = await this.client.runSweep(
        snapshot.sweep.param, snapshot.sweep.values, base,
      );
      runIds = reply.run_ids;
      this.state.sweepId = reply.sweep_id;
    } else {
      const reply = await this.client.runSimulation(generated.input_file);
      runIds = [reply.run_id];
      this.state.sweepId = null;
    }
    await this.refreshRuns();
    this.state.selectedRun = runIds[0] ?? null;
    this.emit();
    return runIds;
  }

  /** Run sidebar: reconcile cards with the server registry. */
  async refreshRuns(): Promise<void> {
    const reply = await this.client.listRuns();
    this.state.runs = reply.runs.map((r) => ({
      runId: r.run_id,
      label: r.label || r.run_id,
      status: r.status,
      retryCount: r.retry_count,
      pending: r.pending_confirmation,
    }));
    this.state.pendingConfirmations = this.state.runs.filter((r) => r.pending);
    this.emit();
  }

  appendLog(runId: string, chunk: string): void {
    const current = this.state.logs.get(runId) ?? "";
    this.state.logs.set(runId, current + chunk); // append-only
    this.emit();
  }

  /** Live log panel: subscribe to one run's SSE stream until it ends. */
  async watch(runId: string, signal?: AbortSignal): Promise<string> {
    if (this.watching.has(runId)) return this.state.logs.get(runId) ?? "";
    this.watching.add(runId);
    let finalStatus = "unknown";
    try {
      await this.client.streamLogs(runId, (ev: SseEvent) => {
        if (ev.event === "log" && typeof ev.data.chunk === "string") {
          this.appendLog(runId, ev.data.chunk);
        } else if (ev.event === "gap") {
          this.appendLog(runId, "\n[... log gap ...]\n");
        } else if (ev.event === "end") {
          finalStatus = String(ev.data.status);
        }
      }, signal);
    } finally {
      this.watching.delete(runId);
    }
    await this.refreshRuns();
    return finalStatus;
  }

  async stop(runId: string): Promise<void> {
    await this.client.stopRun(runId);
    await this.refreshRuns();
  }

  /** Results panel: pull the aggregated payload for the finished sweep. */
  async loadResults(id?: string): Promise<SweepResults | null> {
    const target = id ?? this.state.sweepId ?? this.state.selectedRun;
    if (!target) return null;
    this.state.results = await this.client.results(target);
    this.emit();
    return this.state.results;
  }

  /** Confirmation modal: accept applies the correction, reject fails the run. */
  async confirmCorrection(runId: string, accept: boolean): Promise<void> {
    await this.client.confirm(runId, accept);
    await this.refreshRuns();
  }
}

/** Flatten the plan document into label/value pairs for the form. */
export function planFormFields(plan: PlanDocument): [string, unknown][] {
  const top: [string, unknown][] = [
    ["formulation", plan.formulation],
    ["dim", plan.dim],
    ["periodic", plan.periodic],
    ["adaptivity", plan.adaptivity],
    ["sweep", plan.sweep ? `${plan.sweep.param} = {${plan.sweep.values.join(", ")}}` : "none"],
  ];
  const params = Object.entries(plan.params).map(
    ([k, v]) => [k, v] as [string, unknown],
  );
  return top.concat(params);
}
