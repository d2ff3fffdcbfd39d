// Typed client for the tool server's public HTTP/SSE surface.
// Uses fetch streaming for SSE so the same code runs in the browser and
// under vitest on node.

export interface PlanDocument {
  formulation: string;
  dim: number;
  sweep: { param: string; values: number[] } | null;
  adaptivity: boolean;
  periodic: boolean;
  params: Record<string, unknown>;
}

export interface Rejection {
  code: string;
  available_plugins: { name: string; status: string }[];
}

export interface RunRecord {
  run_id: string;
  status: string;
  exit_code: number | null;
  wall_time_s: number;
  retry_count: number;
  sweep_id: string | null;
  label: string;
  pending_confirmation: {
    diagnosis: string;
    confidence: number;
    explanation: string;
  } | null;
}

export interface CaseResult {
  k: number | null;
  R2: number | null;
  T: number | null;
  N0: number | null;
  N_final: number | null;
  suppressed: boolean;
  run_id: string;
}

export interface SweepResults {
  sweep_id?: string;
  status: string;
  runs?: Record<string, string>;
  cases?: Record<string, CaseResult>;
  series?: Record<string, { time: number[]; grain_count: number[] }>;
  Q_fit?: number | null;
  k0_fit?: number | null;
  R2_arrhenius?: number | null;
  interpretation_text?: string;
  kinetics_anomaly?: boolean;
  arrhenius?: { slope_K: number; Q_fit_eV: number; k0: number; R2: number };
  input_Q?: number | null;
}

export interface SseEvent {
  event: string;
  data: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(message: string, readonly code?: number, readonly status?: number) {
    super(message);
  }
}

export class Client {
  constructor(readonly base: string, readonly execution = true) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.execution) h["x-automoose-capability"] = "execution";
    return h;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(body ?? {}),
    });
    const payload = (await response.json()) as T & { error?: { code: number; message: string } };
    if (!response.ok || (payload && typeof payload === "object" && "error" in payload && payload.error)) {
      const err = payload?.error;
      throw new ApiError(err?.message ?? `HTTP ${response.status}`, err?.code, response.status);
    }
    return payload;
  }

  health(): Promise<{ ok: boolean; backend: string }> {
    return fetch(this.base + "/health").then((r) => r.json());
  }

  parsePrompt(prompt: string): Promise<{ plan?: PlanDocument; rejection?: Rejection }> {
    return this.post("/plan", { prompt });
  }

  tool<T>(name: string, args: Record<string, unknown> = {}): Promise<T> {
    return this.post<T>(`/tools/${name}`, args);
  }

  runSweep(sweepParam: string, values: number[], baseParams: Record<string, unknown>) {
    return this.tool<{ run_ids: string[]; sweep_id: string }>("run_sweep", {
      sweep_param: sweepParam,
      values,
      base_params: baseParams,
    });
  }

  runSimulation(inputFile: string) {
    return this.tool<{ run_id: string }>("run_simulation", { input_file: inputFile });
  }

  generateInput(params: Record<string, unknown>) {
    return this.tool<{ input_file: string }>("generate_input", { params });
  }

  runStatus(runId: string) {
    return this.tool<RunRecord>("get_run_status", { run_id: runId });
  }

  listRuns() {
    return this.tool<{ runs: RunRecord[] }>("list_runs", {});
  }

  results(runOrSweepId: string) {
    return this.tool<SweepResults>("get_results", { run_id: runOrSweepId });
  }

  stopRun(runId: string) {
    return this.tool<{ run_id: string; status: string }>("stop_run", { run_id: runId });
  }

  confirm(runId: string, accept: boolean) {
    return this.post<{ run_id: string; resolution: string }>(
      `/runs/${runId}/confirm`, { accept },
    );
  }

  /** Subscribe to a run's SSE log stream; resolves when the stream ends. */
  async streamLogs(
    runId: string,
    onEvent: (ev: SseEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const response = await fetch(`${this.base}/runs/${runId}/logs/stream`, { signal });
    if (!response.ok || !response.body) {
      throw new ApiError(`stream failed: HTTP ${response.status}`, undefined, response.status);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let eventName = "message";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let index: number;
      while ((index = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, index).trimEnd();
        buffer = buffer.slice(index + 1);
        if (line.startsWith("event: ")) {
          eventName = line.slice(7);
        } else if (line.startsWith("data: ")) {
          const data = JSON.parse(line.slice(6)) as Record<string, unknown>;
          onEvent({ event: eventName, data });
          if (eventName === "end") {
            try {
              await reader.cancel();
            } catch {
              // stream already closed
            }
            return;
          }
        }
      }
    }
  }
}
