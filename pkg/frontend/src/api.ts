import type {
  CommandAck,
  Metric,
  OkResponse,
  SeriesResponse,
  StatusResponse,
  SummaryResponse,
} from "./model.js";
import { validateBand } from "./model.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client for the edge node's HTTP API.  `base` is "" when the
 *  console is served by the edge process itself. */
export class EdgeApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      let detail = `${res.status} ${res.statusText}`;
      try {
        const body: unknown = await res.json();
        const d = (body as { detail?: unknown }).detail;
        if (typeof d === "string") detail = d;
        else if (d !== undefined) detail = JSON.stringify(d);
      } catch {
        // not JSON; keep the status line
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  private body(payload: unknown): RequestInit {
    return {
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    };
  }

  status(): Promise<StatusResponse> {
    return this.request("/status");
  }

  series(greenhouse: string, metric: Metric, tFrom = 0, tTo?: number): Promise<SeriesResponse> {
    const q = new URLSearchParams({ metric, from: String(tFrom) });
    if (tTo !== undefined) q.set("to", String(tTo));
    return this.request(`/greenhouses/${encodeURIComponent(greenhouse)}/series?${q}`);
  }

  setBand(greenhouse: string, low: number, high: number): Promise<OkResponse> {
    return this.request(`/greenhouses/${encodeURIComponent(greenhouse)}/band`, {
      method: "PUT",
      ...this.body({ low_lim: low, upper_lim: high }),
    });
  }

  setMode(greenhouse: string, mode: "auto" | "manual"): Promise<OkResponse> {
    return this.request(`/greenhouses/${encodeURIComponent(greenhouse)}/mode`, {
      method: "PUT",
      ...this.body({ mode }),
    });
  }

  valve(greenhouse: string, action: "open" | "close"): Promise<CommandAck> {
    return this.request(`/greenhouses/${encodeURIComponent(greenhouse)}/valve`, {
      method: "POST",
      ...this.body({ action }),
    });
  }

  summary(warmUp = 0): Promise<SummaryResponse> {
    return this.request(`/metrics/summary?warm_up=${warmUp}`);
  }
}

/** Band submission path: validate locally, call the API only when the band
 *  is well formed.  Returns the error to show, or null on success. */
export async function applyBand(
  api: EdgeApi,
  greenhouse: string,
  lowRaw: string,
  highRaw: string,
): Promise<string | null> {
  const check = validateBand(lowRaw, highRaw);
  if (!check.ok) return check.error;
  await api.setBand(greenhouse, check.low, check.high);
  return null;
}
