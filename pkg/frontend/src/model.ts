// Types mirror the edge service's JSON bodies one to one; field names are
// the wire names, not TS-style camelCase.

export type Metric = "moisture" | "valve" | "commands";

export interface Band {
  low_lim: number;
  upper_lim: number;
}

export interface GreenhouseStatus {
  greenhouse: string;
  mode: "auto" | "manual";
  valve_belief: "open" | "closed" | "unknown";
  aggregate: number | null;
  aggregate_stale: boolean;
  band: Band | null;
  strategy: string;
  samples_stored: number;
  first_sample_at: number | null;
  last_sample_at: number | null;
}

export interface StatusResponse {
  now: number;
  edge_mode: string;
  egress_records: number;
  greenhouses: GreenhouseStatus[];
}

export interface SeriesRecord {
  t: number;
  kind: string;
  [key: string]: unknown;
}

export interface SeriesResponse {
  greenhouse: string;
  metric: Metric;
  t_from: number;
  t_to: number;
  records: SeriesRecord[];
}

export interface CommandAck {
  greenhouse: string;
  action: string;
  origin: string;
  issued_at: number;
}

export interface SummaryRow {
  greenhouse: string;
  mean: number;
  stddev: number;
  amplitude: number;
  time_in_band: number;
  valve_open_hours: number;
  water_liters: number;
  commands: number;
  drops: number;
}

export interface SummaryResponse {
  now: number;
  rows: SummaryRow[];
}

export interface OkResponse {
  ok: boolean;
}

export type BandCheck =
  | { ok: true; low: number; high: number }
  | { ok: false; error: string };

/** Client-side mirror of the server's band rules.  A band that fails here
 *  must never be sent to the API. */
export function validateBand(lowRaw: string, highRaw: string): BandCheck {
  const lowText = lowRaw.trim();
  const highText = highRaw.trim();
  const low = Number(lowText);
  const high = Number(highText);
  if (lowText === "" || highText === "" || !Number.isFinite(low) || !Number.isFinite(high)) {
    return { ok: false, error: "band limits must be numbers" };
  }
  if (low < 0 || low > 100 || high < 0 || high > 100) {
    return { ok: false, error: "band limits must be within 0..100" };
  }
  if (!(low < high)) {
    return { ok: false, error: "band inverted: the low limit must be strictly below the upper limit" };
  }
  return { ok: true, low, high };
}

/** "93784.2" -> "1d 02:03:04" */
export function formatSimClock(seconds: number): string {
  const s = Math.max(0, Math.floor(seconds));
  const days = Math.floor(s / 86400);
  const hh = String(Math.floor((s % 86400) / 3600)).padStart(2, "0");
  const mm = String(Math.floor((s % 3600) / 60)).padStart(2, "0");
  const ss = String(s % 60).padStart(2, "0");
  return `${days}d ${hh}:${mm}:${ss}`;
}
