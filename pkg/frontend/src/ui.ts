// HTML string builders, kept free of DOM access so they run under plain
// node in the tests.

import type { Band, GreenhouseStatus, SeriesRecord, SeriesResponse, StatusResponse } from "./model.js";
import { formatSimClock } from "./model.js";

export function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function renderHeader(status: StatusResponse | null, online: boolean): string {
  const parts: string[] = [];
  if (!online) {
    parts.push(
      '<div class="banner stale" data-role="stale-banner">' +
      "edge node unreachable; showing the last known data</div>",
    );
  }
  if (status !== null) {
    parts.push(
      `<div class="clock">sim clock ${formatSimClock(status.now)}</div>` +
      `<div class="edge-mode">${esc(status.edge_mode)}, egress records ${status.egress_records}</div>`,
    );
  }
  return parts.join("\n");
}

function bandText(band: Band | null): string {
  return band === null ? "-" : `${band.low_lim}..${band.upper_lim}`;
}

export function renderStatusTable(rows: GreenhouseStatus[]): string {
  const body = rows
    .map((g) => {
      const agg =
        g.aggregate === null
          ? "-"
          : g.aggregate.toFixed(2) + (g.aggregate_stale ? ' <span class="stale-mark">stale</span>' : "");
      return (
        `<tr data-gh="${esc(g.greenhouse)}">` +
        `<td>${esc(g.greenhouse)}</td>` +
        `<td>${esc(g.strategy)}</td>` +
        `<td>${esc(g.mode)}</td>` +
        `<td>${esc(g.valve_belief)}</td>` +
        `<td>${agg}</td>` +
        `<td>${esc(bandText(g.band))}</td>` +
        `<td>${g.samples_stored}</td>` +
        "</tr>"
      );
    })
    .join("");
  return (
    '<table class="status"><thead><tr>' +
    "<th>greenhouse</th><th>strategy</th><th>mode</th><th>valve</th>" +
    "<th>moisture %</th><th>band</th><th>samples</th>" +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

const SERIES_COLUMNS: Record<string, string[]> = {
  moisture: ["t", "mote", "moisture", "sampled_at"],
  valve: ["t", "state"],
  commands: ["t", "actuator", "action", "origin"],
};

function cell(record: SeriesRecord, column: string): string {
  const value = record[column];
  if (value === undefined || value === null) return "-";
  if (typeof value === "number") {
    return Number.isInteger(value) ? String(value) : value.toFixed(2);
  }
  return esc(String(value));
}

export function renderSeriesTable(series: SeriesResponse, limit = 20): string {
  const recent = series.records.slice(-limit).reverse();
  if (recent.length === 0) {
    return `<p class="empty">no ${esc(series.metric)} records in the window</p>`;
  }
  const columns = SERIES_COLUMNS[series.metric] ?? ["t", "kind"];
  const head = columns.map((c) => `<th>${esc(c)}</th>`).join("");
  const body = recent
    .map((r) => `<tr>${columns.map((c) => `<td>${cell(r, c)}</td>`).join("")}</tr>`)
    .join("");
  return (
    `<table class="series"><thead><tr>${head}</tr></thead>` +
    `<tbody>${body}</tbody></table>`
  );
}

/** Inline SVG of the moisture trace with the target band shaded behind it.
 *  Returns "" when there is nothing to plot. */
export function renderSparkline(series: SeriesResponse, band: Band | null, width = 320, height = 64): string {
  const points = series.records
    .filter((r) => typeof r["moisture"] === "number")
    .map((r) => ({ t: r.t, m: r["moisture"] as number }));
  if (points.length < 2) return "";
  const t0 = points[0]!.t;
  const t1 = points[points.length - 1]!.t;
  const span = t1 - t0 || 1;
  const x = (t: number) => ((t - t0) / span) * width;
  const y = (m: number) => height - (m / 100) * height;
  const path = points.map((p) => `${x(p.t).toFixed(1)},${y(p.m).toFixed(1)}`).join(" ");
  let bandRect = "";
  if (band !== null) {
    const top = y(band.upper_lim);
    const bottom = y(band.low_lim);
    bandRect =
      `<rect class="band" x="0" y="${top.toFixed(1)}" width="${width}" ` +
      `height="${(bottom - top).toFixed(1)}"></rect>`;
  }
  return (
    `<svg class="spark" viewBox="0 0 ${width} ${height}" preserveAspectRatio="none" role="img">` +
    bandRect +
    `<polyline points="${path}" fill="none"></polyline>` +
    "</svg>"
  );
}
