import { describe, expect, it } from "vitest";

import type { GreenhouseStatus, SeriesResponse, StatusResponse } from "../src/model.js";
import { esc, renderHeader, renderSeriesTable, renderSparkline, renderStatusTable } from "../src/ui.js";

const gh = (over: Partial<GreenhouseStatus> = {}): GreenhouseStatus => ({
  greenhouse: "B",
  mode: "auto",
  valve_belief: "closed",
  aggregate: 52.1234,
  aggregate_stale: false,
  band: { low_lim: 50, upper_lim: 55 },
  strategy: "hysteresis",
  samples_stored: 42,
  first_sample_at: 60,
  last_sample_at: 600,
  ...over,
});

const status = (over: Partial<StatusResponse> = {}): StatusResponse => ({
  now: 93784,
  edge_mode: "edge_only",
  egress_records: 0,
  greenhouses: [gh()],
  ...over,
});

describe("esc", () => {
  it("neutralises markup", () => {
    expect(esc('<script>alert("x")</script>')).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt;",
    );
  });
});

describe("renderHeader", () => {
  it("shows the sim clock and edge mode when online", () => {
    const html = renderHeader(status(), true);
    expect(html).toContain("1d 02:03:04");
    expect(html).toContain("edge_only");
    expect(html).not.toContain("stale-banner");
  });

  it("shows the stale banner when offline, keeping the last data", () => {
    const html = renderHeader(status(), false);
    expect(html).toContain('data-role="stale-banner"');
    expect(html).toContain("unreachable");
    expect(html).toContain("1d 02:03:04");
  });

  it("shows only the banner before the first poll succeeds", () => {
    const html = renderHeader(null, false);
    expect(html).toContain("stale-banner");
    expect(html).not.toContain("sim clock");
  });
});

describe("renderStatusTable", () => {
  it("renders one row per greenhouse with band and aggregate", () => {
    const html = renderStatusTable([gh(), gh({ greenhouse: "A", band: null, aggregate: null })]);
    expect(html).toContain('data-gh="B"');
    expect(html).toContain("52.12");
    expect(html).toContain("50..55");
    expect(html).toContain('data-gh="A"');
    expect(html.match(/<td>-<\/td>/g)?.length).toBeGreaterThanOrEqual(2);
  });

  it("marks a stale aggregate", () => {
    const html = renderStatusTable([gh({ aggregate_stale: true })]);
    expect(html).toContain("stale-mark");
  });

  it("escapes hostile greenhouse ids", () => {
    const html = renderStatusTable([gh({ greenhouse: '<img src=x onerror="1">' })]);
    expect(html).not.toContain("<img");
  });
});

const series = (records: SeriesResponse["records"], metric: SeriesResponse["metric"]): SeriesResponse => ({
  greenhouse: "B",
  metric,
  t_from: 0,
  t_to: 1000,
  records,
});

describe("renderSeriesTable", () => {
  it("shows command origin so a manual override is visible", () => {
    const html = renderSeriesTable(
      series(
        [{ t: 120.5, kind: "command", actuator: 102, action: "open", origin: "manual_operator" }],
        "commands",
      ),
    );
    expect(html).toContain("manual_operator");
    expect(html).toContain("open");
    expect(html).toContain("120.50");
  });

  it("renders newest records first and respects the limit", () => {
    const records = Array.from({ length: 30 }, (_, i) => ({
      t: i * 60,
      kind: "sample",
      mote: 3,
      moisture: 50 + i * 0.1,
      sampled_at: i * 60,
    }));
    const html = renderSeriesTable(series(records, "moisture"), 5);
    expect(html).toContain("52.90");
    expect(html).not.toContain(">52.40<");
    expect(html.indexOf("52.90")).toBeLessThan(html.indexOf("52.60"));
  });

  it("says so when the window is empty", () => {
    expect(renderSeriesTable(series([], "valve"))).toContain("no valve records");
  });
});

describe("renderSparkline", () => {
  it("plots the moisture trace with the band shaded", () => {
    const html = renderSparkline(
      series(
        [
          { t: 0, kind: "sample", moisture: 50 },
          { t: 60, kind: "sample", moisture: 52 },
          { t: 120, kind: "sample", moisture: 54 },
        ],
        "moisture",
      ),
      { low_lim: 50, upper_lim: 55 },
    );
    expect(html).toContain("<svg");
    expect(html).toContain("polyline");
    expect(html).toContain('class="band"');
  });

  it("returns nothing for fewer than two points", () => {
    expect(renderSparkline(series([], "moisture"), null)).toBe("");
  });
});
