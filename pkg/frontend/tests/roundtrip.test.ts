// End-to-end over real HTTP against a faithful in-memory edge node running
// at time-scale 60 (one wall second is one simulated minute).

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, EdgeApi, applyBand } from "../src/api.js";
import type { SeriesResponse } from "../src/model.js";
import { Poller } from "../src/poller.js";
import { renderSeriesTable } from "../src/ui.js";
import { FakeEdge, startFakeEdge } from "./fake_edge.js";

let edge: FakeEdge;
let api: EdgeApi;

beforeAll(async () => {
  edge = await startFakeEdge(60);
  api = new EdgeApi(edge.url);
});

afterAll(async () => {
  await edge.close();
});

describe("operator round trip", () => {
  it("reads live status over the wire", async () => {
    edge.addSample(52.4);
    const status = await api.status();
    expect(status.edge_mode).toBe("edge_only");
    expect(status.greenhouses).toHaveLength(1);
    expect(status.greenhouses[0]!.greenhouse).toBe("B");
    expect(status.greenhouses[0]!.aggregate).toBeCloseTo(52.4);
  });

  it("refuses a manual override while the loop is in auto", async () => {
    await api.setMode("B", "auto");
    const attempt = api.valve("B", "open");
    await expect(attempt).rejects.toBeInstanceOf(ApiError);
    await expect(attempt).rejects.toMatchObject({ status: 409 });
  });

  it("shows a manual override in the command series within two polls", async () => {
    // The console polls the command series; an operator override must be
    // visible there, attributed to the operator, within two intervals.
    let latest: SeriesResponse | null = null;
    let polls = 0;
    const poller = new Poller(
      () => {
        polls += 1;
        return api.series("B", "commands");
      },
      50,
      { onData: (s) => (latest = s) },
    );

    await api.setMode("B", "manual");
    const ack = await api.valve("B", "open");
    expect(ack.origin).toBe("manual_operator");

    const pollsBefore = polls;
    let found: SeriesResponse | null = null;
    for (let i = 0; i < 2 && found === null; i++) {
      await poller.tick();
      const commands = (latest as SeriesResponse | null)?.records ?? [];
      if (commands.some((r) => r["origin"] === "manual_operator" && r["action"] === "open")) {
        found = latest;
      }
    }
    expect(found).not.toBeNull();
    expect(polls - pollsBefore).toBeLessThanOrEqual(2);

    // and the rendered table surfaces the attribution
    expect(renderSeriesTable(found!)).toContain("manual_operator");

    const status = await api.status();
    expect(status.greenhouses[0]!.mode).toBe("manual");
    expect(status.greenhouses[0]!.valve_belief).toBe("open");
  });

  it("never sends an inverted band to the API", async () => {
    const before = edge.bandRequests;
    const error = await applyBand(api, "B", "61", "52.5");
    expect(error).toContain("inverted");
    expect(edge.bandRequests).toBe(before); // rejected before any request
  });

  it("applies a well formed band and sees it in the next status", async () => {
    const error = await applyBand(api, "B", "48", "58.5");
    expect(error).toBeNull();
    const status = await api.status();
    expect(status.greenhouses[0]!.band).toEqual({ low_lim: 48, upper_lim: 58.5 });
  });

  it("surfaces the server detail when the server itself rejects a band", async () => {
    // Defence in depth: the server still validates whatever arrives.
    await expect(api.setBand("B", 60, 50)).rejects.toMatchObject({
      status: 422,
      message: expect.stringContaining("inverted") as unknown,
    });
  });

  it("404s for an unknown greenhouse", async () => {
    await expect(api.series("nope", "moisture")).rejects.toMatchObject({ status: 404 });
  });

  it("goes stale when the edge disappears and recovers when it returns", async () => {
    const flaky = await startFakeEdge(60);
    const flakyApi = new EdgeApi(flaky.url);
    const poller = new Poller(() => flakyApi.status(), 50, { onData: () => {} });
    await poller.tick();
    expect(poller.online).toBe(true);
    await flaky.close();
    await poller.tick();
    expect(poller.online).toBe(false);
  });
});
