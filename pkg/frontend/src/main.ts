// DOM wiring; all rendering and API logic lives in the testable modules.

import { ApiError, EdgeApi, applyBand } from "./api.js";
import type { Metric, SeriesResponse, StatusResponse } from "./model.js";
import { Poller } from "./poller.js";
import { renderHeader, renderSeriesTable, renderSparkline, renderStatusTable } from "./ui.js";

const POLL_MS = 2000;

const api = new EdgeApi(new URLSearchParams(location.search).get("api") ?? "");

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
};

let lastStatus: StatusResponse | null = null;
let selected: string | null = null;
let metric: Metric = "moisture";

function note(text: string, isError = false): void {
  const box = el("notice");
  box.textContent = text;
  box.className = isError ? "notice error" : "notice";
}

function redraw(): void {
  el("header").innerHTML = renderHeader(lastStatus, statusPoller.online);
  if (lastStatus !== null) {
    el("status").innerHTML = renderStatusTable(lastStatus.greenhouses);
    el("selected-gh").textContent = selected ?? "";
  }
}

const statusPoller = new Poller(() => api.status(), POLL_MS, {
  onData: (status) => {
    lastStatus = status;
    if (selected === null && status.greenhouses.length > 0) {
      selected = status.greenhouses[0]!.greenhouse;
    }
    redraw();
  },
  onError: () => redraw(),
});

const seriesPoller = new Poller<SeriesResponse | null>(
  () => (selected === null ? Promise.resolve(null) : api.series(selected, metric)),
  POLL_MS,
  {
    onData: (series) => {
      if (series === null) return;
      const band =
        lastStatus?.greenhouses.find((g) => g.greenhouse === series.greenhouse)?.band ?? null;
      el("series").innerHTML =
        (metric === "moisture" ? renderSparkline(series, band) : "") +
        renderSeriesTable(series);
    },
  },
);

function requireSelection(): string | null {
  if (selected === null) note("no greenhouse selected yet", true);
  return selected;
}

async function guarded(run: () => Promise<void>): Promise<void> {
  try {
    await run();
  } catch (err) {
    note(err instanceof ApiError ? err.message : String(err), true);
  }
}

el("status").addEventListener("click", (event) => {
  const row = (event.target as HTMLElement).closest("tr[data-gh]");
  const gh = row?.getAttribute("data-gh");
  if (gh) {
    selected = gh;
    redraw();
    void seriesPoller.tick();
  }
});

el("band-form").addEventListener("submit", (event) => {
  event.preventDefault();
  const gh = requireSelection();
  if (gh === null) return;
  const low = (el("band-low") as HTMLInputElement).value;
  const high = (el("band-high") as HTMLInputElement).value;
  void guarded(async () => {
    const error = await applyBand(api, gh, low, high);
    if (error !== null) {
      note(error, true);
    } else {
      note(`band updated for ${gh}`);
      await statusPoller.tick();
    }
  });
});

for (const mode of ["auto", "manual"] as const) {
  el(`mode-${mode}`).addEventListener("click", () => {
    const gh = requireSelection();
    if (gh === null) return;
    void guarded(async () => {
      await api.setMode(gh, mode);
      note(`${gh} switched to ${mode}`);
      await statusPoller.tick();
    });
  });
}

for (const action of ["open", "close"] as const) {
  el(`valve-${action}`).addEventListener("click", () => {
    const gh = requireSelection();
    if (gh === null) return;
    void guarded(async () => {
      const ack = await api.valve(gh, action);
      note(`${ack.greenhouse}: valve ${ack.action} accepted (${ack.origin})`);
      await statusPoller.tick();
    });
  });
}

el("metric").addEventListener("change", (event) => {
  metric = (event.target as HTMLSelectElement).value as Metric;
  void seriesPoller.tick();
});

statusPoller.start();
seriesPoller.start();
